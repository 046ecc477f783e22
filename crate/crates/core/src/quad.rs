//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Nodes never touch interval endpoints, so integrands with integrable
//! endpoint singularities (`log p`, `z(p)`) are evaluated safely; repeated
//! bisection toward the singular end does the rest.

use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<S> {
    pub abs: S,
    pub rel: S,
    pub max_intervals: usize,
}

impl<S: Scalar> Tolerance<S> {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs: S::lit(abs),
            rel: S::lit(rel),
            max_intervals: 4000,
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl<S: Scalar> Default for Tolerance<S> {
    fn default() -> Self {
        Self::new(1e-11, 1e-12)
    }
}

/// Result of a quadrature: value, error estimate and number of integrand calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<S> {
    pub value: S,
    pub abs_err: S,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<S> {
    a: S,
    b: S,
    value: S,
    err: S,
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> (S, S) {
    let center = S::half() * (a + b);
    let half = S::half() * (b - a);
    let f_center = f(center);

    let mut res_g = f_center * S::lit(WG[3]);
    let mut res_k = f_center * S::lit(WGK[7]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [S::zero(); 7];
    let mut fv2 = [S::zero(); 7];

    for j in 0..7 {
        let dx = half * S::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let wk = S::lit(WGK[j]);
        res_k = res_k + wk * (f1 + f2);
        res_abs = res_abs + wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + S::lit(WG[j / 2]) * (f1 + f2);
        }
    }

    let mean = res_k * S::half();
    let mut res_asc = S::lit(WGK[7]) * (f_center - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + S::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let abs_half = half.abs();
    let value = res_k * half;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != S::zero() && err != S::zero() {
        let scale = (S::lit(200.0) * err / res_asc).powf(S::lit(1.5));
        err = if scale < S::one() { res_asc * scale } else { res_asc };
    }
    let floor = S::lit(50.0) * S::epsilon() * res_abs;
    if res_abs > S::min_positive_value() / (S::lit(50.0) * S::epsilon()) && floor > err {
        err = floor;
    }
    (value, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<S, F>(f: F, a: S, b: S, tol: Tolerance<S>) -> Integral<S>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[points[0], points[last]]`, starting with one panel
/// per consecutive pair of (sorted) break points.
pub fn integrate_with_breaks<S, F>(f: F, points: &[S], tol: Tolerance<S>) -> Integral<S>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    let mut active: Vec<Segment<S>> = Vec::new();
    let mut frozen_value = S::zero();
    let mut frozen_err = S::zero();
    let mut evals = 0usize;

    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, err) = gk15(&f, a, b);
        evals += 15;
        active.push(Segment { a, b, value, err });
    }

    // frozen panels cannot be refined, so their error may keep the total
    // above target; bisections are capped as well
    let mut budget = 64 * tol.max_intervals;
    loop {
        let value = frozen_value + active.iter().map(|s| s.value).sum::<S>();
        let err = frozen_err + active.iter().map(|s| s.err).sum::<S>();
        let target = tol.abs.max(tol.rel * value.abs());
        let (idx, worst) = active
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |(bi, be), (i, s)| {
                if s.err > be {
                    (i, s.err)
                } else {
                    (bi, be)
                }
            });
        if err <= target
            || active.is_empty()
            || active.len() >= tol.max_intervals
            || !err.is_finite()
            || !(worst > S::zero())
            || budget == 0
        {
            return Integral {
                value,
                abs_err: err,
                evals,
            };
        }
        budget -= 1;

        let seg = active.swap_remove(idx);
        let mid = S::half() * (seg.a + seg.b);
        let tiny = S::lit(4.0) * S::epsilon() * seg.a.abs().max(seg.b.abs()).max(S::min_positive_value());
        if seg.b - seg.a <= tiny || mid <= seg.a || mid >= seg.b {
            frozen_value = frozen_value + seg.value;
            frozen_err = frozen_err + seg.err;
            continue;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evals += 30;
        // children whose nodes round onto a singular endpoint keep the parent
        if !(v1 + v2).is_finite() && seg.value.is_finite() {
            frozen_value = frozen_value + seg.value;
            frozen_err = frozen_err + seg.err;
            continue;
        }
        active.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            err: e1,
        });
        active.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            err: e2,
        });
    }
}

//! Evaluation of `Φ_h(Π)` by the quantile route and the survival route.

use crate::dist::{Distribution, Kind, Shape};
use crate::distortion::{Distortion, Slope};
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Quantile,
    Survival,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Quantile => "quantile",
            Route::Survival => "survival",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerValue<S> {
    pub value: S,
    pub route: Route,
    pub est_abs_error: S,
}

fn sorted_unique<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

fn tolerance<S: Scalar>() -> Tolerance<S> {
    Tolerance::new(1e-13, 1e-12)
}

/// `Φ_h(Π) = ∫₀¹ Q(1 − p) dh(p)`.
///
/// Jumps of `h` contribute `Q(1 − p)·Δh`; the absolutely continuous part is
/// summed exactly where either `h′` is constant or `Q` is flat, and by
/// adaptive quadrature elsewhere. A jump of `h` at an interior level where
/// `Q(1 − ·)` also jumps is rejected.
pub fn phi_quantile<S: Scalar>(d: &Distortion<S>, dist: &Distribution<S>) -> Result<RegularizerValue<S>> {
    let one = S::one();
    let mut value = S::zero();
    let mut err = S::zero();

    for j in d.jumps() {
        if j.p <= S::zero() {
            value = value + (j.right - j.value) * dist.left_quantile(one);
        } else if j.p >= one {
            value = value + (j.value - j.left) * dist.right_quantile(S::zero());
        } else if j.right != j.left {
            if !dist.is_continuous_at(one - j.p) {
                return Err(Error::MixedDiscontinuity { p: j.p.as_f64() });
            }
            value = value + (j.right - j.left) * dist.left_quantile(one - j.p);
        }
    }

    let slopes = d.hprime_pieces();
    let shapes = dist.pieces();
    let mut cuts = vec![S::zero(), one];
    cuts.extend(slopes.iter().flat_map(|pc| [pc.lo, pc.hi]));
    cuts.extend(dist.breakpoints().into_iter().map(|b| one - b));
    let cuts = sorted_unique(cuts);

    let mut smooth: Vec<(S, S)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = S::half() * (a + b);
        let slope = slopes
            .iter()
            .find(|pc| pc.lo <= mid && mid <= pc.hi)
            .map(|pc| pc.slope)
            .unwrap_or(Slope::Smooth);
        let r_mid = one - mid;
        let shape = shapes
            .iter()
            .find(|pc| pc.lo <= r_mid && r_mid <= pc.hi)
            .map(|pc| pc.shape)
            .unwrap_or(Shape::Smooth);
        match (slope, shape) {
            (Slope::Const(v), _) => {
                if v != S::zero() {
                    value = value + v * dist.integrated_quantile(one - b, one - a);
                }
            }
            (Slope::Smooth, Shape::Flat(x)) => {
                value = value + x * (d.eval_h(b)? - d.eval_h(a)?);
            }
            (Slope::Smooth, _) => smooth.push((a, b)),
        }
    }

    for (a, b) in smooth {
        let f = |p: S| {
            let hp = d.eval_hprime(p).unwrap_or(S::zero());
            dist.upper_quantile(p) * hp
        };
        let r = integrate_with_breaks(f, &[a, b], tolerance());
        value = value + r.value;
        err = err + r.abs_err;
    }

    Ok(RegularizerValue {
        value,
        route: Route::Quantile,
        est_abs_error: err,
    })
}

/// `Φ_h(Π) = ∫_{−∞}^0 (h(S(x)) − h(1)) dx + ∫_0^∞ h(S(x)) dx` with
/// `S(x) = Π([x, ∞))`.
///
/// Unbounded tails are integrated panel by panel with doubling widths until
/// a panel contributes less than `1e-14`; the last panel's size is added to
/// the error estimate.
pub fn phi_survival<S: Scalar>(d: &Distortion<S>, dist: &Distribution<S>) -> Result<RegularizerValue<S>> {
    let one = S::one();
    let h1 = d.eval_h(one)?;
    let g = |x: S| {
        let s = dist.survival(x).max(S::zero()).min(one);
        let hs = d.eval_h(s).unwrap_or(S::zero());
        if x < S::zero() {
            hs - h1
        } else {
            hs
        }
    };

    let (lo, hi) = dist.support();
    let core_lo = if lo.is_finite() { lo } else { dist.left_quantile(c(1e-3)) };
    let core_hi = if hi.is_finite() { hi } else { dist.upper_quantile(c(1e-3)) };

    let mut pts = vec![core_lo, core_hi];
    if h1 != S::zero() {
        pts.push(S::zero());
    }
    for b in dist.breakpoints() {
        pts.push(dist.left_quantile(b));
        pts.push(dist.right_quantile(b));
    }
    let mut levels = d.hprime_breaks();
    levels.extend(d.jumps().iter().map(|j| j.p));
    for p in levels {
        if p > S::zero() && p < one {
            pts.push(dist.upper_quantile(p));
            pts.push(dist.right_quantile(one - p));
        }
    }
    let mut pts = sorted_unique(pts);
    pts.retain(|&x| x >= core_lo.min(S::zero()) && x <= core_hi.max(S::zero()));
    if h1 == S::zero() {
        pts.retain(|&x| x >= core_lo && x <= core_hi);
    }

    let core = integrate_with_breaks(&g, &pts, tolerance());
    let mut value = core.value;
    let mut err = core.abs_err;

    let width0 = (core_hi - core_lo).max(one);
    let tail_tol: S = c(1e-14);
    if !hi.is_finite() {
        let (mut x0, mut w) = (pts[pts.len() - 1], width0);
        for _ in 0..200 {
            let r = integrate_with_breaks(&g, &[x0, x0 + w], tolerance());
            value = value + r.value;
            err = err + r.abs_err;
            x0 = x0 + w;
            w = w * S::two();
            if r.value.abs() < tail_tol {
                err = err + r.value.abs();
                break;
            }
        }
    }
    if !lo.is_finite() {
        let (mut x0, mut w) = (pts[0], width0);
        for _ in 0..200 {
            let r = integrate_with_breaks(&g, &[x0 - w, x0], tolerance());
            value = value + r.value;
            err = err + r.abs_err;
            x0 = x0 - w;
            w = w * S::two();
            if r.value.abs() < tail_tol {
                err = err + r.value.abs();
                break;
            }
        }
    }

    Ok(RegularizerValue {
        value,
        route: Route::Survival,
        est_abs_error: err,
    })
}

/// Shorthand for the quantile-route value.
pub fn phi<S: Scalar>(d: &Distortion<S>, dist: &Distribution<S>) -> Result<S> {
    phi_quantile(d, dist).map(|v| v.value)
}

/// Shannon differential entropy `−∫ f log f` for absolutely continuous laws.
///
/// Tabulated laws use `∫₀¹ log Q′(p) dp` and must be strictly increasing.
pub fn differential_entropy<S: Scalar>(dist: &Distribution<S>) -> Result<S> {
    match dist.kind() {
        Kind::Uniform { a, b } => Ok((*b - *a).ln()),
        Kind::Normal { sd, .. } => {
            Ok(S::half() * (S::two() * S::PI() * S::E() * *sd * *sd).ln())
        }
        Kind::ShiftedExponential { rate, .. } => Ok(S::one() - rate.ln()),
        Kind::Grid { p, q } => {
            // repeated p is a gap in the support and contributes nothing
            let mut acc = S::zero();
            for i in 0..p.len() - 1 {
                let dp = p[i + 1] - p[i];
                if dp == S::zero() {
                    continue;
                }
                let dq = q[i + 1] - q[i];
                if dq <= S::zero() {
                    return Err(Error::Unsupported(
                        "differential entropy of a law with atoms".into(),
                    ));
                }
                acc = acc + dp * (dq / dp).ln();
            }
            Ok(acc)
        }
        _ => Err(Error::Unsupported(format!(
            "differential entropy needs an absolutely continuous law, got {}",
            dist.tag()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    type D = Distortion<f64>;
    type P = Distribution<f64>;

    #[test]
    fn gini_of_uniform() {
        // oracle: ∫₀¹ (1 − p)(1 − 2p) dp
        let oracle = integrate(|p: f64| (1.0 - p) * (1.0 - 2.0 * p), 0.0, 1.0, Tolerance::default()).value;
        let u = P::uniform(0.0, 1.0).unwrap();
        let q = phi_quantile(&D::gini(), &u).unwrap();
        let s = phi_survival(&D::gini(), &u).unwrap();
        assert!((q.value - oracle).abs() < 1e-14);
        assert!((s.value - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(q.route, Route::Quantile);
        assert_eq!(s.route, Route::Survival);
    }

    #[test]
    fn cre_of_exponential() {
        // oracle: ∫₀¹ Q(1 − p) h′(p) dp = ∫₀¹ (−log p)(−log p − 1) dp
        let oracle = integrate(
            |p: f64| -p.ln() * (-p.ln() - 1.0),
            0.0,
            1.0,
            Tolerance::new(1e-14, 1e-14),
        )
        .value;
        let e = P::shifted_exponential(0.0, 1.0).unwrap();
        let v = phi(&D::cre(), &e).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
        assert!((v - 1.0).abs() < 1e-9);
        let s = phi_survival(&D::cre(), &e).unwrap().value;
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn eps_greedy_of_bernoulli() {
        let eps = 0.3;
        let b = P::two_point(0.0, 1.0, eps).unwrap();
        let v = phi(&D::eps_greedy(eps).unwrap(), &b).unwrap();
        assert!((v - eps * (1.0 - eps)).abs() < 1e-15);
    }

    #[test]
    fn dirac_has_zero_regularizer() {
        let dirac = P::dirac(2.5);
        for d in [D::gini(), D::cre(), D::gaussian_score(), D::inter_es(0.75).unwrap()] {
            assert_eq!(phi(&d, &dirac).unwrap(), 0.0);
            assert!(phi_survival(&d, &dirac).unwrap().value.abs() < 1e-15);
        }
    }

    #[test]
    fn wasserstein_of_symmetric_two_point() {
        let pm = P::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let d = D::wasserstein_sym();
        assert!((phi(&d, &pm).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi_survival(&d, &pm).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_on_catalog_pairs() {
        let ds = vec![
            D::eps_greedy(0.4).unwrap(),
            D::discrete_uniform(0.4, 3).unwrap(),
            D::cre(),
            D::gaussian_score(),
            D::inter_es(0.75).unwrap(),
            D::wasserstein_sym(),
            D::wasserstein_asym(0.8).unwrap(),
            D::gini(),
        ];
        let laws = vec![
            P::uniform(-1.0, 2.0).unwrap(),
            P::normal(0.5, 1.5).unwrap(),
            P::shifted_exponential(-1.0, 2.0).unwrap(),
            P::discrete(&[(-1.0, 0.2), (0.5, 0.5), (3.0, 0.3)]).unwrap(),
            P::grid(vec![0.0, 0.3, 0.3, 1.0], vec![-2.0, -1.0, 0.0, 4.0]).unwrap(),
        ];
        for d in &ds {
            for law in &laws {
                let q = phi_quantile(d, law).unwrap().value;
                let s = phi_survival(d, law).unwrap().value;
                assert!((q - s).abs() < 1e-6, "{} on {law}: {q} vs {s}", d.tag());
            }
        }
    }

    #[test]
    fn mixed_discontinuity_is_rejected() {
        let step = D::piecewise_linear(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.5, 0.0, 0.0]).unwrap();
        let pm = P::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!(matches!(phi_quantile(&step, &pm), Err(Error::MixedDiscontinuity { .. })));
        let u = P::uniform(0.0, 1.0).unwrap();
        assert!(phi_quantile(&step, &u).is_ok());
    }

    #[test]
    fn jump_at_endpoints_measures_range() {
        // h = 1 on (0, 1): Φ is the support width
        let h = D::piecewise_linear(vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let u = P::uniform(-1.0, 2.0).unwrap();
        assert!((phi(&h, &u).unwrap() - 3.0).abs() < 1e-15);
        assert!((phi_survival(&h, &u).unwrap().value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_closed_forms() {
        assert_eq!(differential_entropy(&P::uniform(0.0, 1.0).unwrap()).unwrap(), 0.0);
        assert!((differential_entropy(&P::uniform(0.0, 2.0).unwrap()).unwrap() - 2f64.ln()).abs() < 1e-15);
        // oracle: −∫ φ log φ over the real line
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let neg_log_pdf = |x: f64| 0.5 * x * x + 0.5 * (2.0 * std::f64::consts::PI).ln();
        let oracle = integrate(|x: f64| pdf(x) * neg_log_pdf(x), -40.0, 40.0, Tolerance::new(1e-14, 1e-14)).value;
        let n = differential_entropy(&P::normal(0.0, 1.0).unwrap()).unwrap();
        assert!((n - oracle).abs() < 1e-10 && (n - 1.41894).abs() < 1e-5);
        assert!(differential_entropy(&P::dirac(0.0)).is_err());
        let g = P::grid(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert!((differential_entropy(&g).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_is_not_scale_homogeneous() {
        let x = P::normal(0.0, 1.0).unwrap();
        let x2 = x.affine(0.0, 2.0).unwrap();
        let gap = differential_entropy(&x2).unwrap() - differential_entropy(&x).unwrap();
        assert!((gap - 2f64.ln()).abs() < 1e-14);
        assert!((gap - differential_entropy(&x).unwrap()).abs() > 0.1);
    }
}

//! Distortion functions `h` on `[0, 1]` and their right-derivatives.
//!
//! A Choquet regularizer is fixed by a concave `h` with `h(0) = h(1) = 0`.
//! Every kind here carries closed forms for `h`, `h′` and `‖h′‖₂²`, plus a
//! piece decomposition of `h′` that lets the integrators treat piecewise-
//! constant derivatives exactly.

use crate::dist::{Distribution, Shape};
use crate::error::{domain, Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::scalar::{c, normal_pdf, normal_quantile, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum DistortionKind<S> {
    /// `h(p) = p∧ε − εp`.
    EpsGreedy { eps: S },
    /// (2n+1)-point exploration with mass `1 − ε` at the centre.
    DiscreteUniform { eps: S, n: usize },
    /// Cumulative residual entropy, `h(p) = −p log p`.
    Cre,
    /// `h(p) = φ(z(p))`, so `h′(p) = z(1 − p)`.
    GaussianScore,
    /// `ES_α − ES⁻_{1−α}` scaled: `h(p) = p/(1−α)∧1 + (α−p)/(1−α)∧0`.
    InterEs { alpha: S },
    /// `h(p) = p∧(1 − p)`.
    WassersteinSym,
    /// `h(p) = αp` below `1 − α`, `(1 − α)(1 − p)` above.
    WassersteinAsym { alpha: S },
    /// `h(p) = p − p²`.
    Gini,
    /// Linear interpolation of `(p, h)` nodes; a repeated `p` is a jump. At an
    /// interior jump the value is the largest node value, at `0` and `1` it
    /// is the outermost node.
    PiecewiseLinear { p: Vec<S>, h: Vec<S> },
    /// `h′(p) = Q(1 − p) − m` for a source law with mean `m`.
    FromQuantile { source: Distribution<S>, mean: S },
}

/// Shape of `h′` on one piece of `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope<S> {
    Const(S),
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePiece<S> {
    pub lo: S,
    pub hi: S,
    pub slope: Slope<S>,
}

/// A point where `h` is not continuous: `h(p−)`, `h(p)`, `h(p+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump<S> {
    pub p: S,
    pub left: S,
    pub value: S,
    pub right: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityReport {
    pub boundary_ok: bool,
    pub concave_ok: bool,
    pub nonneg_ok: bool,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.boundary_ok && self.concave_ok && self.nonneg_ok
    }
}

/// A distortion function scaled by a positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion<S> {
    kind: DistortionKind<S>,
    weight: S,
}

fn unit_open<S: Scalar>(what: &'static str, x: S) -> Result<S> {
    if x > S::zero() && x < S::one() {
        Ok(x)
    } else {
        Err(domain(what, x.as_f64(), "(0, 1)"))
    }
}

impl<S: Scalar> Distortion<S> {
    fn of(kind: DistortionKind<S>) -> Self {
        Self {
            kind,
            weight: S::one(),
        }
    }

    pub fn eps_greedy(eps: S) -> Result<Self> {
        let eps = unit_open("eps", eps)?;
        Ok(Self::of(DistortionKind::EpsGreedy { eps }))
    }

    pub fn discrete_uniform(eps: S, n: usize) -> Result<Self> {
        let eps = unit_open("eps", eps)?;
        if n == 0 {
            return Err(Error::InvalidParameter("discrete-uniform needs n ≥ 1".into()));
        }
        Ok(Self::of(DistortionKind::DiscreteUniform { eps, n }))
    }

    pub fn cre() -> Self {
        Self::of(DistortionKind::Cre)
    }

    pub fn gaussian_score() -> Self {
        Self::of(DistortionKind::GaussianScore)
    }

    pub fn inter_es(alpha: S) -> Result<Self> {
        if !(alpha >= S::half() && alpha < S::one()) {
            return Err(domain("alpha", alpha.as_f64(), "[1/2, 1)"));
        }
        Ok(Self::of(DistortionKind::InterEs { alpha }))
    }

    pub fn wasserstein_sym() -> Self {
        Self::of(DistortionKind::WassersteinSym)
    }

    pub fn wasserstein_asym(alpha: S) -> Result<Self> {
        let alpha = unit_open("alpha", alpha)?;
        Ok(Self::of(DistortionKind::WassersteinAsym { alpha }))
    }

    pub fn gini() -> Self {
        Self::of(DistortionKind::Gini)
    }

    /// Piecewise-linear `h` through `(p, h)` nodes. `p` must run from 0 to 1,
    /// non-decreasing.
    pub fn piecewise_linear(p: Vec<S>, h: Vec<S>) -> Result<Self> {
        if p.len() != h.len() || p.len() < 2 {
            return Err(Error::InvalidParameter(
                "piecewise distortion needs at least two (p, h) rows of equal length".into(),
            ));
        }
        if p[0] != S::zero() || *p.last().unwrap() != S::one() {
            return Err(Error::InvalidParameter(
                "piecewise distortion must start at p = 0 and end at p = 1".into(),
            ));
        }
        for i in 0..p.len() {
            if !p[i].is_finite() || !h[i].is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite row {}", i)));
            }
            if i > 0 && p[i] < p[i - 1] {
                return Err(Error::InvalidParameter(format!("p decreases at row {}", i)));
            }
        }
        Ok(Self::of(DistortionKind::PiecewiseLinear { p, h }))
    }

    /// Converse construction: the distortion whose constrained maximizer is
    /// `source`, `h′(p) = Q(1 − p) − m`.
    ///
    /// `mean` must match the mean of `source` to `1e-8` relative; the
    /// computed mean is stored so that `h(1) = 0` to rounding.
    pub fn from_distribution(source: &Distribution<S>, mean: S) -> Result<Self> {
        let computed = source.mean();
        let scale = S::one().max(computed.abs());
        if !((mean - computed).abs() <= c::<S>(1e-8) * scale) {
            return Err(Error::MeanMismatch {
                supplied: mean.as_f64(),
                computed: computed.as_f64(),
            });
        }
        Ok(Self::of(DistortionKind::FromQuantile {
            source: source.clone(),
            mean: computed,
        }))
    }

    /// `λ·h`, `λ > 0`.
    pub fn scaled(&self, lambda: S) -> Result<Self> {
        if !(lambda > S::zero() && lambda.is_finite()) {
            return Err(domain("weight", lambda.as_f64(), "(0, ∞)"));
        }
        Ok(Self {
            kind: self.kind.clone(),
            weight: self.weight * lambda,
        })
    }

    pub fn kind(&self) -> &DistortionKind<S> {
        &self.kind
    }

    pub fn weight(&self) -> S {
        self.weight
    }

    pub fn tag(&self) -> &'static str {
        match &self.kind {
            DistortionKind::EpsGreedy { .. } => "eps-greedy",
            DistortionKind::DiscreteUniform { .. } => "discrete-uniform",
            DistortionKind::Cre => "cre",
            DistortionKind::GaussianScore => "gaussian-score",
            DistortionKind::InterEs { .. } => "inter-es",
            DistortionKind::WassersteinSym => "wasserstein-sym",
            DistortionKind::WassersteinAsym { .. } => "wasserstein-asym",
            DistortionKind::Gini => "gini",
            DistortionKind::PiecewiseLinear { .. } => "piecewise",
            DistortionKind::FromQuantile { .. } => "from-quantile",
        }
    }

    /// `h(p)` for `p ∈ [0, 1]`.
    pub fn eval_h(&self, p: S) -> Result<S> {
        if !(p >= S::zero() && p <= S::one()) {
            return Err(domain("p", p.as_f64(), "[0, 1]"));
        }
        Ok(self.weight * self.h_unit(p))
    }

    fn h_unit(&self, p: S) -> S {
        let one = S::one();
        match &self.kind {
            DistortionKind::EpsGreedy { eps } => p.min(*eps) - *eps * p,
            DistortionKind::Cre => {
                if p <= S::zero() {
                    S::zero()
                } else {
                    -p * p.ln()
                }
            }
            DistortionKind::GaussianScore => normal_pdf(normal_quantile(p)),
            DistortionKind::InterEs { alpha } => {
                let w = one - *alpha;
                (p / w).min(one) + ((*alpha - p) / w).min(S::zero())
            }
            DistortionKind::WassersteinSym => p.min(one - p),
            DistortionKind::WassersteinAsym { alpha } => {
                if p < one - *alpha {
                    *alpha * p
                } else {
                    (one - *alpha) * (one - p)
                }
            }
            DistortionKind::Gini => p - p * p,
            DistortionKind::PiecewiseLinear { p: ps, h } => pl_value(ps, h, p),
            DistortionKind::FromQuantile { source, mean } => {
                source.integrated_quantile(one - p, one) - *mean * p
            }
            DistortionKind::DiscreteUniform { .. } => self
                .unit_pieces()
                .iter()
                .map(|pc| match pc.slope {
                    Slope::Const(v) => v * (pc.hi.min(p) - pc.lo).max(S::zero()),
                    Slope::Smooth => unreachable!("discrete-uniform slopes are constant"),
                })
                .sum(),
        }
    }

    /// Right-derivative `h′(p)` for `p ∈ [0, 1)`; `+∞` at `p = 0` for
    /// kinds with unbounded slope.
    pub fn eval_hprime(&self, p: S) -> Result<S> {
        if !(p >= S::zero() && p < S::one()) {
            return Err(domain("p", p.as_f64(), "[0, 1)"));
        }
        Ok(self.weight * self.hprime_unit(p))
    }

    fn hprime_unit(&self, p: S) -> S {
        match &self.kind {
            DistortionKind::Cre => {
                if p <= S::zero() {
                    S::infinity()
                } else {
                    -p.ln() - S::one()
                }
            }
            DistortionKind::GaussianScore => -normal_quantile(p),
            DistortionKind::Gini => S::one() - S::two() * p,
            DistortionKind::FromQuantile { source, mean } => source.upper_quantile(p) - *mean,
            _ => {
                let pieces = self.unit_pieces();
                let pc = pieces
                    .iter()
                    .find(|pc| pc.lo <= p && p < pc.hi)
                    .unwrap_or_else(|| pieces.last().unwrap());
                match pc.slope {
                    Slope::Const(v) => v,
                    Slope::Smooth => unreachable!("piecewise kinds have constant slopes"),
                }
            }
        }
    }

    /// `h′` restricted to the pieces of `[0, 1)` for the unit-weight kind.
    fn unit_pieces(&self) -> Vec<SlopePiece<S>> {
        let one = S::one();
        let zero = S::zero();
        let k = |lo: S, hi: S, v: S| SlopePiece {
            lo,
            hi,
            slope: Slope::Const(v),
        };
        let smooth = || {
            vec![SlopePiece {
                lo: zero,
                hi: one,
                slope: Slope::Smooth,
            }]
        };
        let mut out = match &self.kind {
            DistortionKind::EpsGreedy { eps } => {
                vec![k(zero, *eps, one - *eps), k(*eps, one, -*eps)]
            }
            DistortionKind::DiscreteUniform { eps, n } => {
                let step = *eps / S::count(2 * n);
                let mut v = Vec::with_capacity(2 * n + 1);
                for i in 1..=*n {
                    v.push(k(S::count(i - 1) * step, S::count(i) * step, S::count(n - i + 1)));
                }
                let top = one - *eps * S::half();
                v.push(k(*eps * S::half(), top, zero));
                for j in 1..=*n {
                    let hi = if j == *n { one } else { top + S::count(j) * step };
                    v.push(k(top + S::count(j - 1) * step, hi, -S::count(j)));
                }
                v
            }
            DistortionKind::Cre | DistortionKind::GaussianScore | DistortionKind::Gini => smooth(),
            DistortionKind::InterEs { alpha } => {
                let w = one - *alpha;
                vec![k(zero, w, one / w), k(w, *alpha, zero), k(*alpha, one, -one / w)]
            }
            DistortionKind::WassersteinSym => vec![k(zero, S::half(), one), k(S::half(), one, -one)],
            DistortionKind::WassersteinAsym { alpha } => {
                let w = one - *alpha;
                vec![k(zero, w, *alpha), k(w, one, -w)]
            }
            DistortionKind::PiecewiseLinear { p, h } => {
                let mut v = Vec::new();
                for i in 0..p.len() - 1 {
                    if p[i + 1] > p[i] {
                        v.push(k(p[i], p[i + 1], (h[i + 1] - h[i]) / (p[i + 1] - p[i])));
                    }
                }
                v
            }
            DistortionKind::FromQuantile { source, mean } => source
                .pieces()
                .into_iter()
                .rev()
                .map(|pc| SlopePiece {
                    lo: one - pc.hi,
                    hi: one - pc.lo,
                    slope: match pc.shape {
                        Shape::Flat(x) => Slope::Const(x - *mean),
                        _ => Slope::Smooth,
                    },
                })
                .collect(),
        };
        out.retain(|pc| pc.hi > pc.lo);
        out
    }

    /// Pieces of `[0, 1)` on which `h′` is constant or smooth, weighted.
    pub fn hprime_pieces(&self) -> Vec<SlopePiece<S>> {
        self.unit_pieces()
            .into_iter()
            .map(|pc| SlopePiece {
                slope: match pc.slope {
                    Slope::Const(v) => Slope::Const(self.weight * v),
                    Slope::Smooth => Slope::Smooth,
                },
                ..pc
            })
            .collect()
    }

    /// Interior points where `h′` may be discontinuous.
    pub fn hprime_breaks(&self) -> Vec<S> {
        let mut v: Vec<S> = self
            .unit_pieces()
            .iter()
            .flat_map(|pc| [pc.lo, pc.hi])
            .filter(|&x| x > S::zero() && x < S::one())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// Discontinuities of `h`, weighted. Only piecewise kinds can jump.
    pub fn jumps(&self) -> Vec<Jump<S>> {
        let DistortionKind::PiecewiseLinear { p, h } = &self.kind else {
            return Vec::new();
        };
        let mut levels = p.clone();
        levels.dedup();
        let w = self.weight;
        levels
            .into_iter()
            .filter_map(|x| {
                let value = pl_value(p, h, x);
                let left = if x > S::zero() { pl_left(p, h, x) } else { value };
                let right = if x < S::one() { pl_right(p, h, x) } else { value };
                (left != value || right != value).then_some(Jump {
                    p: x,
                    left: w * left,
                    value: w * value,
                    right: w * right,
                })
            })
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps().is_empty()
    }

    /// `‖h′‖₂²` in closed form.
    pub fn l2_norm_sq(&self) -> S {
        let one = S::one();
        let unit = match &self.kind {
            DistortionKind::EpsGreedy { eps } => *eps * (one - *eps),
            DistortionKind::DiscreteUniform { eps, n } => {
                let n = S::count(*n);
                *eps * (n + one) * (S::two() * n + one) / S::lit(6.0)
            }
            DistortionKind::Cre | DistortionKind::GaussianScore | DistortionKind::WassersteinSym => one,
            DistortionKind::InterEs { alpha } => S::two() / (one - *alpha),
            DistortionKind::WassersteinAsym { alpha } => *alpha * (one - *alpha),
            DistortionKind::Gini => one / S::lit(3.0),
            DistortionKind::PiecewiseLinear { .. } => self
                .unit_pieces()
                .iter()
                .map(|pc| match pc.slope {
                    Slope::Const(v) => v * v * (pc.hi - pc.lo),
                    Slope::Smooth => S::zero(),
                })
                .sum(),
            DistortionKind::FromQuantile { source, .. } => source.variance(),
        };
        self.weight * self.weight * unit
    }

    pub fn l2_norm(&self) -> S {
        self.l2_norm_sq().sqrt()
    }

    /// `∫₀¹ h′(p)² dp` by adaptive quadrature, split at the breaks of `h′`.
    /// Nodes never touch the endpoints, so unbounded slopes at `p = 0` are
    /// handled.
    pub fn l2_norm_sq_quadrature(&self) -> S {
        let mut pts = vec![S::zero()];
        pts.extend(self.hprime_breaks());
        pts.push(S::one());
        let f = |p: S| {
            let v = self.weight * self.hprime_unit(p);
            v * v
        };
        integrate_with_breaks(f, &pts, Tolerance::new(1e-13, 1e-13)).value
    }

    /// Checks `h(0) = h(1) = 0`, `h ≥ 0` and concavity on a uniform grid of
    /// `grid_size` points plus every breakpoint.
    pub fn validate(&self, grid_size: usize) -> ValidityReport {
        let n = grid_size.max(3);
        let mut pts: Vec<S> = (0..n).map(|i| S::count(i) / S::count(n - 1)).collect();
        pts.extend(self.hprime_breaks());
        if let DistortionKind::PiecewiseLinear { p, .. } = &self.kind {
            pts.extend(p.iter().copied());
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();

        let hs: Vec<S> = pts.iter().map(|&p| self.weight * self.h_unit(p)).collect();
        let scale = S::one() + hs.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
        let tol = c::<S>(1e-12).max(S::lit(64.0) * S::epsilon()) * scale;

        let boundary_ok = hs[0].abs() <= tol && hs[hs.len() - 1].abs() <= tol;
        let nonneg_ok = hs.iter().all(|&v| v >= -tol);

        let slope_tol = c::<S>(1e-9);
        let non_increasing = |vals: &[S]| {
            vals.windows(2)
                .all(|w| w[1] <= w[0] + slope_tol * (S::one() + w[0].abs()))
        };
        let secants: Vec<S> = pts
            .windows(2)
            .zip(hs.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let derivs: Vec<S> = pts
            .iter()
            .filter(|&&p| p < S::one())
            .map(|&p| self.weight * self.hprime_unit(p))
            .collect();
        let interior_jump = self
            .jumps()
            .iter()
            .any(|j| j.p > S::zero() && j.p < S::one());
        let concave_ok = !interior_jump && non_increasing(&secants) && non_increasing(&derivs);

        ValidityReport {
            boundary_ok,
            concave_ok,
            nonneg_ok,
        }
    }

    /// Least concave majorant of a piecewise-linear `h` (upper hull of its
    /// nodes). Other kinds are concave already and are returned unchanged.
    pub fn concave_envelope(&self) -> Self {
        let DistortionKind::PiecewiseLinear { p, h } = &self.kind else {
            return self.clone();
        };
        let mut pts: Vec<(S, S)> = Vec::with_capacity(p.len());
        for (&x, &y) in p.iter().zip(h) {
            match pts.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1.max(y),
                _ => pts.push((x, y)),
            }
        }
        let mut hull: Vec<(S, S)> = Vec::with_capacity(pts.len());
        for pt in pts {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (a.0 - o.0) * (pt.1 - o.1) - (a.1 - o.1) * (pt.0 - o.0);
                if cross >= S::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        let (hp, hh): (Vec<S>, Vec<S>) = hull.into_iter().unzip();
        Self {
            kind: DistortionKind::PiecewiseLinear { p: hp, h: hh },
            weight: self.weight,
        }
    }

    /// Law of `h′(1 − U)` for `U ~ Uniform(0, 1)`, weighted: the shape of
    /// every maximizer, before standardization.
    pub fn hprime_law(&self) -> Result<Distribution<S>> {
        let w = self.weight;
        let unit = match &self.kind {
            DistortionKind::Gini => Distribution::uniform(-S::one(), S::one())?,
            DistortionKind::Cre => Distribution::shifted_exponential(-S::one(), S::one())?,
            DistortionKind::GaussianScore => Distribution::normal(S::zero(), S::one())?,
            DistortionKind::FromQuantile { source, mean } => {
                return source.affine(-*mean * w, w);
            }
            // masses written as in the policy forms so both agree bitwise
            DistortionKind::EpsGreedy { eps } => {
                Distribution::discrete(&[(-*eps, S::one() - *eps), (S::one() - *eps, *eps)])?
            }
            DistortionKind::DiscreteUniform { eps, n } => {
                let mass = *eps / S::count(2 * n);
                let mut pts = vec![(S::zero(), S::one() - *eps)];
                for j in 1..=*n {
                    pts.push((-S::count(j), mass));
                    pts.push((S::count(j), mass));
                }
                Distribution::discrete(&pts)?
            }
            DistortionKind::InterEs { alpha } => {
                let tail = S::one() - *alpha;
                Distribution::discrete(&[
                    (-S::one() / tail, tail),
                    (S::zero(), S::two() * *alpha - S::one()),
                    (S::one() / tail, tail),
                ])?
            }
            DistortionKind::WassersteinSym => Distribution::discrete(&[(-S::one(), S::half()), (S::one(), S::half())])?,
            DistortionKind::WassersteinAsym { alpha } => {
                Distribution::discrete(&[(*alpha - S::one(), *alpha), (*alpha, S::one() - *alpha)])?
            }
            _ => {
                let pts: Vec<(S, S)> = self
                    .unit_pieces()
                    .iter()
                    .map(|pc| match pc.slope {
                        Slope::Const(v) => (v, pc.hi - pc.lo),
                        Slope::Smooth => unreachable!("piecewise kinds have constant slopes"),
                    })
                    .collect();
                Distribution::discrete(&pts)?
            }
        };
        unit.affine(S::zero(), w)
    }
}

/// Value of the piecewise-linear `h` at `x`: the largest node value at an
/// interior jump, the outermost node value at `0` and `1`.
fn pl_value<S: Scalar>(p: &[S], h: &[S], x: S) -> S {
    if x <= S::zero() {
        return h[0];
    }
    if x >= S::one() {
        return h[h.len() - 1];
    }
    let i = p.partition_point(|&v| v < x);
    if i < p.len() && p[i] == x {
        let mut best = h[i];
        let mut j = i + 1;
        while j < p.len() && p[j] == x {
            best = best.max(h[j]);
            j += 1;
        }
        return best;
    }
    if i == 0 {
        return h[0];
    }
    if i >= p.len() {
        return h[p.len() - 1];
    }
    h[i - 1] + (h[i] - h[i - 1]) * (x - p[i - 1]) / (p[i] - p[i - 1])
}

/// `h(x−)` for `x > 0`.
fn pl_left<S: Scalar>(p: &[S], h: &[S], x: S) -> S {
    let i = p.partition_point(|&v| v < x);
    if i >= p.len() {
        return h[p.len() - 1];
    }
    if p[i] == x {
        return h[i];
    }
    h[i - 1] + (h[i] - h[i - 1]) * (x - p[i - 1]) / (p[i] - p[i - 1])
}

/// `h(x+)` for `x < 1`.
fn pl_right<S: Scalar>(p: &[S], h: &[S], x: S) -> S {
    let j = p.partition_point(|&v| v <= x).max(1) - 1;
    if p[j] == x || j + 1 >= p.len() {
        return h[j];
    }
    h[j] + (h[j + 1] - h[j]) * (x - p[j]) / (p[j + 1] - p[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Distortion<f64>;

    fn catalog() -> Vec<D> {
        vec![
            D::eps_greedy(0.4).unwrap(),
            D::discrete_uniform(0.4, 5).unwrap(),
            D::cre(),
            D::gaussian_score(),
            D::inter_es(0.75).unwrap(),
            D::wasserstein_sym(),
            D::wasserstein_asym(0.8).unwrap(),
            D::gini(),
        ]
    }

    #[test]
    fn point_values() {
        assert_eq!(D::gini().eval_h(0.5).unwrap(), 0.25);
        assert_eq!(D::eps_greedy(0.4).unwrap().eval_h(1.0).unwrap(), 0.0);
        let e = (-1.0f64).exp();
        assert!((D::cre().eval_h(e).unwrap() - e).abs() < 1e-16);
        assert_eq!(D::gini().eval_hprime(0.25).unwrap(), 0.5);
        assert!(D::cre().eval_hprime(e).unwrap().abs() < 1e-15);
        assert_eq!(D::inter_es(0.75).unwrap().eval_hprime(0.9).unwrap(), -4.0);
        assert!(D::gini().eval_h(1.5).is_err());
        assert!(D::gini().eval_hprime(1.0).is_err());
    }

    #[test]
    fn closed_form_norms() {
        assert!((D::gini().l2_norm() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((D::eps_greedy(0.4).unwrap().l2_norm_sq() - 0.24).abs() < 1e-15);
        assert_eq!(D::cre().l2_norm(), 1.0);
        assert!((D::discrete_uniform(0.4, 5).unwrap().l2_norm_sq() - 4.4).abs() < 1e-14);
        assert!((D::inter_es(0.75).unwrap().l2_norm_sq() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn norms_match_quadrature() {
        for d in catalog() {
            let exact = d.l2_norm_sq();
            let quad = d.l2_norm_sq_quadrature();
            let bounded = !matches!(d.kind(), DistortionKind::Cre | DistortionKind::GaussianScore);
            let tol = if bounded { 1e-10 } else { 1e-6 };
            assert!((exact - quad).abs() < tol, "{}: {exact} vs {quad}", d.tag());
        }
    }

    #[test]
    fn h_integrates_hprime() {
        for d in catalog() {
            for &p in &[0.1, 0.3, 0.5, 0.77, 0.95] {
                let mut pts = vec![0.0];
                pts.extend(d.hprime_breaks().into_iter().filter(|&b| b < p));
                pts.push(p);
                let q = integrate_with_breaks(
                    |r| d.eval_hprime(r).unwrap(),
                    &pts,
                    Tolerance::new(1e-13, 1e-13),
                )
                .value;
                let h = d.eval_h(p).unwrap();
                assert!((q - h).abs() < 1e-9, "{} at {p}: {q} vs {h}", d.tag());
            }
        }
    }

    #[test]
    fn catalog_is_valid() {
        for d in catalog() {
            let r = d.validate(1001);
            assert!(r.all_ok(), "{}: {r:?}", d.tag());
        }
    }

    #[test]
    fn gcre_is_rejected() {
        let n = 200;
        let p: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let h: Vec<f64> = p
            .iter()
            .map(|&x| if x == 0.0 { 0.0 } else { x * x.ln().powi(2) / 2.0 })
            .collect();
        let d = D::piecewise_linear(p, h).unwrap();
        let r = d.validate(101);
        assert!(r.boundary_ok && r.nonneg_ok && !r.concave_ok);
    }

    fn iqr(alpha: f64) -> D {
        D::piecewise_linear(
            vec![0.0, 1.0 - alpha, 1.0 - alpha, alpha, alpha, 1.0],
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn iqr_indicator_is_not_concave() {
        let d = iqr(0.75);
        assert!(!d.validate(101).concave_ok);
        assert_eq!(d.eval_h(0.25).unwrap(), 1.0);
        assert_eq!(d.eval_h(0.75).unwrap(), 1.0);
        assert_eq!(d.eval_h(0.8).unwrap(), 0.0);
        assert_eq!(d.jumps().len(), 2);
        assert!(!d.is_continuous());
    }

    #[test]
    fn envelope_of_iqr_is_inter_es() {
        let env = iqr(0.75).concave_envelope();
        let target = D::inter_es(0.75).unwrap();
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            let a = env.eval_h(p).unwrap();
            let b = target.eval_h(p).unwrap();
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
        assert!(env.validate(101).all_ok());
    }

    #[test]
    fn envelope_is_idempotent_and_dominates() {
        let d = D::piecewise_linear(
            vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            vec![0.0, 0.3, 0.1, 0.5, 0.2, 0.0],
        )
        .unwrap();
        let e = d.concave_envelope();
        assert_eq!(e.concave_envelope(), e);
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert!(e.eval_h(p).unwrap() >= d.eval_h(p).unwrap() - 1e-15);
        }
        let tent = D::piecewise_linear(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.0]).unwrap();
        assert_eq!(tent.concave_envelope(), tent);
    }

    #[test]
    fn converse_reproduces_named_kinds() {
        let exp = Distribution::shifted_exponential(0.0, 1.0).unwrap();
        let from_exp = D::from_distribution(&exp, 1.0).unwrap();
        let normal = Distribution::normal(0.0, 1.0).unwrap();
        let from_normal = D::from_distribution(&normal, 0.0).unwrap();
        let bern = Distribution::two_point(0.0, 1.0, 0.4).unwrap();
        let from_bern = D::from_distribution(&bern, 0.4).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let pairs = [
                (&from_exp, D::cre()),
                (&from_normal, D::gaussian_score()),
                (&from_bern, D::eps_greedy(0.4).unwrap()),
            ];
            for (a, b) in pairs {
                let (ha, hb) = (a.eval_h(p).unwrap(), b.eval_h(p).unwrap());
                assert!((ha - hb).abs() < 1e-12, "{} p={p}: {ha} vs {hb}", b.tag());
                let (da, db) = (a.eval_hprime(p).unwrap(), b.eval_hprime(p).unwrap());
                assert!((da - db).abs() < 1e-9, "{} p={p}: {da} vs {db}", b.tag());
            }
        }
        for d in [&from_exp, &from_normal, &from_bern] {
            assert!(d.eval_h(1.0).unwrap().abs() < 1e-8);
            assert!(d.validate(501).all_ok());
        }
        assert!(matches!(
            D::from_distribution(&normal, 0.1),
            Err(Error::MeanMismatch { .. })
        ));
    }

    #[test]
    fn hprime_law_shapes() {
        let du = D::discrete_uniform(0.4, 2).unwrap().hprime_law().unwrap();
        let (atoms, probs) = du.atoms().unwrap();
        assert_eq!(atoms, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!((probs[2] - 0.6).abs() < 1e-15 && (probs[0] - 0.1).abs() < 1e-15);
        for d in catalog() {
            let law = d.hprime_law().unwrap();
            assert!(law.mean().abs() < 1e-12, "{}", d.tag());
            assert!((law.variance() - d.l2_norm_sq()).abs() < 1e-12, "{}", d.tag());
        }
    }

    #[test]
    fn weight_scales_everything() {
        let d = D::gini().scaled(3.0).unwrap();
        assert_eq!(d.eval_h(0.5).unwrap(), 0.75);
        assert!((d.l2_norm_sq() - 3.0).abs() < 1e-15);
        assert!((d.hprime_law().unwrap().variance() - 3.0).abs() < 1e-15);
        assert!(D::gini().scaled(0.0).is_err());
    }

    #[test]
    fn parameter_domains() {
        assert!(D::eps_greedy(0.0).is_err());
        assert!(D::eps_greedy(1.0).is_err());
        assert!(D::discrete_uniform(0.5, 0).is_err());
        assert!(D::inter_es(0.4).is_err());
        assert!(D::inter_es(0.5).is_ok());
        assert!(D::wasserstein_asym(1.0).is_err());
    }
}

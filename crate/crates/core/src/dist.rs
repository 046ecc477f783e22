//! Probability laws on the real line, represented through their quantile
//! functions.
//!
//! Every law exposes a left quantile `Q(p)` on `(0, 1]`, a right quantile
//! `Q⁺(p)` on `[0, 1)`, exact integrated quantiles (from which the mean, the
//! expected-shortfall family and the convex-order test are built), and a
//! piece decomposition of `(0, 1)` used by the Choquet integrators to split
//! quadrature at atoms and kinks.

use std::fmt;

use rand::Rng;
use rand_distr::Open01;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::scalar::{c, normal_cdf, normal_pdf, normal_quantile, normal_sf, Scalar};

/// Shape of the quantile function on one piece of `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<S> {
    /// Constant: the piece is an atom of the law.
    Flat(S),
    /// Affine in `p`.
    Linear,
    /// Anything else (normal, exponential, sums of those).
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantilePiece<S> {
    pub lo: S,
    pub hi: S,
    pub shape: Shape<S>,
}

/// Parametric family behind a [`Distribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Kind<S> {
    /// Finitely many atoms, strictly increasing, with cumulative masses `cum`
    /// (`cum.last() == 1`).
    Discrete {
        atoms: Vec<S>,
        probs: Vec<S>,
        cum: Vec<S>,
    },
    Uniform {
        a: S,
        b: S,
    },
    Normal {
        mean: S,
        sd: S,
    },
    /// `shift + Exp(rate)`.
    ShiftedExponential {
        shift: S,
        rate: S,
    },
    /// Quantile function tabulated at `p` (from 0 to 1) and linearly
    /// interpolated in `p`. A repeated `p` encodes a jump (an atom boundary).
    Grid {
        p: Vec<S>,
        q: Vec<S>,
    },
    /// Comonotone sum: the quantile function is the sum of the components'.
    Comonotone(Vec<Distribution<S>>),
}

/// A law in 𝓜², immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<S> {
    kind: Kind<S>,
}

/// Outcome of the grid-based convex-order test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexOrder {
    Yes,
    No,
    Inconclusive,
}

fn check_unit_open<S: Scalar>(what: &'static str, p: S) -> Result<()> {
    if p > S::zero() && p < S::one() {
        Ok(())
    } else {
        Err(domain(what, p.as_f64(), "(0, 1)"))
    }
}

fn overlap<S: Scalar>(a: S, b: S, lo: S, hi: S) -> S {
    (b.min(hi) - a.max(lo)).max(S::zero())
}

fn sorted_unique<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
    v.dedup();
    v
}

impl<S: Scalar> Distribution<S> {
    /// Discrete law from `(atom, probability)` pairs. Atoms are sorted,
    /// duplicates merged and zero-mass atoms dropped; masses must sum to one.
    pub fn discrete(points: &[(S, S)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("discrete law needs at least one atom".into()));
        }
        let mut pts: Vec<(S, S)> = Vec::with_capacity(points.len());
        for &(x, w) in points {
            if !x.is_finite() || !w.is_finite() || w < S::zero() {
                return Err(Error::InvalidParameter(format!(
                    "atom ({}, {}) must be finite with non-negative mass",
                    x, w
                )));
            }
            if w > S::zero() {
                pts.push((x, w));
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: S = pts.iter().map(|&(_, w)| w).sum();
        let tol = c::<S>(1e-12).max(S::lit(64.0) * S::epsilon());
        if (total - S::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "discrete masses sum to {}, expected 1",
                total
            )));
        }
        let mut atoms: Vec<S> = Vec::with_capacity(pts.len());
        let mut probs: Vec<S> = Vec::with_capacity(pts.len());
        for (x, w) in pts {
            match atoms.last() {
                Some(&last) if last == x => {
                    *probs.last_mut().unwrap() = *probs.last().unwrap() + w;
                }
                _ => {
                    atoms.push(x);
                    probs.push(w);
                }
            }
        }
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = S::zero();
        for &w in &probs {
            acc = acc + w;
            cum.push(acc.min(S::one()));
        }
        *cum.last_mut().unwrap() = S::one();
        Ok(Self {
            kind: Kind::Discrete { atoms, probs, cum },
        })
    }

    /// Dirac mass `δ_c`.
    pub fn dirac(x: S) -> Self {
        Self::discrete(&[(x, S::one())]).expect("dirac is valid")
    }

    /// `lo` with mass `1 - p_hi`, `hi` with mass `p_hi`.
    pub fn two_point(lo: S, hi: S, p_hi: S) -> Result<Self> {
        Self::discrete(&[(lo, S::one() - p_hi), (hi, p_hi)])
    }

    /// Symmetric three-point law: `center ∓ spread` each with mass `p_tail`.
    pub fn three_point(center: S, spread: S, p_tail: S) -> Result<Self> {
        Self::discrete(&[
            (center - spread, p_tail),
            (center, S::one() - S::two() * p_tail),
            (center + spread, p_tail),
        ])
    }

    pub fn uniform(a: S, b: S) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!(
                "uniform needs finite a < b, got [{}, {}]",
                a, b
            )));
        }
        Ok(Self {
            kind: Kind::Uniform { a, b },
        })
    }

    /// Normal law parameterized by mean and standard deviation.
    pub fn normal(mean: S, sd: S) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "normal needs finite mean and sd > 0, got ({}, {})",
                mean, sd
            )));
        }
        Ok(Self {
            kind: Kind::Normal { mean, sd },
        })
    }

    pub fn shifted_exponential(shift: S, rate: S) -> Result<Self> {
        if !(shift.is_finite() && rate.is_finite() && rate > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "shifted exponential needs finite shift and rate > 0, got ({}, {})",
                shift, rate
            )));
        }
        Ok(Self {
            kind: Kind::ShiftedExponential { shift, rate },
        })
    }

    /// Tabulated quantile function. `p` must run from exactly 0 to exactly 1,
    /// non-decreasing; `q` must be finite and non-decreasing.
    pub fn grid(p: Vec<S>, q: Vec<S>) -> Result<Self> {
        if p.len() != q.len() || p.len() < 2 {
            return Err(Error::InvalidParameter(
                "quantile table needs at least two (p, q) rows of equal length".into(),
            ));
        }
        if p[0] != S::zero() || *p.last().unwrap() != S::one() {
            return Err(Error::InvalidParameter(
                "quantile table must start at p = 0 and end at p = 1".into(),
            ));
        }
        for i in 0..p.len() {
            if !p[i].is_finite() || !q[i].is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite row {}", i)));
            }
            if i > 0 && (p[i] < p[i - 1] || q[i] < q[i - 1]) {
                return Err(Error::InvalidParameter(format!(
                    "quantile table is not non-decreasing at row {}",
                    i
                )));
            }
        }
        Ok(Self {
            kind: Kind::Grid { p, q },
        })
    }

    pub fn kind(&self) -> &Kind<S> {
        &self.kind
    }

    /// Short tag naming the family.
    pub fn tag(&self) -> &'static str {
        match &self.kind {
            Kind::Discrete { atoms, .. } if atoms.len() == 1 => "dirac",
            Kind::Discrete { .. } => "discrete",
            Kind::Uniform { .. } => "uniform",
            Kind::Normal { .. } => "normal",
            Kind::ShiftedExponential { .. } => "shifted-exp",
            Kind::Grid { .. } => "grid",
            Kind::Comonotone(_) => "comonotone",
        }
    }

    /// Atoms and masses when the law is discrete.
    pub fn atoms(&self) -> Option<(&[S], &[S])> {
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => Some((atoms, probs)),
            _ => None,
        }
    }

    /// Left quantile `Q(p) = inf{x : Π(x) ≥ p}` for `p ∈ (0, 1]`; at `p = 0`
    /// returns the lower end of the support.
    pub fn left_quantile(&self, p: S) -> S {
        if p <= S::zero() {
            return self.right_quantile(S::zero());
        }
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let i = cum.partition_point(|&c| c < p);
                atoms[i.min(atoms.len() - 1)]
            }
            Kind::Uniform { a, b } => *a + (*b - *a) * p.min(S::one()),
            Kind::Normal { mean, sd } => *mean + *sd * normal_quantile(p),
            Kind::ShiftedExponential { shift, rate } => {
                if p >= S::one() {
                    S::infinity()
                } else {
                    *shift - (-p).ln_1p() / *rate
                }
            }
            Kind::Grid { p: ps, q } => {
                let i = ps.partition_point(|&x| x < p);
                if i >= ps.len() {
                    return *q.last().unwrap();
                }
                if ps[i] == p {
                    q[i]
                } else {
                    lerp(ps[i - 1], q[i - 1], ps[i], q[i], p)
                }
            }
            Kind::Comonotone(parts) => parts.iter().map(|d| d.left_quantile(p)).sum(),
        }
    }

    /// Right quantile `Q⁺(p) = inf{x : Π(x) > p}` for `p ∈ [0, 1)`; at
    /// `p = 1` returns the upper end of the support.
    pub fn right_quantile(&self, p: S) -> S {
        if p >= S::one() {
            return self.left_quantile(S::one());
        }
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let i = cum.partition_point(|&c| c <= p);
                atoms[i.min(atoms.len() - 1)]
            }
            Kind::Uniform { a, b } => *a + (*b - *a) * p.max(S::zero()),
            Kind::Normal { mean, sd } => *mean + *sd * normal_quantile(p),
            Kind::ShiftedExponential { shift, rate } => {
                if p <= S::zero() {
                    *shift
                } else {
                    *shift - (-p).ln_1p() / *rate
                }
            }
            Kind::Grid { p: ps, q } => {
                let j = ps.partition_point(|&x| x <= p);
                let j = j.max(1) - 1;
                if ps[j] == p || j + 1 >= ps.len() {
                    q[j]
                } else {
                    lerp(ps[j], q[j], ps[j + 1], q[j + 1], p)
                }
            }
            Kind::Comonotone(parts) => parts.iter().map(|d| d.right_quantile(p)).sum(),
        }
    }

    /// `Q(1 - s)`, evaluated without forming `1 - s` where that would lose
    /// precision in unbounded upper tails.
    pub fn upper_quantile(&self, s: S) -> S {
        match &self.kind {
            Kind::Uniform { a, b } => *b - (*b - *a) * s,
            Kind::Normal { mean, sd } => *mean - *sd * normal_quantile(s),
            Kind::ShiftedExponential { shift, rate } => {
                if s <= S::zero() {
                    S::infinity()
                } else {
                    *shift - s.ln() / *rate
                }
            }
            Kind::Comonotone(parts) => parts.iter().map(|d| d.upper_quantile(s)).sum(),
            _ => self.left_quantile(S::one() - s),
        }
    }

    /// Quantile at an interior level, using the accurate tail on each side.
    pub fn quantile(&self, p: S) -> S {
        if p <= S::half() {
            self.left_quantile(p)
        } else {
            self.upper_quantile(S::one() - p)
        }
    }

    /// `(inf support, sup support)`, possibly infinite.
    pub fn support(&self) -> (S, S) {
        (self.right_quantile(S::zero()), self.left_quantile(S::one()))
    }

    /// Decomposition of `(0, 1)` into pieces on which `Q` has a known shape.
    pub fn pieces(&self) -> Vec<QuantilePiece<S>> {
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let mut lo = S::zero();
                atoms
                    .iter()
                    .zip(cum)
                    .map(|(&x, &hi)| {
                        let piece = QuantilePiece {
                            lo,
                            hi,
                            shape: Shape::Flat(x),
                        };
                        lo = hi;
                        piece
                    })
                    .collect()
            }
            Kind::Uniform { .. } => vec![QuantilePiece {
                lo: S::zero(),
                hi: S::one(),
                shape: Shape::Linear,
            }],
            Kind::Normal { .. } | Kind::ShiftedExponential { .. } => vec![QuantilePiece {
                lo: S::zero(),
                hi: S::one(),
                shape: Shape::Smooth,
            }],
            Kind::Grid { p, q } => (0..p.len() - 1)
                .filter(|&i| p[i + 1] > p[i])
                .map(|i| QuantilePiece {
                    lo: p[i],
                    hi: p[i + 1],
                    shape: if q[i] == q[i + 1] {
                        Shape::Flat(q[i])
                    } else {
                        Shape::Linear
                    },
                })
                .collect(),
            Kind::Comonotone(parts) => {
                let cuts = self.cut_points();
                cuts.windows(2)
                    .map(|w| {
                        let mid = S::half() * (w[0] + w[1]);
                        let mut flat = Some(S::zero());
                        let mut linear = true;
                        for d in parts {
                            let piece = d
                                .pieces()
                                .into_iter()
                                .find(|pc| pc.lo <= mid && mid <= pc.hi)
                                .expect("pieces cover (0, 1)");
                            match piece.shape {
                                Shape::Flat(x) => flat = flat.map(|acc| acc + x),
                                Shape::Linear => flat = None,
                                Shape::Smooth => {
                                    flat = None;
                                    linear = false;
                                }
                            }
                        }
                        let shape = match (flat, linear) {
                            (Some(x), _) => Shape::Flat(x),
                            (None, true) => Shape::Linear,
                            (None, false) => Shape::Smooth,
                        };
                        QuantilePiece {
                            lo: w[0],
                            hi: w[1],
                            shape,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Interior levels where `Q` jumps or changes shape.
    pub fn breakpoints(&self) -> Vec<S> {
        let cuts = self.cut_points();
        cuts[1..cuts.len() - 1].to_vec()
    }

    /// `0`, the interior breakpoints, and `1`, sorted.
    fn cut_points(&self) -> Vec<S> {
        let mut v = vec![S::zero(), S::one()];
        match &self.kind {
            Kind::Comonotone(parts) => {
                for d in parts {
                    v.extend(d.breakpoints());
                }
            }
            _ => {
                for pc in self.pieces() {
                    v.push(pc.lo);
                    v.push(pc.hi);
                }
            }
        }
        sorted_unique(v)
    }

    /// True unless `Q` jumps at level `p` (an atom boundary).
    pub fn is_continuous_at(&self, p: S) -> bool {
        if p <= S::zero() || p >= S::one() {
            return true;
        }
        self.left_quantile(p) == self.right_quantile(p)
    }

    /// `∫₀ˣ Q(r) dr`.
    fn lower_integral(&self, x: S) -> S {
        let x = x.max(S::zero()).min(S::one());
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let mut lo = S::zero();
                let mut acc = S::zero();
                for (&a, &hi) in atoms.iter().zip(cum) {
                    acc = acc + a * overlap(lo, hi, S::zero(), x);
                    lo = hi;
                }
                acc
            }
            Kind::Uniform { a, b } => *a * x + (*b - *a) * x * x * S::half(),
            Kind::Normal { mean, sd } => *mean * x - *sd * normal_pdf(normal_quantile(x)),
            Kind::ShiftedExponential { shift, rate } => {
                let u = S::one() - x;
                let ulnu = if u > S::zero() { u * u.ln() } else { S::zero() };
                *shift * x + (ulnu + x) / *rate
            }
            Kind::Grid { p, q } => grid_integral(p, q, S::zero(), x),
            Kind::Comonotone(parts) => parts.iter().map(|d| d.lower_integral(x)).sum(),
        }
    }

    /// `∫ₓ¹ Q(r) dr`.
    fn upper_integral(&self, x: S) -> S {
        let x = x.max(S::zero()).min(S::one());
        let u = S::one() - x;
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let mut lo = S::zero();
                let mut acc = S::zero();
                for (&a, &hi) in atoms.iter().zip(cum) {
                    acc = acc + a * overlap(lo, hi, x, S::one());
                    lo = hi;
                }
                acc
            }
            Kind::Uniform { a, b } => *a * u + (*b - *a) * (S::one() - x * x) * S::half(),
            Kind::Normal { mean, sd } => *mean * u + *sd * normal_pdf(normal_quantile(x)),
            Kind::ShiftedExponential { shift, rate } => {
                let ulnu = if u > S::zero() { u * u.ln() } else { S::zero() };
                *shift * u + (u - ulnu) / *rate
            }
            Kind::Grid { p, q } => grid_integral(p, q, x, S::one()),
            Kind::Comonotone(parts) => parts.iter().map(|d| d.upper_integral(x)).sum(),
        }
    }

    /// `∫ₐᵇ Q(r) dr` for `0 ≤ a ≤ b ≤ 1`, exact for every family.
    pub fn integrated_quantile(&self, a: S, b: S) -> S {
        let h = S::half();
        (self.lower_integral(b.min(h)) - self.lower_integral(a.min(h)))
            + (self.upper_integral(a.max(h)) - self.upper_integral(b.max(h)))
    }

    pub fn mean(&self) -> S {
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => {
                atoms.iter().zip(probs).map(|(&x, &w)| x * w).sum()
            }
            Kind::Uniform { a, b } => S::half() * (*a + *b),
            Kind::Normal { mean, .. } => *mean,
            Kind::ShiftedExponential { shift, rate } => *shift + S::one() / *rate,
            Kind::Grid { p, q } => grid_integral(p, q, S::zero(), S::one()),
            Kind::Comonotone(parts) => parts.iter().map(|d| d.mean()).sum(),
        }
    }

    pub fn variance(&self) -> S {
        let m = self.mean();
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => atoms
                .iter()
                .zip(probs)
                .map(|(&x, &w)| w * (x - m) * (x - m))
                .sum(),
            Kind::Uniform { a, b } => (*b - *a) * (*b - *a) / S::lit(12.0),
            Kind::Normal { sd, .. } => *sd * *sd,
            Kind::ShiftedExponential { rate, .. } => S::one() / (*rate * *rate),
            Kind::Grid { p, q } => {
                let mut acc = S::zero();
                for i in 0..p.len() - 1 {
                    let (d0, d1) = (q[i] - m, q[i + 1] - m);
                    acc = acc + (p[i + 1] - p[i]) * (d0 * d0 + d0 * d1 + d1 * d1) / S::lit(3.0);
                }
                acc
            }
            Kind::Comonotone(_) => {
                let f = |r: S| {
                    let d = self.quantile(r) - m;
                    d * d
                };
                integrate_with_breaks(f, &self.cut_points(), Tolerance::new(1e-14, 1e-14)).value
            }
        }
    }

    pub fn std_dev(&self) -> S {
        self.variance().sqrt()
    }

    /// Expected shortfall `(1/(1-p)) ∫ₚ¹ Q(r) dr`.
    pub fn es(&self, p: S) -> Result<S> {
        check_unit_open("ES level", p)?;
        Ok(self.upper_integral(p) / (S::one() - p))
    }

    /// Left expected shortfall `(1/p) ∫₀ᵖ Q(r) dr`.
    pub fn es_left(&self, p: S) -> Result<S> {
        check_unit_open("left-ES level", p)?;
        Ok(self.lower_integral(p) / p)
    }

    /// ε-tail mean `(1/ε) ∫₀^ε Q(1-p) dp`.
    pub fn tail_mean_eps(&self, eps: S) -> Result<S> {
        check_unit_open("tail mass", eps)?;
        Ok(self.upper_integral(S::one() - eps) / eps)
    }

    /// `P(X < x)`.
    pub fn cdf_below(&self, x: S) -> S {
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => atoms
                .iter()
                .zip(probs)
                .filter(|(&a, _)| a < x)
                .map(|(_, &w)| w)
                .sum(),
            Kind::Uniform { a, b } => ((x - *a) / (*b - *a)).max(S::zero()).min(S::one()),
            Kind::Normal { mean, sd } => normal_cdf((x - *mean) / *sd),
            Kind::ShiftedExponential { shift, rate } => {
                let u = x - *shift;
                if u <= S::zero() {
                    S::zero()
                } else {
                    -(-*rate * u).exp_m1()
                }
            }
            _ => {
                // sup{p : Q(p) < x}
                let (mut lo, mut hi) = (S::zero(), S::one());
                for _ in 0..128 {
                    let mid = S::half() * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.left_quantile(mid) < x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// Survival in the Choquet sense, `Π([x, ∞)) = P(X ≥ x)`.
    pub fn survival(&self, x: S) -> S {
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => atoms
                .iter()
                .zip(probs)
                .filter(|(&a, _)| a >= x)
                .map(|(_, &w)| w)
                .sum(),
            Kind::Uniform { .. } => S::one() - self.cdf_below(x),
            Kind::Normal { mean, sd } => normal_sf((x - *mean) / *sd),
            Kind::ShiftedExponential { shift, rate } => {
                let u = x - *shift;
                if u <= S::zero() {
                    S::one()
                } else {
                    (-*rate * u).exp()
                }
            }
            _ => {
                // sup{s : Q(1 - s) ≥ x}
                let (mut lo, mut hi) = (S::zero(), S::one());
                for _ in 0..128 {
                    let mid = S::half() * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.upper_quantile(mid) >= x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// Law of `shift + scale·X`, `scale > 0`, kept in the same family.
    pub fn affine(&self, shift: S, scale: S) -> Result<Self> {
        if !(scale > S::zero() && scale.is_finite() && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "affine map needs finite shift and scale > 0, got ({}, {})",
                shift, scale
            )));
        }
        let kind = match &self.kind {
            Kind::Discrete { atoms, probs, cum } => Kind::Discrete {
                atoms: atoms.iter().map(|&x| shift + scale * x).collect(),
                probs: probs.clone(),
                cum: cum.clone(),
            },
            Kind::Uniform { a, b } => Kind::Uniform {
                a: shift + scale * *a,
                b: shift + scale * *b,
            },
            Kind::Normal { mean, sd } => Kind::Normal {
                mean: shift + scale * *mean,
                sd: scale * *sd,
            },
            Kind::ShiftedExponential { shift: s0, rate } => Kind::ShiftedExponential {
                shift: shift + scale * *s0,
                rate: *rate / scale,
            },
            Kind::Grid { p, q } => Kind::Grid {
                p: p.clone(),
                q: q.iter().map(|&x| shift + scale * x).collect(),
            },
            Kind::Comonotone(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                for (i, d) in parts.iter().enumerate() {
                    let s = if i == 0 { shift } else { S::zero() };
                    out.push(d.affine(s, scale)?);
                }
                Kind::Comonotone(out)
            }
        };
        Ok(Self { kind })
    }

    /// Tabulated (grid) form for the families that admit an exact one.
    fn as_grid(&self) -> Option<(Vec<S>, Vec<S>)> {
        match &self.kind {
            Kind::Discrete { atoms, cum, .. } => {
                let mut p = vec![S::zero()];
                let mut q = vec![atoms[0]];
                for i in 0..atoms.len() {
                    p.push(cum[i]);
                    q.push(atoms[i]);
                    if i + 1 < atoms.len() {
                        p.push(cum[i]);
                        q.push(atoms[i + 1]);
                    }
                }
                Some((p, q))
            }
            Kind::Uniform { a, b } => Some((vec![S::zero(), S::one()], vec![*a, *b])),
            Kind::Grid { p, q } => Some((p.clone(), q.clone())),
            _ => None,
        }
    }

    fn components(&self) -> Vec<Distribution<S>> {
        match &self.kind {
            Kind::Comonotone(parts) => parts.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Comonotone sum `Π₁ ⊕ Π₂`: the law whose quantile is `Q₁ + Q₂`.
    pub fn quantile_add(&self, other: &Self) -> Self {
        use Kind::*;
        if let Discrete { atoms, .. } = &self.kind {
            if atoms.len() == 1 {
                return other.affine(atoms[0], S::one()).expect("unit scale");
            }
        }
        if let Discrete { atoms, .. } = &other.kind {
            if atoms.len() == 1 {
                return self.affine(atoms[0], S::one()).expect("unit scale");
            }
        }
        match (&self.kind, &other.kind) {
            (Discrete { cum: c1, .. }, Discrete { cum: c2, .. }) => {
                let cuts = sorted_unique(
                    std::iter::once(S::zero())
                        .chain(c1.iter().copied())
                        .chain(c2.iter().copied())
                        .collect(),
                );
                let pts: Vec<(S, S)> = cuts
                    .windows(2)
                    .map(|w| {
                        let mid = S::half() * (w[0] + w[1]);
                        (self.left_quantile(mid) + other.left_quantile(mid), w[1] - w[0])
                    })
                    .collect();
                Self::discrete(&pts).expect("merged masses sum to one")
            }
            (Uniform { a: a1, b: b1 }, Uniform { a: a2, b: b2 }) => Self {
                kind: Uniform {
                    a: *a1 + *a2,
                    b: *b1 + *b2,
                },
            },
            (Normal { mean: m1, sd: s1 }, Normal { mean: m2, sd: s2 }) => Self {
                kind: Normal {
                    mean: *m1 + *m2,
                    sd: *s1 + *s2,
                },
            },
            (
                ShiftedExponential { shift: a, rate: r1 },
                ShiftedExponential { shift: b, rate: r2 },
            ) => Self {
                kind: ShiftedExponential {
                    shift: *a + *b,
                    rate: S::one() / (S::one() / *r1 + S::one() / *r2),
                },
            },
            _ => match (self.as_grid(), other.as_grid()) {
                (Some((p1, _)), Some((p2, _))) => {
                    let levels = sorted_unique(p1.into_iter().chain(p2).collect());
                    let mut p = Vec::with_capacity(2 * levels.len());
                    let mut q = Vec::with_capacity(2 * levels.len());
                    for &l in &levels {
                        let left = self.left_quantile(l) + other.left_quantile(l);
                        let right = self.right_quantile(l) + other.right_quantile(l);
                        if l > S::zero() {
                            p.push(l);
                            q.push(left);
                        }
                        if l < S::one() && (l == S::zero() || right != left) {
                            p.push(l);
                            q.push(right);
                        }
                    }
                    Self::grid(p, q).expect("sum of tables is a table")
                }
                _ => {
                    let mut parts = self.components();
                    parts.extend(other.components());
                    Self {
                        kind: Comonotone(parts),
                    }
                }
            },
        }
    }

    /// Inverse-transform draws `Q(U)`, `U ~ Uniform(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<S> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(S::lit(u))
            })
            .collect()
    }

    /// Grid test of `self ⪯cx other` through `∫ₚ¹ Q₁ ≤ ∫ₚ¹ Q₂`.
    ///
    /// The grid is `k/grid` plus every breakpoint of both laws, which makes
    /// the test exact for discrete and tabulated laws.
    pub fn convex_order_leq(&self, other: &Self, grid: usize) -> ConvexOrder {
        let (m1, m2) = (self.mean(), other.mean());
        let scale = S::one() + m1.abs().max(m2.abs()) + self.std_dev() + other.std_dev();
        if (m1 - m2).abs() > c::<S>(1e-9) * S::one().max(m1.abs()) {
            return ConvexOrder::No;
        }
        let margin = c::<S>(1e-10) * scale;
        let roundoff = S::lit(256.0) * S::epsilon() * scale;
        let mut levels: Vec<S> = (1..grid.max(2)).map(|k| S::count(k) / S::count(grid.max(2))).collect();
        levels.extend(self.breakpoints());
        levels.extend(other.breakpoints());
        let mut worst = S::infinity();
        for p in levels {
            if p <= S::zero() || p >= S::one() {
                continue;
            }
            let gap = other.upper_integral(p) - self.upper_integral(p);
            worst = worst.min(gap);
        }
        if worst < -margin {
            ConvexOrder::No
        } else if worst >= -roundoff {
            ConvexOrder::Yes
        } else {
            ConvexOrder::Inconclusive
        }
    }
}

impl<S: Scalar> fmt::Display for Distribution<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Discrete { atoms, probs, .. } => {
                write!(f, "Discrete{{")?;
                for (i, (x, w)) in atoms.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}: {}", x, w)?;
                }
                write!(f, "}}")
            }
            Kind::Uniform { a, b } => write!(f, "Uniform({}, {})", a, b),
            Kind::Normal { mean, sd } => write!(f, "Normal({}, {}²)", mean, sd),
            Kind::ShiftedExponential { shift, rate } => {
                write!(f, "ShiftedExponential(shift={}, rate={})", shift, rate)
            }
            Kind::Grid { p, .. } => write!(f, "GridQuantile({} nodes)", p.len()),
            Kind::Comonotone(parts) => write!(f, "Comonotone({} parts)", parts.len()),
        }
    }
}

fn lerp<S: Scalar>(x0: S, y0: S, x1: S, y1: S, x: S) -> S {
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Exact integral of the piecewise-linear table over `[a, b]`.
fn grid_integral<S: Scalar>(p: &[S], q: &[S], a: S, b: S) -> S {
    let mut acc = S::zero();
    for i in 0..p.len() - 1 {
        let (lo, hi) = (p[i].max(a), p[i + 1].min(b));
        if hi <= lo {
            continue;
        }
        let ql = lerp(p[i], q[i], p[i + 1], q[i + 1], lo);
        let qh = lerp(p[i], q[i], p[i + 1], q[i + 1], hi);
        acc = acc + (hi - lo) * (ql + qh) * S::half();
    }
    acc
}

/// `(∫₀¹ (Q₁ − Q₂)² dp)^{1/2}`, the L² distance between quantile functions.
pub fn quantile_l2_distance<S: Scalar>(a: &Distribution<S>, b: &Distribution<S>) -> S {
    let mut cuts = a.cut_points();
    cuts.extend(b.cut_points());
    let cuts = sorted_unique(cuts);
    let f = |r: S| {
        let d = a.quantile(r) - b.quantile(r);
        d * d
    };
    integrate_with_breaks(f, &cuts, Tolerance::new(1e-20, 1e-12))
        .value
        .max(S::zero())
        .sqrt()
}

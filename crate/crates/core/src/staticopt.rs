//! Mean–variance constrained maximization of `Φ_h`.
//!
//! Over laws with mean `m` and standard deviation `s`, `Φ_h` is maximized by
//! `Q*(p) = m + s·h′(1 − p)/‖h′‖₂` with value `s‖h′‖₂`. The falsification
//! oracle searches random discrete laws for a counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::choquet::phi;
use crate::dist::Distribution;
use crate::distortion::{Distortion, DistortionKind};
use crate::error::{domain, Error, Result};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvConstraint<S> {
    pub m: S,
    pub s: S,
}

impl<S: Scalar> MvConstraint<S> {
    pub fn new(m: S, s: S) -> Result<Self> {
        if !m.is_finite() || !(s > S::zero() && s.is_finite()) {
            return Err(domain("standard deviation", s.as_f64(), "(0, ∞)"));
        }
        Ok(Self { m, s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum<S> {
    pub distribution: Distribution<S>,
    pub max_value: S,
}

/// Maximizer of `Φ_h` at mean `m` and standard deviation `s`.
///
/// Requires `h` continuous, concave and not identically zero.
pub fn maximize<S: Scalar>(d: &Distortion<S>, cons: MvConstraint<S>) -> Result<Optimum<S>> {
    if !d.is_continuous() {
        return Err(Error::Discontinuous);
    }
    if matches!(d.kind(), DistortionKind::PiecewiseLinear { .. }) && !d.validate(3).concave_ok {
        return Err(Error::NotConcave);
    }
    let norm = d.l2_norm();
    if !(norm > S::zero()) {
        return Err(Error::ZeroNorm);
    }
    let distribution = d.hprime_law()?.affine(cons.m, cons.s / norm)?;
    Ok(Optimum {
        distribution,
        max_value: cons.s * norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsifyReport<S> {
    pub trials: usize,
    /// Largest `Φ_h` found among feasible candidates.
    pub best: S,
    /// `s‖h′‖₂`.
    pub bound: S,
    /// `bound − best`; negative means a counterexample.
    pub margin: S,
    pub pass: bool,
}

/// Random feasible law for trial `index`: `atoms` normal draws with
/// Dirichlet(1, …, 1) masses, shifted and scaled to mean `m` and standard
/// deviation `s`. Degenerate draws are redrawn.
pub fn random_feasible_law<S: Scalar>(
    cons: MvConstraint<S>,
    atoms: usize,
    seed: u64,
    index: u64,
) -> Distribution<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    loop {
        let xs: Vec<f64> = (0..atoms).map(|_| rng.sample(StandardNormal)).collect();
        let ws: Vec<f64> = (0..atoms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = ws.iter().sum();
        let ps: Vec<f64> = ws.iter().map(|w| w / total).collect();
        let mean: f64 = xs.iter().zip(&ps).map(|(x, p)| x * p).sum();
        let var: f64 = xs.iter().zip(&ps).map(|(x, p)| p * (x - mean) * (x - mean)).sum();
        if !(var > 1e-12) {
            continue;
        }
        let sd = var.sqrt();
        let pts: Vec<(S, S)> = xs
            .iter()
            .zip(&ps)
            .map(|(&x, &p)| (cons.m + cons.s * S::lit((x - mean) / sd), S::lit(p)))
            .collect();
        if let Ok(law) = Distribution::discrete(&pts) {
            return law;
        }
    }
}

/// Searches `trials` random feasible `atoms`-point laws, plus `injected`
/// candidates, for a value of `Φ_h` above `s‖h′‖₂ + 1e-9`.
///
/// Trial `i` draws from the ChaCha stream `(seed, i)`, so the report does not
/// depend on the number of worker threads.
pub fn oracle_falsify<S: Scalar>(
    d: &Distortion<S>,
    cons: MvConstraint<S>,
    trials: usize,
    atoms: usize,
    seed: u64,
    injected: &[Distribution<S>],
) -> Result<FalsifyReport<S>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if atoms < 3 {
        return Err(Error::InvalidParameter("atoms must be at least 3".into()));
    }
    let bound = cons.s * d.l2_norm();
    let best_random = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let law = random_feasible_law(cons, atoms, seed, i);
            phi(d, &law)
        })
        .try_reduce(|| S::neg_infinity(), |a, b| Ok(a.max(b)))?;
    let mut best = best_random;
    for law in injected {
        best = best.max(phi(d, law)?);
    }
    let margin = bound - best;
    Ok(FalsifyReport {
        trials: trials + injected.len(),
        best,
        bound,
        margin,
        pass: best <= bound + c::<S>(1e-9),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlasserReport<S> {
    pub sigma: S,
    pub phi_gini: S,
    /// `√3·Φ_Gini(Π*)/σ(Π*)`, equal to one at the uniform maximizer.
    pub ratio: S,
    pub pass: bool,
}

/// Equality case of `σ ≥ √3·Φ_Gini`: the Gini maximizer at `(0, s)`.
pub fn glasser_check<S: Scalar>(s: S) -> Result<GlasserReport<S>> {
    let opt = maximize(&Distortion::gini(), MvConstraint::new(S::zero(), s)?)?;
    let sigma = opt.distribution.std_dev();
    let phi_gini = phi(&Distortion::gini(), &opt.distribution)?;
    let ratio = S::lit(3.0).sqrt() * phi_gini / sigma;
    Ok(GlasserReport {
        sigma,
        phi_gini,
        ratio,
        pass: (ratio - S::one()).abs() <= c(1e-10) && (sigma - s).abs() <= c::<S>(1e-10) * s,
    })
}

/// `√3·Φ_Gini(Π) ≤ σ(Π) + 1e-9`.
pub fn glasser_inequality<S: Scalar>(dist: &Distribution<S>) -> Result<bool> {
    let lhs = S::lit(3.0).sqrt() * phi(&Distortion::gini(), dist)?;
    Ok(lhs <= dist.std_dev() + c(1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::quantile_l2_distance;

    type D = Distortion<f64>;
    type P = Distribution<f64>;

    fn cons(m: f64, s: f64) -> MvConstraint<f64> {
        MvConstraint::new(m, s).unwrap()
    }

    #[test]
    fn named_optima() {
        let s3 = 3f64.sqrt();
        let g = maximize(&D::gini(), cons(0.0, 1.0)).unwrap();
        assert!(quantile_l2_distance(&g.distribution, &P::uniform(-s3, s3).unwrap()) < 1e-14);
        assert!((g.max_value - 1.0 / s3).abs() < 1e-15);

        let w = maximize(&D::wasserstein_sym(), cons(0.0, 1.0)).unwrap();
        assert_eq!(w.distribution, P::discrete(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap());
        assert_eq!(w.max_value, 1.0);

        let ie = maximize(&D::inter_es(0.75).unwrap(), cons(0.0, 1.0)).unwrap();
        let r2 = 2f64.sqrt();
        let three = P::discrete(&[(-r2, 0.25), (0.0, 0.5), (r2, 0.25)]).unwrap();
        assert!(quantile_l2_distance(&ie.distribution, &three) < 1e-14);

        let gs = maximize(&D::gaussian_score(), cons(1.0, 2.0)).unwrap();
        assert_eq!(gs.distribution, P::normal(1.0, 2.0).unwrap());

        let wa = maximize(&D::wasserstein_asym(0.8).unwrap(), cons(0.0, 1.0)).unwrap();
        let two = P::discrete(&[(-0.5, 0.8), (2.0, 0.2)]).unwrap();
        assert!(quantile_l2_distance(&wa.distribution, &two) < 1e-14);
    }

    #[test]
    fn optimum_attains_bound() {
        for d in [D::gini(), D::cre(), D::eps_greedy(0.2).unwrap(), D::discrete_uniform(0.3, 4).unwrap()] {
            let o = maximize(&d, cons(2.0, 3.0)).unwrap();
            assert!((o.distribution.mean() - 2.0).abs() < 1e-12);
            assert!((o.distribution.std_dev() - 3.0).abs() < 1e-12);
            assert!((phi(&d, &o.distribution).unwrap() - o.max_value).abs() < 1e-10, "{}", d.tag());
        }
    }

    #[test]
    fn rejects_unsuitable_distortions() {
        let step = D::piecewise_linear(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(maximize(&step, cons(0.0, 1.0)), Err(Error::Discontinuous));
        let convex = D::piecewise_linear(vec![0.0, 0.5, 1.0], vec![0.0, -0.5, 0.0]).unwrap();
        assert_eq!(maximize(&convex, cons(0.0, 1.0)), Err(Error::NotConcave));
        let zero = D::piecewise_linear(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(maximize(&zero, cons(0.0, 1.0)), Err(Error::ZeroNorm));
        assert!(MvConstraint::new(0.0, 0.0).is_err());
    }

    #[test]
    fn temperature_does_not_move_the_argmax() {
        let d = D::cre();
        let base = maximize(&d, cons(0.5, 1.5)).unwrap();
        for lam in [0.1, 10.0] {
            let o = maximize(&d.scaled(lam).unwrap(), cons(0.5, 1.5)).unwrap();
            assert!(quantile_l2_distance(&o.distribution, &base.distribution) < 1e-12);
            assert!((o.max_value - lam * base.max_value).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_finds_no_counterexample() {
        let d = D::gini();
        let c0 = cons(0.0, 1.0);
        let r = oracle_falsify(&d, c0, 2000, 7, 1, &[]).unwrap();
        assert!(r.pass && r.best <= 1.0 / 3f64.sqrt() + 1e-9, "{r:?}");
        let w = D::wasserstein_sym();
        let opt = maximize(&w, c0).unwrap().distribution;
        let r = oracle_falsify(&w, c0, 100, 7, 1, &[opt]).unwrap();
        assert_eq!(r.best, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn oracle_flags_an_infeasible_injection() {
        // a law with variance 4 beats the s = 1 bound
        let wide = P::discrete(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        let r = oracle_falsify(&D::wasserstein_sym(), cons(0.0, 1.0), 10, 5, 3, &[wide]).unwrap();
        assert!(!r.pass && r.margin < 0.0);
    }

    #[test]
    fn random_laws_are_feasible_and_reproducible() {
        let c0 = cons(2.0, 3.0);
        for i in 0..50 {
            let law = random_feasible_law(c0, 7, 9, i);
            assert!((law.mean() - 2.0).abs() < 1e-12);
            assert!((law.std_dev() - 3.0).abs() < 1e-12);
            assert_eq!(law, random_feasible_law(c0, 7, 9, i));
        }
        assert_ne!(random_feasible_law(c0, 7, 9, 0), random_feasible_law(c0, 7, 9, 1));
    }

    #[test]
    fn glasser_equality_and_inequality() {
        let r = glasser_check(1.0).unwrap();
        assert!(r.pass && (r.phi_gini - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        let r = glasser_check(2.0).unwrap();
        assert!(r.pass && (r.phi_gini - 2.0 / 3f64.sqrt()).abs() < 1e-10);
        for i in 0..200 {
            let law = random_feasible_law(cons(0.0, 1.0), 5, 77, i);
            assert!(glasser_inequality(&law).unwrap());
        }
    }
}

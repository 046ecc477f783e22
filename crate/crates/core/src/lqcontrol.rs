//! Closed-form solution of the Choquet-regularized exploratory LQ problem.
//!
//! State `dX = (AX + Bμ)dt + √((CX + Dμ)² + D²σ²) dW`, running reward
//! `−M/2 x² − Rxμ − N/2 (μ² + σ²) − Px − Lμ + λΦ_h(Π)`, discount `ρ`. The
//! value function is `V(x) = ½k₂x² + k₁x + k₀` and the optimal policy at `x`
//! is the static maximizer with mean `μ*(x)` and standard deviation `σ*`.

use crate::dist::Distribution;
use crate::distortion::{Distortion, DistortionKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqModel<S> {
    pub a: S,
    pub b: S,
    pub c: S,
    pub d: S,
    pub m: S,
    pub r: S,
    pub n: S,
    pub p: S,
    pub l: S,
    pub rho: S,
    pub lambda: S,
}

/// One well-posedness condition. `margin` is positive when
/// the hypothesis holds and measures by how much it fails otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub name: &'static str,
    pub ok: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellPosedness {
    pub checks: Vec<Hypothesis>,
}

impl WellPosedness {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|h| h.ok)
    }

    pub fn get(&self, name: &str) -> Option<&Hypothesis> {
        self.checks.iter().find(|h| h.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|h| !h.ok).map(|h| h.name).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqSolution<S> {
    pub delta: S,
    pub k2: S,
    pub k1: S,
    pub k0: S,
    /// `‖h′‖₂` of the distortion the solution was built for.
    pub norm_hprime: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<S> {
    pub r2: S,
    pub r1: S,
    pub r0: S,
}

impl<S: Scalar> LqModel<S> {
    /// The model with `A = C = D = R = P = L = 0`, `B = M = N = λ = 1`, `ρ = 2`.
    pub fn benchmark() -> Self {
        let (zero, one) = (S::zero(), S::one());
        Self {
            a: zero,
            b: one,
            c: zero,
            d: zero,
            m: one,
            r: zero,
            n: one,
            p: zero,
            l: zero,
            rho: S::two(),
            lambda: one,
        }
    }

    /// `B + CD`.
    fn beta(&self) -> S {
        self.b + self.c * self.d
    }

    /// `ρ − (2A + C²)`.
    fn gamma(&self) -> S {
        self.rho - (S::two() * self.a + self.c * self.c)
    }

    /// The discount threshold `2A + C² + max((D²R² − 2NR(B+CD))/N, 0)`.
    pub fn rho_threshold(&self) -> S {
        let extra = (self.d * self.d * self.r * self.r - S::two() * self.n * self.r * self.beta()) / self.n;
        S::two() * self.a + self.c * self.c + extra.max(S::zero())
    }

    pub fn check_wellposed(&self) -> WellPosedness {
        let f = |x: S| x.as_f64();
        let mut checks = Vec::with_capacity(6);
        let mut push = |name: &'static str, margin: f64| {
            checks.push(Hypothesis {
                name,
                ok: margin > 0.0 || (name == "m_nonneg" && margin >= 0.0),
                margin,
            })
        };
        push("n_positive", f(self.n));
        push("m_nonneg", f(self.m));
        push("mn_exceeds_r2", f(self.m * self.n - self.r * self.r));
        let threshold = if self.n > S::zero() {
            f(self.rho_threshold())
        } else {
            f64::NAN
        };
        push("discount", f(self.rho) - threshold);
        push("rho_positive", f(self.rho));
        push("lambda_positive", f(self.lambda));
        let all_finite = [
            self.a, self.b, self.c, self.d, self.m, self.r, self.n, self.p, self.l, self.rho, self.lambda,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !all_finite {
            push("finite", -1.0);
        }
        WellPosedness { checks }
    }

    /// Solves the Riccati system for `d`.
    pub fn solve(&self, d: &Distortion<S>) -> Result<LqSolution<S>> {
        let report = self.check_wellposed();
        if !report.all_ok() {
            return Err(Error::NotWellPosed(report.failures().join(", ")));
        }
        let (beta, gamma) = (self.beta(), self.gamma());
        let dd = self.d * self.d;
        let delta = gamma * self.n + S::two() * beta * self.r - dd * self.m;
        let quad = beta * beta + gamma * dd;
        let c0 = self.r * self.r - self.m * self.n;
        let disc = delta * delta - S::lit(4.0) * quad * c0;
        assert!(disc >= S::zero(), "negative discriminant under well-posedness");
        // minus root, rationalized so that quad = 0 is covered
        let k2 = S::two() * c0 / (delta + disc.sqrt());
        let neff = self.n - k2 * dd;
        if !(neff > S::zero()) {
            return Err(Error::Degenerate(format!("N − k₂D² = {} is not positive", neff)));
        }
        let g = k2 * beta - self.r;
        let den = self.b * g + (self.a - self.rho) * neff;
        if den == S::zero() {
            return Err(Error::Degenerate("k₁ denominator vanishes".into()));
        }
        let k1 = (self.p * neff + self.l * g) / den;
        let norm_sq = d.l2_norm_sq();
        let lam = self.lambda;
        let shift = k1 * self.b - self.l;
        let k0 = (shift * shift + lam * lam * norm_sq) / (S::two() * self.rho * neff);
        Ok(LqSolution {
            delta,
            k2,
            k1,
            k0,
            norm_hprime: norm_sq.sqrt(),
        })
    }

    /// `N − k₂D²`.
    pub fn effective_n(&self, sol: &LqSolution<S>) -> S {
        self.n - sol.k2 * self.d * self.d
    }

    /// Residuals of the three Riccati equations at `sol`.
    pub fn riccati_residuals(&self, sol: &LqSolution<S>) -> Result<Residuals<S>> {
        let neff = self.effective_n(sol);
        if !(neff > S::zero()) {
            return Err(Error::Degenerate(format!("N − k₂D² = {} is not positive", neff)));
        }
        let g = sol.k2 * self.beta() - self.r;
        let shift = sol.k1 * self.b - self.l;
        let two_a_c2 = S::two() * self.a + self.c * self.c;
        let r2 = self.rho * sol.k2 - (g * g / neff + sol.k2 * two_a_c2 - self.m);
        let r1 = self.rho * sol.k1 - (shift * g / neff + sol.k1 * self.a - self.p);
        let norm_sq = sol.norm_hprime * sol.norm_hprime;
        let r0 = self.rho * sol.k0
            - (shift * shift + self.lambda * self.lambda * norm_sq) / (S::two() * neff);
        Ok(Residuals { r2, r1, r0 })
    }

    /// `(μ*(x), σ*(x)²)`.
    pub fn policy_moments(&self, sol: &LqSolution<S>, x: S) -> (S, S) {
        let neff = self.effective_n(sol);
        let mu = ((sol.k2 * self.beta() - self.r) * x + sol.k1 * self.b - self.l) / neff;
        let sd = self.lambda * sol.norm_hprime / neff;
        (mu, sd * sd)
    }

    /// Optimal policy law at `x`: quantile `μ*(x) + λh′(1 − p)/(N − k₂D²)`,
    /// in the named family for each catalog distortion.
    pub fn policy(&self, sol: &LqSolution<S>, d: &Distortion<S>, x: S) -> Result<Distribution<S>> {
        let one = S::one();
        let (mu, _) = self.policy_moments(sol, x);
        // σ̃ = λ/(N − k₂D²), including the distortion's weight
        let st = self.lambda * d.weight() / self.effective_n(sol);
        match d.kind() {
            DistortionKind::EpsGreedy { eps } => Distribution::discrete(&[
                (mu - *eps * st, one - *eps),
                (mu + (one - *eps) * st, *eps),
            ]),
            DistortionKind::DiscreteUniform { eps, n } => {
                let w = *eps / S::count(2 * n);
                let mut pts = vec![(mu, one - *eps)];
                for j in 1..=*n {
                    let j_s = S::count(j);
                    pts.push((mu - j_s * st, w));
                    pts.push((mu + j_s * st, w));
                }
                Distribution::discrete(&pts)
            }
            DistortionKind::Cre => Distribution::shifted_exponential(mu - st, one / st),
            DistortionKind::GaussianScore => Distribution::normal(mu, st),
            DistortionKind::InterEs { alpha } => {
                let w = one - *alpha;
                Distribution::discrete(&[
                    (mu - st / w, w),
                    (mu, S::two() * *alpha - one),
                    (mu + st / w, w),
                ])
            }
            DistortionKind::WassersteinSym => {
                Distribution::discrete(&[(mu - st, S::half()), (mu + st, S::half())])
            }
            DistortionKind::WassersteinAsym { alpha } => Distribution::discrete(&[
                (mu - (one - *alpha) * st, *alpha),
                (mu + *alpha * st, one - *alpha),
            ]),
            DistortionKind::Gini => Distribution::uniform(mu - st, mu + st),
            _ => {
                let unit = d.scaled(one / d.weight())?.hprime_law()?;
                unit.affine(mu, st)
            }
        }
    }

    /// `ρV(x)` subtracted from the maximized right-hand side of the HJB
    /// equation, evaluated with `V`, `μ*(x)` and `σ*`.
    pub fn hjb_residual(&self, sol: &LqSolution<S>, x: S) -> S {
        let half = S::half();
        let (mu, var) = self.policy_moments(sol, x);
        let sigma = var.sqrt();
        let v = sol.value(x);
        let v1 = sol.k2 * x + sol.k1;
        let v2 = sol.k2;
        let second = mu * mu + var;
        let inner = -self.r * x * mu - half * self.n * second - self.l * mu
            + self.lambda * sigma * sol.norm_hprime
            + self.c * self.d * x * mu * v2
            + half * self.d * self.d * second * v2
            + self.b * mu * v1;
        let rhs = inner + self.a * x * v1 - half * self.m * x * x - self.p * x
            + half * self.c * self.c * x * x * v2;
        rhs - self.rho * v
    }
}

impl<S: Scalar> LqSolution<S> {
    /// `V(x) = ½k₂x² + k₁x + k₀`.
    pub fn value(&self, x: S) -> S {
        S::half() * self.k2 * x * x + self.k1 * x + self.k0
    }
}

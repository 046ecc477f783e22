//! Euler–Maruyama simulation of the exploratory state and Monte Carlo
//! estimation of the discounted regularized reward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::choquet::phi;
use crate::distortion::Distortion;
use crate::error::{Error, Result};
use crate::lqcontrol::{LqModel, LqSolution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Requested truncation; the horizon used is `max(10/ρ, horizon)`.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair path `2i` with `2i + 1` driven by the negated increments.
    pub antithetic: bool,
    /// Number of equally spaced transversality checkpoints in `(0, T]`.
    pub checkpoints: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            n_paths: 10_000,
            seed: 0,
            antithetic: false,
            checkpoints: 10,
        }
    }
}

/// How the regularizer term is evaluated along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizerMode {
    /// `λσ*‖h′‖₂`, the maximal value at the policy's moments.
    #[default]
    ClosedForm,
    /// `λΦ_h(policy(x))` by quadrature at every step.
    Quadrature,
}

/// States at the checkpoint times, `states[k][path]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<S> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub value_estimate: f64,
    pub std_error: f64,
    /// `(T_k, e^{−ρT_k}·mean(X²))` at each checkpoint.
    pub transversality: Vec<(f64, f64)>,
    /// `e^{−ρT}`, the discount weight of the truncated tail.
    pub discount_tail: f64,
    pub horizon: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityReport {
    pub points: Vec<(f64, f64)>,
    pub pass: bool,
}

impl SimConfig {
    fn validate(&self, rho: f64) -> Result<(f64, usize)> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::InvalidParameter("antithetic sampling needs an even path count".into()));
        }
        let horizon = (10.0 / rho).max(self.horizon);
        if !(self.dt < horizon) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be below the horizon {}",
                self.dt, horizon
            )));
        }
        let steps = (horizon / self.dt).round() as usize;
        Ok((steps as f64 * self.dt, steps))
    }

    fn checkpoint_steps(&self, steps: usize) -> Vec<usize> {
        let k = self.checkpoints.max(1);
        let mut v: Vec<usize> = (1..=k).map(|i| (i * steps + k / 2) / k).filter(|&s| s > 0).collect();
        v.dedup();
        v
    }
}

/// Sum with pairwise splitting: reproducible for a fixed input order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct PathOutput {
    reward: f64,
    checkpoints: Vec<f64>,
}

/// Runs one Euler–Maruyama path (or an antithetic pair's member) and
/// returns the discounted reward sum and the states at `marks`.
#[allow(clippy::too_many_arguments)]
fn run_path<S, Fm, Fv, Fr>(
    model: &LqModel<S>,
    mean_fn: &Fm,
    var_fn: &Fv,
    reward_fn: &Fr,
    x0: S,
    dt: f64,
    steps: usize,
    marks: &[usize],
    rng: &mut ChaCha8Rng,
    sign: f64,
) -> Result<PathOutput>
where
    S: Scalar,
    Fm: Fn(S) -> S,
    Fv: Fn(S) -> S,
    Fr: Fn(S, S, S) -> f64,
{
    let rho = model.rho.as_f64();
    let w0 = -(-rho * dt).exp_m1() / rho;
    let decay = (-rho * dt).exp();
    let sqrt_dt = S::lit(dt.sqrt());
    let dt_s = S::lit(dt);
    let mut x = x0;
    let mut discount = 1.0;
    let mut reward = 0.0;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut next = 0;
    for i in 0..steps {
        let mu = mean_fn(x);
        let var = var_fn(x);
        reward += discount * w0 * reward_fn(x, mu, var);
        let drift = model.a * x + model.b * mu;
        let lin = model.c * x + model.d * mu;
        let diff2 = lin * lin + model.d * model.d * var;
        if diff2 < S::zero() || !diff2.is_finite() {
            return Err(Error::Degenerate(format!("diffusion coefficient² = {} at step {}", diff2, i)));
        }
        x = x + drift * dt_s;
        if diff2 > S::zero() {
            let z: f64 = rng.sample(StandardNormal);
            x = x + diff2.sqrt() * sqrt_dt * S::lit(sign * z);
        }
        discount *= decay;
        if next < marks.len() && marks[next] == i + 1 {
            checkpoints.push(x.as_f64());
            next += 1;
        }
    }
    Ok(PathOutput { reward, checkpoints })
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates `dX = (AX + Bμ(X))dt + √((CX + Dμ(X))² + D²σ²(X)) dW` and
/// records every path at the checkpoint times.
pub fn simulate_state<S, Fm, Fv>(
    model: &LqModel<S>,
    mean_fn: Fm,
    var_fn: Fv,
    x0: S,
    cfg: &SimConfig,
) -> Result<PathEnsemble<S>>
where
    S: Scalar,
    Fm: Fn(S) -> S + Sync,
    Fv: Fn(S) -> S + Sync,
{
    let (horizon, steps) = cfg.validate(model.rho.as_f64())?;
    let marks = cfg.checkpoint_steps(steps);
    let zero_reward = |_: S, _: S, _: S| 0.0;
    let outputs: Vec<PathOutput> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|j| {
            let (idx, sign) = path_stream(cfg, j);
            let mut rng = stream(cfg.seed, idx);
            run_path(model, &mean_fn, &var_fn, &zero_reward, x0, cfg.dt, steps, &marks, &mut rng, sign)
        })
        .collect::<Result<_>>()?;
    let times = marks.iter().map(|&m| m as f64 * horizon / steps as f64).collect();
    let states = (0..marks.len())
        .map(|k| outputs.iter().map(|o| S::lit(o.checkpoints[k])).collect())
        .collect();
    Ok(PathEnsemble { times, states })
}

fn path_stream(cfg: &SimConfig, j: usize) -> (u64, f64) {
    if cfg.antithetic {
        ((j / 2) as u64, if j % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (j as u64, 1.0)
    }
}

/// Monte Carlo estimate of `E[∫₀^T e^{−ρt}(r̃(X_t, Π*_t) + λΦ_h(Π*_t)) dt]`
/// under the closed-form optimal policy, with exact per-step discount
/// weights `e^{−ρtᵢ}(1 − e^{−ρ dt})/ρ`.
pub fn estimate_value<S: Scalar>(
    model: &LqModel<S>,
    sol: &LqSolution<S>,
    d: &Distortion<S>,
    x0: S,
    cfg: &SimConfig,
    mode: RegularizerMode,
) -> Result<SimResult> {
    let (horizon, steps) = cfg.validate(model.rho.as_f64())?;
    let marks = cfg.checkpoint_steps(steps);
    let half = S::half();
    let (_, var_star) = model.policy_moments(sol, S::zero());
    let mean_fn = |x: S| model.policy_moments(sol, x).0;
    let var_fn = |_: S| var_star;
    let reg_closed = model.lambda * var_star.sqrt() * sol.norm_hprime;
    let reward_fn = |x: S, mu: S, var: S| {
        let base = -half * model.m * x * x - model.r * x * mu - half * model.n * (mu * mu + var)
            - model.p * x
            - model.l * mu;
        let reg = match mode {
            RegularizerMode::ClosedForm => reg_closed,
            RegularizerMode::Quadrature => model
                .policy(sol, d, x)
                .and_then(|law| phi(d, &law))
                .map(|v| model.lambda * v)
                .unwrap_or(S::nan()),
        };
        (base + reg).as_f64()
    };

    let outputs: Vec<PathOutput> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|j| {
            let (idx, sign) = path_stream(cfg, j);
            let mut rng = stream(cfg.seed, idx);
            run_path(model, &mean_fn, &var_fn, &reward_fn, x0, cfg.dt, steps, &marks, &mut rng, sign)
        })
        .collect::<Result<_>>()?;

    let units: Vec<f64> = if cfg.antithetic {
        outputs.chunks(2).map(|p| 0.5 * (p[0].reward + p[1].reward)).collect()
    } else {
        outputs.iter().map(|o| o.reward).collect()
    };
    let (value_estimate, std_error) = mean_and_se(&units);

    let rho = model.rho.as_f64();
    let transversality: Vec<(f64, f64)> = marks
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let t = m as f64 * horizon / steps as f64;
            let sq: Vec<f64> = outputs.iter().map(|o| o.checkpoints[k] * o.checkpoints[k]).collect();
            (t, (-rho * t).exp() * pairwise_sum(&sq) / sq.len() as f64)
        })
        .collect();

    let discount_tail = (-rho * horizon).exp();
    let mut warnings = Vec::new();
    if let Some(&(_, last)) = transversality.last() {
        if last > 1e-3 * value_estimate.abs() {
            warnings.push(format!(
                "e^(-rho T) E[X_T^2] = {:.3e} exceeds 1e-3 of the estimate",
                last
            ));
        }
    }
    Ok(SimResult {
        value_estimate,
        std_error,
        transversality,
        discount_tail,
        horizon,
        steps,
        warnings,
    })
}

/// PASS iff the last discounted second moment is below `1e-2` of the first
/// (plus `1e-12`).
pub fn transversality_check(points: &[(f64, f64)]) -> Result<TransversalityReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("transversality needs at least two checkpoints".into()));
    }
    let first = points[0].1;
    let last = points[points.len() - 1].1;
    Ok(TransversalityReport {
        points: points.to_vec(),
        pass: last < 1e-2 * (first + 1e-12),
    })
}

/// `(T_k, e^{−ρT_k}·mean(X²))` for an ensemble.
pub fn discounted_second_moments<S: Scalar>(ens: &PathEnsemble<S>, rho: f64) -> Vec<(f64, f64)> {
    ens.times
        .iter()
        .zip(&ens.states)
        .map(|(&t, xs)| {
            let sq: Vec<f64> = xs.iter().map(|x| x.as_f64() * x.as_f64()).collect();
            (t, (-rho * t).exp() * pairwise_sum(&sq) / sq.len() as f64)
        })
        .collect()
}

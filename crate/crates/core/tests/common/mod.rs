//! Generators shared by the property and acceptance suites. Every builder
//! maps a small vector of uniforms in [0, 1) to a valid object, so the same
//! code serves proptest strategies and seeded loops.

#![allow(dead_code)]

use choquet::{Distortion, Distribution};
use rand::Rng;

pub const U: usize = 10;

/// Affine map of a uniform onto `[lo, hi]`.
pub fn lerp(u: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * u
}

/// The seven named distortions with closed-form norms and optimizers.
pub fn catalog() -> Vec<(&'static str, Distortion, f64)> {
    vec![
        ("eps-greedy(0.2)", Distortion::eps_greedy(0.2).unwrap(), 0.2 * 0.8),
        (
            "discrete-uniform(0.3,2)",
            Distortion::discrete_uniform(0.3, 2).unwrap(),
            0.3 * 3.0 * 5.0 / 6.0,
        ),
        ("cre", Distortion::cre(), 1.0),
        ("gaussian-score", Distortion::gaussian_score(), 1.0),
        ("inter-es(0.75)", Distortion::inter_es(0.75).unwrap(), 2.0 / 0.25),
        ("wasserstein-asym(0.3)", Distortion::wasserstein_asym(0.3).unwrap(), 0.3 * 0.7),
        ("gini", Distortion::gini(), 1.0 / 3.0),
    ]
}

/// Continuous concave piecewise-linear `h` with `h(0) = h(1) = 0`.
pub fn concave_piecewise(u: &[f64]) -> Distortion {
    let k = 2 + (u[0] * 3.0) as usize;
    let mut cuts: Vec<f64> = u[1..k].iter().map(|&v| lerp(v, 0.02, 0.98)).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut p = vec![0.0];
    p.extend(cuts);
    p.push(1.0);
    let mut slopes: Vec<f64> = u[k..2 * k].iter().map(|&v| lerp(v, -3.0, 3.0)).collect();
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let avg: f64 = slopes.iter().zip(p.windows(2)).map(|(s, w)| s * (w[1] - w[0])).sum();
    let mut h = vec![0.0];
    for (s, w) in slopes.iter().zip(p.windows(2)) {
        let last = *h.last().unwrap();
        h.push(last + (s - avg) * (w[1] - w[0]));
    }
    *h.last_mut().unwrap() = 0.0;
    Distortion::piecewise_linear(p, h).unwrap()
}

/// One of the catalog kinds with randomized parameters, or a random
/// concave piecewise `h`.
pub fn distortion_from(code: usize, u: &[f64]) -> Distortion {
    match code % 10 {
        0 => Distortion::eps_greedy(lerp(u[0], 0.01, 0.99)).unwrap(),
        1 => Distortion::discrete_uniform(lerp(u[0], 0.01, 1.0), 1 + (u[1] * 5.0) as usize).unwrap(),
        2 => Distortion::cre(),
        3 => Distortion::gaussian_score(),
        4 => Distortion::inter_es(lerp(u[0], 0.5, 0.99)).unwrap(),
        5 => Distortion::wasserstein_sym(),
        6 => Distortion::wasserstein_asym(lerp(u[0], 0.01, 0.99)).unwrap(),
        7 => Distortion::gini(),
        8 => Distortion::gini().scaled(lerp(u[0], 0.1, 5.0)).unwrap(),
        _ => concave_piecewise(u),
    }
}

/// Discrete (2–5 atoms), uniform, normal, shifted exponential or tabulated.
pub fn law_from(code: usize, u: &[f64]) -> Distribution {
    match code % 5 {
        0 => {
            let k = 2 + (u[0] * 4.0) as usize;
            let pts: Vec<(f64, f64)> = (0..k).map(|i| (lerp(u[1 + i], -5.0, 5.0), lerp(u[5 + i.min(4)], 0.05, 1.0))).collect();
            let total: f64 = pts.iter().map(|p| p.1).sum();
            let pts: Vec<(f64, f64)> = pts.iter().map(|&(x, w)| (x, w / total)).collect();
            Distribution::discrete(&pts).unwrap()
        }
        1 => {
            let a = lerp(u[0], -5.0, 5.0);
            Distribution::uniform(a, a + lerp(u[1], 0.1, 5.0)).unwrap()
        }
        2 => Distribution::normal(lerp(u[0], -5.0, 5.0), lerp(u[1], 0.1, 3.0)).unwrap(),
        3 => Distribution::shifted_exponential(lerp(u[0], -5.0, 5.0), lerp(u[1], 0.3, 3.0)).unwrap(),
        _ => {
            let mut p = vec![0.0, lerp(u[0], 0.1, 0.45), lerp(u[1], 0.55, 0.9), 1.0];
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut q = vec![lerp(u[2], -5.0, 0.0)];
            for i in 0..3 {
                let last = *q.last().unwrap();
                q.push(last + lerp(u[3 + i], 0.05, 3.0));
            }
            Distribution::grid(p, q).unwrap()
        }
    }
}

pub fn uniforms<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..U).map(|_| rng.random::<f64>()).collect()
}

/// Moves mass `w·m` off atom `i` of a discrete law onto `x − a` and
/// `x + b`, preserving the mean. The result dominates the input in convex
/// order.
pub fn mean_preserving_spread(law: &Distribution, u: &[f64]) -> Distribution {
    let (atoms, probs) = law.atoms().expect("discrete law");
    let i = ((u[0] * atoms.len() as f64) as usize).min(atoms.len() - 1);
    let moved = probs[i] * lerp(u[1], 0.1, 1.0);
    let a = lerp(u[2], 0.1, 3.0);
    let b = lerp(u[3], 0.1, 3.0);
    // masses ma, mb with ma + mb = moved and -ma·a + mb·b = 0
    let mb = moved * a / (a + b);
    let ma = moved - mb;
    let mut pts: Vec<(f64, f64)> = atoms.iter().copied().zip(probs.iter().copied()).collect();
    pts[i].1 -= moved;
    pts.push((atoms[i] - a, ma));
    pts.push((atoms[i] + b, mb));
    pts.retain(|p| p.1 > 0.0);
    Distribution::discrete(&pts).unwrap()
}

/// `|a − b| ≤ tol·max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

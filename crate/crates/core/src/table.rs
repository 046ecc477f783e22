//! Two-column CSV tables: `p,q` for quantile functions and `p,h` for
//! piecewise-linear distortions.

use std::io::{Read, Write};
use std::path::Path;

use crate::dist::{Distribution, Kind};
use crate::distortion::{Distortion, DistortionKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Seed levels (logit-spaced and uniform, each) for laws without an exact
/// finite table; adaptive refinement adds more.
pub const DEFAULT_NODES: usize = 257;

/// Innermost level used in place of an infinite endpoint quantile.
pub const TAIL_LEVEL: f64 = 1e-12;

/// A panel `[p₀, p₁]` is bisected while `|Q(mid) − lerp(mid)|·(p₁ − p₀)`
/// exceeds this.
pub const PANEL_TOL: f64 = 1e-11;

fn read_pairs<R: Read>(reader: R, second: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "p" || &headers[1] != second {
        return Err(Error::Parse(format!(
            "expected header \"p,{}\", found \"{}\"",
            second,
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut p = Vec::new();
    let mut v = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {:?}: {}", i + 1, &rec[j], e)))
        };
        p.push(num(0)?);
        v.push(num(1)?);
    }
    Ok((p, v))
}

fn write_pairs<W: Write, S: Scalar>(writer: W, second: &str, p: &[S], v: &[S]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["p", second])?;
    for (a, b) in p.iter().zip(v) {
        wtr.write_record([format!("{:e}", a.as_f64()), format!("{:e}", b.as_f64())])?;
    }
    wtr.flush()?;
    Ok(())
}

fn lift<S: Scalar>(v: Vec<f64>) -> Vec<S> {
    v.into_iter().map(S::lit).collect()
}

/// Parses a `p,q` table into a tabulated law.
pub fn parse_quantile_table<S: Scalar, R: Read>(reader: R) -> Result<Distribution<S>> {
    let (p, q) = read_pairs(reader, "q")?;
    Distribution::grid(lift(p), lift(q))
}

pub fn read_quantile_table<S: Scalar>(path: &Path) -> Result<Distribution<S>> {
    parse_quantile_table(std::fs::File::open(path)?)
}

/// Parses a `p,h` table into a piecewise-linear distortion.
pub fn parse_distortion_table<S: Scalar, R: Read>(reader: R) -> Result<Distortion<S>> {
    let (p, h) = read_pairs(reader, "h")?;
    Distortion::piecewise_linear(lift(p), lift(h))
}

pub fn read_distortion_table<S: Scalar>(path: &Path) -> Result<Distortion<S>> {
    parse_distortion_table(std::fs::File::open(path)?)
}

/// Rows `(p, Q(p))` describing `dist` as a tabulated law.
///
/// Discrete, uniform and tabulated laws are reproduced exactly. Other laws
/// start from `nodes` logit-spaced and `nodes` uniform levels plus the law's
/// breakpoints, then panels are bisected until linear interpolation is
/// within [`PANEL_TOL`]. Infinite endpoint quantiles are replaced by
/// `Q(1e-12)` and `Q(1 − 1e-12)`.
pub fn quantile_rows<S: Scalar>(dist: &Distribution<S>, nodes: usize) -> (Vec<S>, Vec<S>) {
    match dist.kind() {
        Kind::Discrete { atoms, cum, .. } => {
            let mut p = Vec::with_capacity(2 * atoms.len());
            let mut q = Vec::with_capacity(2 * atoms.len());
            let mut lo = S::zero();
            for (a, &c) in atoms.iter().zip(cum) {
                p.extend([lo, c]);
                q.extend([*a, *a]);
                lo = c;
            }
            *p.last_mut().unwrap() = S::one();
            (p, q)
        }
        Kind::Uniform { a, b } => (vec![S::zero(), S::one()], vec![*a, *b]),
        Kind::Grid { p, q } => (p.clone(), q.clone()),
        _ => sampled_rows(dist, nodes.max(2)),
    }
}

fn seed_levels<S: Scalar>(dist: &Distribution<S>, nodes: usize) -> Vec<S> {
    let tail = S::lit(TAIL_LEVEL);
    let t_max = ((S::one() - tail) / tail).ln();
    let mut levels = Vec::with_capacity(2 * nodes + 2);
    for i in 0..nodes {
        let t = -t_max + S::two() * t_max * S::count(i) / S::count(nodes - 1);
        levels.push(S::one() / (S::one() + (-t).exp()));
        levels.push(S::count(i + 1) / S::count(nodes + 1));
    }
    levels.extend(dist.breakpoints());
    levels.retain(|&p| p > S::zero() && p < S::one());
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    levels.dedup();
    levels
}

/// Appends the interior rows of `[a, b]` (both excluded) in order.
fn refine<S: Scalar>(dist: &Distribution<S>, a: (S, S), b: (S, S), depth: u32, out: &mut Vec<(S, S)>) {
    let mid = S::half() * (a.0 + b.0);
    if depth >= 48 || mid <= a.0 || mid >= b.0 {
        return;
    }
    let qm = dist.quantile(mid).max(a.1).min(b.1);
    if (qm - S::half() * (a.1 + b.1)).abs() * (b.0 - a.0) <= S::lit(PANEL_TOL) {
        return;
    }
    refine(dist, a, (mid, qm), depth + 1, out);
    out.push((mid, qm));
    refine(dist, (mid, qm), b, depth + 1, out);
}

fn sampled_rows<S: Scalar>(dist: &Distribution<S>, nodes: usize) -> (Vec<S>, Vec<S>) {
    let tail = S::lit(TAIL_LEVEL);
    let (lo, hi) = dist.support();
    let lo = if lo.is_finite() { lo } else { dist.quantile(tail) };
    let hi = if hi.is_finite() { hi } else { dist.upper_quantile(tail) };

    // (level, value on the left, value on the right)
    let mut knots = vec![(S::zero(), lo, lo)];
    for l in seed_levels(dist, nodes) {
        let prev = knots.last().unwrap().2;
        let left = dist.left_quantile(l).max(prev);
        let right = dist.right_quantile(l).max(left);
        knots.push((l, left, right));
    }
    let prev = knots.last().unwrap().2;
    knots.push((S::one(), hi.max(prev), hi.max(prev)));

    let mut rows = vec![(S::zero(), lo)];
    for w in knots.windows(2) {
        let (a, b) = ((w[0].0, w[0].2), (w[1].0, w[1].1));
        refine(dist, a, b, 0, &mut rows);
        rows.push(b);
        if w[1].2 > w[1].1 {
            rows.push((w[1].0, w[1].2));
        }
    }
    rows.into_iter().unzip()
}

/// Writes `dist` as a `p,q` table (see [`quantile_rows`]).
pub fn write_quantile_table<S: Scalar, W: Write>(writer: W, dist: &Distribution<S>, nodes: usize) -> Result<()> {
    let (p, q) = quantile_rows(dist, nodes);
    write_pairs(writer, "q", &p, &q)
}

/// Writes a piecewise-linear distortion (weight folded into `h`) as a
/// `p,h` table. Other kinds are rejected.
pub fn write_distortion_table<S: Scalar, W: Write>(writer: W, d: &Distortion<S>) -> Result<()> {
    match d.kind() {
        DistortionKind::PiecewiseLinear { p, h } => {
            let h: Vec<S> = h.iter().map(|&v| v * d.weight()).collect();
            write_pairs(writer, "h", p, &h)
        }
        _ => Err(Error::Unsupported(format!(
            "only piecewise distortions are tabulated, got {}",
            d.tag()
        ))),
    }
}

//! Text configuration: flat `key = value` files with `[section]` headers,
//! and inline specs of the form `tag:key=value,key=value`.
//!
//! Every builder consumes the keys it understands and rejects the rest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dist::Distribution;
use crate::distortion::Distortion;
use crate::error::{Error, Result};
use crate::lqcontrol::LqModel;
use crate::mcsim::SimConfig;
use crate::scalar::Scalar;
use crate::table::{read_distortion_table, read_quantile_table};

/// Key/value pairs of one section or inline spec.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    context: String,
    entries: BTreeMap<String, String>,
}

impl Params {
    pub fn new(context: impl Into<String>) -> Self {
        Self {
            context: context.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Parses `tag` or `tag:key=value,...`; the tag is stored under `kind`.
    pub fn inline(context: &str, spec: &str) -> Result<Self> {
        let mut out = Self::new(context);
        let (tag, rest) = match spec.split_once(':') {
            Some((t, r)) => (t, Some(r)),
            None => (spec, None),
        };
        out.insert("kind", tag.trim())?;
        for item in rest.into_iter().flat_map(|r| r.split(',')).filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("{}: expected key=value, found {:?}", context, item)))?;
            out.insert(k.trim(), v.trim())?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        if key.is_empty() {
            return Err(Error::Parse(format!("{}: empty key", self.context)));
        }
        if self.entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Parse(format!("{}: duplicate key {:?}", self.context, key)));
        }
        Ok(())
    }

    /// Inserts unless the key is already present.
    pub fn set_default(&mut self, key: &str, value: &str) {
        self.entries.entry(key.to_string()).or_insert_with(|| value.to_string());
    }

    /// Inserts, replacing an existing value.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn require(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::Parse(format!("{}: missing required key {:?}", self.context, key)))
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse::<T>()
            .map_err(|e| Error::Parse(format!("{}: {} = {:?}: {}", self.context, key, raw, e)))
    }

    pub fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            Some(raw) => self.parse_as(key, &raw).map(Some),
            None => Ok(None),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        self.parse_as(key, &raw)
    }

    fn take_scalar<S: Scalar>(&mut self, key: &str) -> Result<Option<S>> {
        Ok(self.take_parsed::<f64>(key)?.map(S::lit))
    }

    fn require_scalar<S: Scalar>(&mut self, key: &str) -> Result<S> {
        Ok(S::lit(self.require_parsed::<f64>(key)?))
    }

    fn take_list<S: Scalar>(&mut self, key: &str) -> Result<Vec<S>> {
        let raw = self.require(key)?;
        raw.split(';')
            .map(|s| self.parse_as::<f64>(key, s.trim()).map(S::lit))
            .collect()
    }

    /// Fails if any key was left unconsumed.
    pub fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(Error::Parse(format!("{}: unknown key(s) {}", self.context, keys.join(", "))))
        }
    }
}

/// A parsed configuration file. Keys before the first header are rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    sections: BTreeMap<String, Params>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Params> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if sections.contains_key(&name) {
                    return Err(Error::Parse(format!("line {}: duplicate section [{}]", i + 1, name)));
                }
                sections.insert(name.clone(), Params::new(format!("[{}]", name)));
                current = Some(name);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            let name = current
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("line {}: key outside a section", i + 1)))?;
            sections.get_mut(name).expect("section exists").insert(k.trim(), v.trim())?;
        }
        Ok(Self { sections })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Removes and returns a section.
    pub fn take(&mut self, name: &str) -> Option<Params> {
        self.sections.remove(name)
    }

    /// Fails if any section was left unconsumed.
    pub fn finish(self) -> Result<()> {
        if self.sections.is_empty() {
            Ok(())
        } else {
            let names: Vec<&str> = self.sections.keys().map(String::as_str).collect();
            Err(Error::Parse(format!("unknown section(s) {}", names.join(", "))))
        }
    }
}

/// Builds a distortion. Keys: `kind`, plus `eps`, `n`, `alpha` as the kind
/// needs, `file` for `piecewise` (a `p,h` table) and `from-quantile` (a
/// `p,q` table, with optional `mean`), and an optional `weight`.
pub fn distortion_from_params<S: Scalar>(mut p: Params) -> Result<Distortion<S>> {
    let kind = p.require("kind")?;
    let d = match kind.as_str() {
        "gini" => Distortion::gini(),
        "cre" => Distortion::cre(),
        "gaussian-score" => Distortion::gaussian_score(),
        "wasserstein-sym" => Distortion::wasserstein_sym(),
        "eps-greedy" => Distortion::eps_greedy(p.require_scalar("eps")?)?,
        "discrete-uniform" => {
            let eps = p.require_scalar("eps")?;
            Distortion::discrete_uniform(eps, p.require_parsed("n")?)?
        }
        "inter-es" => Distortion::inter_es(p.require_scalar("alpha")?)?,
        "wasserstein-asym" => Distortion::wasserstein_asym(p.require_scalar("alpha")?)?,
        "piecewise" => read_distortion_table(&PathBuf::from(p.require("file")?))?,
        "from-quantile" => {
            let source: Distribution<S> = read_quantile_table(&PathBuf::from(p.require("file")?))?;
            let mean = p.take_scalar("mean")?.unwrap_or_else(|| source.mean());
            Distortion::from_distribution(&source, mean)?
        }
        other => return Err(Error::Parse(format!("unknown distortion kind {:?}", other))),
    };
    let weight = p.take_scalar::<S>("weight")?;
    p.finish()?;
    match weight {
        Some(w) => d.scaled(w),
        None => Ok(d),
    }
}

/// Builds a law. Kinds: `dirac` (`value`), `two-point` (`lo`, `hi`,
/// `p_hi`), `three-point` (`center`, `spread`, `p_tail`), `uniform` (`a`,
/// `b`), `normal` (`mean`, `sd`), `shifted-exp` (`shift`, `rate`),
/// `discrete` (`atoms`, `probs` as `;`-separated lists), `grid` (`file`).
pub fn distribution_from_params<S: Scalar>(mut p: Params) -> Result<Distribution<S>> {
    let kind = p.require("kind")?;
    let d = match kind.as_str() {
        "dirac" => Distribution::dirac(p.require_scalar("value")?),
        "two-point" => Distribution::two_point(
            p.require_scalar("lo")?,
            p.require_scalar("hi")?,
            p.require_scalar("p_hi")?,
        )?,
        "three-point" => Distribution::three_point(
            p.require_scalar("center")?,
            p.require_scalar("spread")?,
            p.require_scalar("p_tail")?,
        )?,
        "uniform" => Distribution::uniform(p.require_scalar("a")?, p.require_scalar("b")?)?,
        "normal" => Distribution::normal(p.require_scalar("mean")?, p.require_scalar("sd")?)?,
        "shifted-exp" => Distribution::shifted_exponential(
            p.take_scalar("shift")?.unwrap_or(S::zero()),
            p.require_scalar("rate")?,
        )?,
        "discrete" => {
            let atoms: Vec<S> = p.take_list("atoms")?;
            let probs: Vec<S> = p.take_list("probs")?;
            if atoms.len() != probs.len() {
                return Err(Error::Parse("atoms and probs differ in length".into()));
            }
            let pts: Vec<(S, S)> = atoms.into_iter().zip(probs).collect();
            Distribution::discrete(&pts)?
        }
        "grid" => read_quantile_table(&PathBuf::from(p.require("file")?))?,
        other => return Err(Error::Parse(format!("unknown distribution kind {:?}", other))),
    };
    p.finish()?;
    Ok(d)
}

/// Builds an LQ model from keys `a b c d m r n p l rho lambda`; missing
/// keys take the benchmark values.
pub fn model_from_params<S: Scalar>(mut p: Params) -> Result<LqModel<S>> {
    let base = LqModel::<S>::benchmark();
    let mut get = |key: &str, default: S| -> Result<S> { Ok(p.take_scalar(key)?.unwrap_or(default)) };
    let m = LqModel {
        a: get("a", base.a)?,
        b: get("b", base.b)?,
        c: get("c", base.c)?,
        d: get("d", base.d)?,
        m: get("m", base.m)?,
        r: get("r", base.r)?,
        n: get("n", base.n)?,
        p: get("p", base.p)?,
        l: get("l", base.l)?,
        rho: get("rho", base.rho)?,
        lambda: get("lambda", base.lambda)?,
    };
    p.finish()?;
    Ok(m)
}

/// Builds a simulation config from keys `dt horizon paths seed antithetic
/// checkpoints`; missing keys take [`SimConfig::default`].
pub fn sim_from_params(mut p: Params) -> Result<SimConfig> {
    let base = SimConfig::default();
    let cfg = SimConfig {
        dt: p.take_parsed("dt")?.unwrap_or(base.dt),
        horizon: p.take_parsed("horizon")?.unwrap_or(base.horizon),
        n_paths: p.take_parsed("paths")?.unwrap_or(base.n_paths),
        seed: p.take_parsed("seed")?.unwrap_or(base.seed),
        antithetic: p.take_parsed("antithetic")?.unwrap_or(base.antithetic),
        checkpoints: p.take_parsed("checkpoints")?.unwrap_or(base.checkpoints),
    };
    p.finish()?;
    Ok(cfg)
}

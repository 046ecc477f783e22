use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use choquet::params::{distortion_from_params, distribution_from_params, model_from_params, sim_from_params};
use choquet::params::{ConfigFile, Params};
use choquet::table::write_quantile_table;
use choquet::{
    estimate_value, maximize, phi_quantile, phi_survival, transversality_check, Distortion, Distribution, Error,
    LqModel, MvConstraint, RegularizerMode, RegularizerValue, Result,
};
use serde_json::{json, Value};

use crate::{Cli, Command, DistortionArgs, ModelArgs, RouteArg};

const SECTIONS: [&str; 5] = ["distortion", "distribution", "model", "sim", "output"];
const SEED_VAR: &str = "CHOQUET_SEED";

pub const SCHEMA_HELP: &str = "\
config schema (flags override these keys):
  [distortion]   kind = gini | cre | gaussian-score | eps-greedy | discrete-uniform | inter-es
                        | wasserstein-sym | wasserstein-asym | piecewise | from-quantile
                 eps, n, alpha, file, mean, weight (as the kind needs)
  [distribution] kind = dirac | two-point | three-point | uniform | normal | shifted-exp | discrete | grid
                 value | lo, hi, p_hi | center, spread, p_tail | a, b | mean, sd | shift, rate
                 | atoms, probs (';'-separated) | file
  [model]        a b c d m r n p l rho lambda
  [sim]          dt horizon paths seed antithetic checkpoints
  [output]       path
inline specs: tag or tag:key=value,key=value
tables: CSV with header p,q (quantile) or p,h (piecewise distortion)";

/// 1 for malformed input (usage), 2 for inputs that parse but fail validation.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

/// Config sections not yet consumed by the running command.
struct Sections {
    distortion: Option<Params>,
    distribution: Option<Params>,
    model: Option<Params>,
    sim: Option<Params>,
    output_path: Option<PathBuf>,
}

impl Sections {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => ConfigFile::read(p)?,
            None => ConfigFile::default(),
        };
        let mut take = |name: &str| cfg.take(name);
        let [distortion, distribution, model, sim, output] = SECTIONS.map(&mut take);
        cfg.finish()?;
        let output_path = match output {
            Some(mut o) => {
                let path = o.take("path").map(PathBuf::from);
                o.finish()?;
                path
            }
            None => None,
        };
        Ok(Self {
            distortion,
            distribution,
            model,
            sim,
            output_path,
        })
    }

    /// Builds every section the command left untouched, so that unknown or
    /// malformed keys are reported regardless of the command.
    fn finish(self) -> Result<()> {
        if let Some(p) = self.distortion {
            distortion_from_params::<f64>(p)?;
        }
        if let Some(p) = self.distribution {
            distribution_from_params::<f64>(p)?;
        }
        if let Some(p) = self.model {
            model_from_params::<f64>(p)?;
        }
        if let Some(p) = self.sim {
            sim_from_params(p)?;
        }
        Ok(())
    }

    fn distortion(&mut self, args: &DistortionArgs) -> Result<Distortion> {
        let mut p = match &args.distortion {
            Some(spec) => Params::inline("--distortion", spec)?,
            None => self.distortion.take().ok_or_else(|| {
                Error::Parse("no distortion: pass --distortion or a [distortion] section".into())
            })?,
        };
        if let Some(f) = &args.file {
            p.set("file", &f.to_string_lossy());
        }
        distortion_from_params(p)
    }

    fn model(&mut self, args: &ModelArgs) -> Result<LqModel> {
        let mut p = match &args.model {
            Some(path) => read_model_file(path)?,
            None => self.model.take().unwrap_or_else(|| Params::new("[model]")),
        };
        let flags = [
            ("a", args.a),
            ("b", args.b),
            ("c", args.c),
            ("d", args.d),
            ("m", args.m),
            ("r", args.r),
            ("n", args.n),
            ("p", args.p),
            ("l", args.l),
            ("rho", args.rho),
            ("lambda", args.lambda),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                p.set(key, &v.to_string());
            }
        }
        model_from_params(p)
    }
}

/// A model file may hold a `[model]` section or bare `key = value` lines.
fn read_model_file(path: &Path) -> Result<Params> {
    let text = std::fs::read_to_string(path)?;
    let text = if text.lines().any(|l| l.trim_start().starts_with('[')) {
        text
    } else {
        format!("[model]\n{}", text)
    };
    let mut cfg = ConfigFile::parse(&text)?;
    let p = cfg
        .take("model")
        .ok_or_else(|| Error::Parse(format!("{}: no [model] section", path.display())))?;
    cfg.finish()?;
    Ok(p)
}

/// Splits `gini,inter-es:alpha=0.75,discrete-uniform:eps=0.3,n=2` into
/// specs; an item holding `=` but no `:` continues the previous spec.
fn split_specs(list: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.contains('=') && !item.contains(':') {
            let last = out
                .last_mut()
                .ok_or_else(|| Error::Parse(format!("--distortions: {:?} has no tag", item)))?;
            last.push(',');
            last.push_str(item);
        } else {
            out.push(item.to_string());
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("--distortions: empty list".into()));
    }
    Ok(out)
}

/// Maps `-0.0` to `0.0` for output.
fn z(v: f64) -> f64 {
    v + 0.0
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_table(path: &Path, law: &Distribution, nodes: usize) -> Result<()> {
    write_quantile_table(File::create(path)?, law, nodes)
}

/// `out.csv` for a single state, `out-x0.csv`, `out-x1.csv`, ... otherwise.
fn indexed_path(base: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{}-x{}.{}", stem, index, ext.to_string_lossy()),
        None => format!("{}-x{}", stem, index),
    };
    base.with_file_name(name)
}

fn phi_with_route(d: &Distortion, law: &Distribution, route: RouteArg) -> Result<RegularizerValue> {
    match route {
        RouteArg::Quantile => phi_quantile(d, law),
        RouteArg::Survival => phi_survival(d, law),
        RouteArg::Auto => match phi_quantile(d, law) {
            Err(Error::MixedDiscontinuity { .. }) => phi_survival(d, law),
            other => other,
        },
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let mut sec = Sections::load(cli.config.as_deref())?;
    let output_path = cli.output_path.clone().or_else(|| sec.output_path.clone());
    let code = match &cli.command {
        Command::Validate { distortion, grid } => {
            let d = sec.distortion(distortion)?;
            let report = d.validate(*grid);
            print_json(&json!({
                "distortion": d.tag(),
                "boundary_ok": report.boundary_ok,
                "concave_ok": report.concave_ok,
                "nonneg_ok": report.nonneg_ok,
                "continuous": d.is_continuous(),
                "l2_norm_sq": d.l2_norm_sq(),
            }));
            if report.all_ok() {
                0
            } else {
                eprintln!("error: distortion failed validation");
                2
            }
        }
        Command::Eval {
            distortion,
            distribution,
            table,
            route,
        } => {
            let d = sec.distortion(distortion)?;
            let p = match (distribution, table) {
                (Some(spec), _) => Params::inline("--distribution", spec)?,
                (None, Some(path)) => {
                    let mut p = Params::new("--table");
                    p.insert("kind", "grid")?;
                    p.insert("file", &path.to_string_lossy())?;
                    p
                }
                (None, None) => sec.distribution.take().ok_or_else(|| {
                    Error::Parse("no law: pass --distribution, --table or a [distribution] section".into())
                })?,
            };
            let law: Distribution = distribution_from_params(p)?;
            let v = phi_with_route(&d, &law, *route)?;
            print_json(&json!({
                "phi": v.value,
                "route": v.route.as_str(),
                "abs_err": v.est_abs_error,
            }));
            0
        }
        Command::Maximize {
            distortion,
            mean,
            std,
            nodes,
        } => {
            let d = sec.distortion(distortion)?;
            let opt = maximize(&d, MvConstraint::new(*mean, *std)?)?;
            if let Some(path) = &output_path {
                write_table(path, &opt.distribution, *nodes)?;
            }
            print_json(&json!({ "max_value": opt.max_value }));
            0
        }
        Command::SolveLq {
            distortion,
            model,
            x,
            nodes,
        } => {
            let d = sec.distortion(distortion)?;
            let m = sec.model(model)?;
            let sol = m.solve(&d)?;
            let res = m.riccati_residuals(&sol)?;
            let hjb_max = (-50..=50)
                .map(|i| m.hjb_residual(&sol, 0.1 * i as f64).abs())
                .fold(0.0, f64::max);
            if !x.is_empty() && output_path.is_none() {
                return Err(Error::Parse("--x needs --output-path for the policy tables".into()));
            }
            let mut policies = Vec::new();
            for (i, &xi) in x.iter().enumerate() {
                let law = m.policy(&sol, &d, xi)?;
                let path = indexed_path(output_path.as_deref().expect("checked above"), i, x.len());
                write_table(&path, &law, *nodes)?;
                let (mu, var) = m.policy_moments(&sol, xi);
                policies.push(json!({ "x": xi, "mu_star": z(mu), "var_star": var, "file": path }));
            }
            let mut out = json!({
                "delta": z(sol.delta),
                "k2": z(sol.k2),
                "k1": z(sol.k1),
                "k0": z(sol.k0),
                "residuals": { "r2": z(res.r2), "r1": z(res.r1), "r0": z(res.r0), "hjb_max": hjb_max },
            });
            if !policies.is_empty() {
                out["policies"] = Value::Array(policies);
            }
            print_json(&out);
            0
        }
        Command::Simulate {
            distortion,
            model,
            dt,
            horizon,
            paths,
            seed,
            antithetic,
            checkpoints,
            x0,
            slow,
        } => {
            let d = sec.distortion(distortion)?;
            let m = sec.model(model)?;
            let mut p = sec.sim.take().unwrap_or_else(|| Params::new("[sim]"));
            if let Ok(env_seed) = std::env::var(SEED_VAR) {
                p.set("seed", env_seed.trim());
            }
            for (key, value) in [
                ("dt", dt.map(|v| v.to_string())),
                ("horizon", horizon.map(|v| v.to_string())),
                ("paths", paths.map(|v| v.to_string())),
                ("seed", seed.map(|v| v.to_string())),
                ("checkpoints", checkpoints.map(|v| v.to_string())),
                ("antithetic", antithetic.then(|| "true".to_string())),
            ] {
                if let Some(v) = value {
                    p.set(key, &v);
                }
            }
            let cfg = sim_from_params(p)?;
            let sol = m.solve(&d)?;
            let mode = if *slow {
                RegularizerMode::Quadrature
            } else {
                RegularizerMode::ClosedForm
            };
            let r = estimate_value(&m, &sol, &d, *x0, &cfg, mode)?;
            let trans = transversality_check(&r.transversality)?;
            if let Some(path) = &output_path {
                let mut f = File::create(path)?;
                writeln!(f, "T,discounted_second_moment")?;
                for (t, v) in &r.transversality {
                    writeln!(f, "{},{}", t, v)?;
                }
            }
            for w in &r.warnings {
                eprintln!("warning: {}", w);
            }
            print_json(&json!({
                "value_estimate": r.value_estimate,
                "std_error": r.std_error,
                "closed_form": sol.value(*x0),
                "discount_tail": r.discount_tail,
                "horizon": r.horizon,
                "steps": r.steps,
                "paths": cfg.n_paths,
                "seed": cfg.seed,
                "transversality": if trans.pass { "PASS" } else { "FAIL" },
                "warnings": r.warnings,
            }));
            0
        }
        Command::Compare { distortions, model, x } => {
            let m = sec.model(model)?;
            let mut rows = Vec::new();
            for spec in split_specs(distortions)? {
                let d: Distortion = distortion_from_params(Params::inline("--distortions", &spec)?)?;
                let sol = m.solve(&d)?;
                for &xi in x {
                    let (mu, var) = m.policy_moments(&sol, xi);
                    rows.push([
                        spec.clone(),
                        xi.to_string(),
                        z(mu).to_string(),
                        var.to_string(),
                        sol.value(xi).to_string(),
                    ]);
                }
            }
            let sink: Box<dyn Write> = match &output_path {
                Some(path) => Box::new(File::create(path)?),
                None => Box::new(std::io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["distortion", "x", "mu_star", "var_star", "V"])?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
            0
        }
    };
    sec.finish()?;
    Ok(code)
}

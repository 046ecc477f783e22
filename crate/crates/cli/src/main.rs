use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Choquet regularizers: validation, evaluation, maximization, LQ solving,
/// simulation.
///
/// Distortions and laws are given inline as `tag` or `tag:key=value,...`
/// (e.g. `inter-es:alpha=0.75`, `normal:mean=0,sd=1`) or in a config file
/// with `[distortion]`, `[distribution]`, `[model]`, `[sim]` and `[output]`
/// sections. Flags override the config file.
#[derive(Debug, Parser)]
#[command(name = "choquet", version)]
pub struct Cli {
    /// Config file (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Destination of CSV output.
    #[arg(long, global = true)]
    pub output_path: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check boundary values, concavity and non-negativity of a distortion.
    Validate {
        #[command(flatten)]
        distortion: DistortionArgs,
        /// Grid size of the concavity and sign checks.
        #[arg(long, default_value_t = 1001)]
        grid: usize,
    },
    /// Evaluate Φ_h of a law.
    Eval {
        #[command(flatten)]
        distortion: DistortionArgs,
        /// Law spec, e.g. `normal:mean=0,sd=1`.
        #[arg(long)]
        distribution: Option<String>,
        /// Law given as a `p,q` table.
        #[arg(long, conflicts_with = "distribution")]
        table: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
        route: RouteArg,
    },
    /// Maximize Φ_h at a given mean and standard deviation.
    Maximize {
        #[command(flatten)]
        distortion: DistortionArgs,
        #[arg(long, allow_negative_numbers = true)]
        mean: f64,
        #[arg(long, allow_negative_numbers = true)]
        std: f64,
        /// Interior levels of the emitted table for smooth laws.
        #[arg(long, default_value_t = choquet::table::DEFAULT_NODES)]
        nodes: usize,
    },
    /// Closed-form exploratory LQ solution.
    SolveLq {
        #[command(flatten)]
        distortion: DistortionArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// States at which to emit the policy quantile table.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = choquet::table::DEFAULT_NODES)]
        nodes: usize,
    },
    /// Monte Carlo estimate of the value under the optimal policy.
    Simulate {
        #[command(flatten)]
        distortion: DistortionArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Euler step.
        #[arg(long)]
        dt: Option<f64>,
        /// Truncation time (at least 10/ρ is used).
        #[arg(long)]
        horizon: Option<f64>,
        /// Number of paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Seed; overrides `CHOQUET_SEED` and the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Pair each path with its negated-increment twin.
        #[arg(long)]
        antithetic: bool,
        /// Transversality checkpoints in (0, T].
        #[arg(long)]
        checkpoints: Option<usize>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        x0: f64,
        /// Re-evaluate Φ_h by quadrature at every step.
        #[arg(long)]
        slow: bool,
    },
    /// Policy moments and values for several distortions.
    Compare {
        /// Comma-separated distortion specs.
        #[arg(long)]
        distortions: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    /// Distortion spec, e.g. `gini` or `inter-es:alpha=0.75`.
    #[arg(long)]
    pub distortion: Option<String>,
    /// Table backing `piecewise` (`p,h`) or `from-quantile` (`p,q`).
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// File with a `[model]` section (or bare `key = value` lines).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// State drift coefficient A.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Control drift coefficient B.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// State volatility coefficient C.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Control volatility coefficient D.
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Running cost weight M on x².
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Cross weight R on xu.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Control cost weight N on u².
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<f64>,
    /// Linear state weight P.
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Linear control weight L.
    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<f64>,
    /// Discount rate ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Temperature λ.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    /// Quantile route, falling back to the survival route when it does not apply.
    Auto,
    Quantile,
    Survival,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e);
            let code = commands::exit_code(&e);
            if code == 1 {
                eprintln!("\n{}", commands::SCHEMA_HELP);
            }
            ExitCode::from(code)
        }
    }
}

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{load_config, EnvironmentSpec, ExperimentConfig};
use super::run::run_experiment;
use crate::nn::run_grad_check_suite;
use crate::theory::{linps_regret_bound, BoundInputs, BoundProcess};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "pes", version, about = "Predictive ensemble sampling experiments for non-stationary bandits")]
pub struct Cli {
    /// Override the config's base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    Ar1,
    Abrupt,
    Generic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Evaluate the LinPS regret bound and print it as JSON.
    Bound {
        #[arg(long, value_enum)]
        process: ProcessArg,
        /// AR(1) coefficients; a single value is repeated `d` times.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gamma: Vec<f64>,
        /// Resampling probabilities of abrupt changes; a single value is repeated.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Entropies H(θ_{1,i}) for abrupt changes; a single value is repeated.
        #[arg(long, value_delimiter = ',')]
        entropy: Vec<f64>,
        /// I(θ₂;θ₁) for the generic process.
        #[arg(long)]
        mi_first: Option<f64>,
        /// I(θ₃;θ₂|θ₁) for the generic process.
        #[arg(long)]
        mi_per_step: Option<f64>,
        #[arg(long)]
        d: usize,
        #[arg(long = "T")]
        horizon: usize,
    },
    /// Finite-difference check of the MLP and GRU gradients.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Replay a logged CSV through the agents of a config.
    Replay { log: PathBuf, config: PathBuf },
}

fn broadcast(name: &str, v: &[f64], d: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v.to_vec()),
        n => Err(Error::param(format!("--{name} has {n} values, expected 1 or {d}"))),
    }
}

fn apply_overrides(mut cfg: ExperimentConfig, cli: &Cli) -> ExperimentConfig {
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = apply_overrides(load_config(config)?, cli);
            let summary = run_experiment(&cfg)?;
            for a in &summary.agents {
                writeln!(
                    out,
                    "{:<28} avg reward {:.4} ± {:.4}   avg regret {:.4} ± {:.4}",
                    a.name, a.mean_average_reward, a.se_average_reward, a.mean_average_regret, a.se_average_regret
                )?;
            }
            writeln!(out, "wrote {}", cfg.output_dir.display())?;
            Ok(true)
        }
        Command::Replay { log, config } => {
            let mut cfg = apply_overrides(load_config(config)?, cli);
            cfg.environment = EnvironmentSpec::Replay { path: log.clone() };
            run_experiment(&cfg)?;
            writeln!(out, "wrote {}", cfg.output_dir.display())?;
            Ok(true)
        }
        Command::Bound { process, gamma, q, entropy, mi_first, mi_per_step, d, horizon } => {
            let process = match process {
                ProcessArg::Ar1 => BoundProcess::Ar1 { gamma: broadcast("gamma", gamma, *d)? },
                ProcessArg::Abrupt => BoundProcess::Abrupt {
                    q: broadcast("q", q, *d)?,
                    entropy_theta1: broadcast("entropy", entropy, *d)?,
                },
                ProcessArg::Generic => BoundProcess::Generic {
                    mi_first: mi_first.ok_or_else(|| Error::param("--mi-first is required"))?,
                    mi_per_step: mi_per_step.ok_or_else(|| Error::param("--mi-per-step is required"))?,
                },
            };
            let result = linps_regret_bound(&BoundInputs { d: *d, horizon: *horizon, process })?;
            writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
            Ok(true)
        }
        Command::GradCheck { cases, tolerance } => {
            let suite = run_grad_check_suite(*cases, cli.seed.unwrap_or(0), *tolerance);
            writeln!(out, "{}", serde_json::to_string_pretty(&suite)?)?;
            Ok(suite.passed())
        }
    }
}

/// Parse `args` and run. Returns the process exit code: 0 on success,
/// 2 on usage errors, 1 on failures.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli, out) {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(err, "check failed");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

//! Experiment configuration.
//!
//! ```json
//! {
//!   "environment": "ar1_logistic_benchmark",
//!   "agents": ["neural_pes", {"kind": "neural_pes", "name": "pes_noreg", "reg_coeff": 0}],
//!   "T": 20000,
//!   "num_seeds": 20
//! }
//! ```
//!
//! Strings are shorthand for `{"kind": ...}`. Agent objects accept any
//! [`AgentConfig`] field as an override of the per-kind defaults, plus `name`
//! and `window` (sliding-window buffer size).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agents::{sliding_window_variant, AgentConfig, AgentKind};
use crate::env::{
    make_ar1_logistic_benchmark, BanditInstance, Environment, ProcessSpec, ReplayEnvironment, RewardKind,
    SyntheticSpec,
};
use crate::{Error, ExecMode, Result};

fn default_actions() -> usize {
    10
}
fn default_contexts() -> usize {
    100
}
fn default_reward() -> RewardKind {
    RewardKind::LinearGaussian { noise_sd: 0.1 }
}
fn default_init_sd() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Ar1LogisticBenchmark,
    Synthetic {
        /// Inferred from the process when omitted.
        #[serde(default)]
        d: Option<usize>,
        #[serde(default = "default_actions")]
        num_actions: usize,
        #[serde(default = "default_contexts")]
        num_contexts: usize,
        process: ProcessSpec,
        #[serde(default = "default_reward")]
        reward: RewardKind,
        #[serde(default = "default_init_sd")]
        theta_init_sd: f64,
    },
    Replay {
        path: PathBuf,
    },
}

impl EnvironmentSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvironmentSpec::Ar1LogisticBenchmark => Box::new(make_ar1_logistic_benchmark(seed)),
            EnvironmentSpec::Synthetic { d, num_actions, num_contexts, process, reward, theta_init_sd } => {
                let inferred = match process {
                    ProcessSpec::Ar1 { gamma } => gamma.len(),
                    ProcessSpec::Abrupt { q, .. } => q.len(),
                };
                Box::new(BanditInstance::new(SyntheticSpec {
                    d: d.unwrap_or(inferred),
                    num_actions: *num_actions,
                    num_contexts: *num_contexts,
                    process: process.clone(),
                    reward: *reward,
                    theta_init_sd: *theta_init_sd,
                    seed,
                })?)
            }
            EnvironmentSpec::Replay { path } => Box::new(ReplayEnvironment::from_path(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub kind: AgentKind,
    pub config: AgentConfig,
}

fn default_seeds() -> usize {
    20
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_window() -> usize {
    500
}
fn default_points() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub agents: Vec<AgentSpec>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub num_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub plot: bool,
    /// Running-mean window of the reward plot.
    #[serde(default = "default_window")]
    pub plot_window: usize,
    /// Maximum number of points kept per curve in the summary.
    #[serde(default = "default_points")]
    pub curve_points: usize,
    /// How (agent, seed) runs are scheduled.
    #[serde(default)]
    pub exec: ExecMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    environment: Value,
    agents: Vec<Value>,
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(default = "default_seeds")]
    num_seeds: usize,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_out")]
    output_dir: PathBuf,
    #[serde(default = "default_true")]
    plot: bool,
    #[serde(default = "default_window")]
    plot_window: usize,
    #[serde(default = "default_points")]
    curve_points: usize,
    #[serde(default)]
    exec: ExecMode,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn shorthand(v: Value) -> Value {
    match v {
        Value::String(s) => Value::Object(Map::from_iter([("kind".to_string(), Value::String(s))])),
        other => other,
    }
}

fn typed<T: serde::de::DeserializeOwned>(v: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = match inner.as_str() {
            "." | "" => prefix.to_string(),
            p => format!("{prefix}.{p}"),
        };
        config_err(path, e.into_inner().to_string())
    })
}

fn parse_agent(v: Value, idx: usize) -> Result<AgentSpec> {
    let at = format!("agents[{idx}]");
    let Value::Object(mut obj) = shorthand(v) else {
        return Err(config_err(at, "expected a string or an object"));
    };
    let kind: AgentKind = typed(obj.remove("kind").ok_or_else(|| config_err(&at, "missing field `kind`"))?, &format!("{at}.kind"))?;
    let name = match obj.remove("name") {
        None => kind.as_str().to_string(),
        Some(Value::String(s)) if !s.is_empty() => s,
        Some(_) => return Err(config_err(format!("{at}.name"), "expected a non-empty string")),
    };
    let window: Option<usize> = obj.remove("window").map(|w| typed(w, &format!("{at}.window"))).transpose()?;
    let Value::Object(mut merged) = serde_json::to_value(AgentConfig::for_kind(kind))? else {
        unreachable!("AgentConfig serialises to an object")
    };
    merged.extend(obj);
    let mut config: AgentConfig = typed(Value::Object(merged), &at)?;
    if let Some(w) = window {
        config = sliding_window_variant(&config, w).map_err(|e| config_err(format!("{at}.window"), e.to_string()))?;
    }
    config.validate().map_err(|e| config_err(&at, e.to_string()))?;
    Ok(AgentSpec { name, kind, config })
}

/// Parse and validate a JSON experiment config, filling in defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(text))
        .map_err(|e| config_err(e.path().to_string(), e.into_inner().to_string()))?;
    let environment: EnvironmentSpec = typed(shorthand(raw.environment), "environment")?;
    let agents = raw.agents.into_iter().enumerate().map(|(i, v)| parse_agent(v, i)).collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        environment,
        agents,
        horizon: raw.horizon,
        num_seeds: raw.num_seeds,
        base_seed: raw.base_seed,
        output_dir: raw.output_dir,
        plot: raw.plot,
        plot_window: raw.plot_window,
        curve_points: raw.curve_points,
        exec: raw.exec,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(config_err("T", "must be at least 1"));
        }
        if self.num_seeds == 0 {
            return Err(config_err("num_seeds", "must be at least 1"));
        }
        if self.agents.is_empty() {
            return Err(config_err("agents", "at least one agent is required"));
        }
        if self.plot_window == 0 || self.curve_points == 0 {
            return Err(config_err("plot_window", "plot_window and curve_points must be positive"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.name == a.name) {
                return Err(config_err(format!("agents[{i}].name"), format!("duplicate agent name `{}`", a.name)));
            }
            if a.name.contains(['/', '\\']) || a.name == "." || a.name == ".." {
                return Err(config_err(format!("agents[{i}].name"), "names must be usable as directory names"));
            }
        }
        Ok(())
    }
}

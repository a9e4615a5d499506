use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::plot::emit_plots;
use crate::agents::{build_agent, run_agent_episode};
use crate::env::StepRecord;
use crate::exec::map_vec;
use crate::rng::{derive_seed, AGENT_TAG, ENV_TAG};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["t", "reward", "expected_reward", "optimal_expected_reward", "cumulative_regret"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub name: String,
    pub kind: String,
    pub num_seeds: usize,
    /// Per-seed average realised reward.
    pub average_reward: Vec<f64>,
    /// Per-seed average regret.
    pub average_regret: Vec<f64>,
    pub mean_average_reward: f64,
    pub se_average_reward: f64,
    pub mean_average_regret: f64,
    pub se_average_regret: f64,
    /// Time indices of the curve points.
    pub curve_t: Vec<usize>,
    /// Seed-mean reward, smoothed by a trailing running mean.
    pub reward_running_mean: Vec<f64>,
    /// Seed-mean cumulative regret.
    pub cumulative_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub num_seeds: usize,
    pub base_seed: u64,
    pub plot_window: usize,
    pub agents: Vec<AgentSummary>,
}

pub fn env_seed(base: u64, seed_index: usize) -> u64 {
    derive_seed(base, &[ENV_TAG, seed_index as u64])
}

pub fn agent_seed(base: u64, agent_index: usize, seed_index: usize) -> u64 {
    derive_seed(base, &[AGENT_TAG, agent_index as u64, seed_index as u64])
}

/// Play one (agent, seed) pair.
pub fn run_single(cfg: &ExperimentConfig, agent_index: usize, seed_index: usize) -> Result<Vec<StepRecord>> {
    let spec = cfg.agents.get(agent_index).ok_or_else(|| Error::param("agent index out of range"))?;
    let mut env = cfg.environment.build(env_seed(cfg.base_seed, seed_index))?;
    let mut agent = build_agent(
        spec.kind,
        &spec.config,
        env.feature_dim(),
        env.linear_gaussian_model(),
        agent_seed(cfg.base_seed, agent_index, seed_index),
    )?;
    run_agent_episode(agent.as_mut(), env.as_mut(), cfg.horizon)
}

/// Sample mean and standard error `s / √n` (zero for a single value).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Trailing mean over the last `window` values (fewer at the start).
pub fn running_mean(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for i in 0..xs.len() {
        acc += xs[i];
        if i >= window {
            acc -= xs[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// Up to `points` evenly spaced indices in `0..len`, always including the last.
pub fn downsample_indices(len: usize, points: usize) -> Vec<usize> {
    if len <= points {
        return (0..len).collect();
    }
    if points == 1 {
        return vec![len - 1];
    }
    let mut idx: Vec<usize> = (0..points).map(|i| i * (len - 1) / (points - 1)).collect();
    idx.dedup();
    idx
}

pub fn write_run_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    let mut cum = 0.0;
    for r in records {
        cum += r.regret();
        w.write_record([
            r.t.to_string(),
            r.reward.to_string(),
            r.chosen_expected_reward.to_string(),
            r.optimal_expected_reward.to_string(),
            cum.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_csv_path(out: &Path, agent: &str, seed_index: usize) -> PathBuf {
    out.join("runs").join(agent).join(format!("{seed_index}.csv"))
}

fn average(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.sum::<f64>() / n as f64
}

/// Aggregate the runs of one agent. `runs[s]` is seed `s`.
pub fn summarize_agent(
    name: &str,
    kind: &str,
    runs: &[Vec<StepRecord>],
    window: usize,
    points: usize,
) -> Result<AgentSummary> {
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    if len == 0 {
        return Err(Error::EmptyInput(format!("agent `{name}` produced no steps")));
    }
    let average_reward: Vec<f64> = runs.iter().map(|r| average(r.iter().map(|s| s.reward), r.len())).collect();
    let average_regret: Vec<f64> = runs.iter().map(|r| average(r.iter().map(StepRecord::regret), r.len())).collect();
    let (mean_average_reward, se_average_reward) = mean_and_se(&average_reward);
    let (mean_average_regret, se_average_regret) = mean_and_se(&average_regret);
    let n = runs.len() as f64;
    let mut mean_reward = vec![0.0; len];
    let mut mean_cum = vec![0.0; len];
    for r in runs {
        let mut cum = 0.0;
        for (t, s) in r.iter().take(len).enumerate() {
            cum += s.regret();
            mean_reward[t] += s.reward / n;
            mean_cum[t] += cum / n;
        }
    }
    let smooth = running_mean(&mean_reward, window);
    let idx = downsample_indices(len, points);
    Ok(AgentSummary {
        name: name.to_string(),
        kind: kind.to_string(),
        num_seeds: runs.len(),
        average_reward,
        average_regret,
        mean_average_reward,
        se_average_reward,
        mean_average_regret,
        se_average_regret,
        curve_t: idx.iter().map(|&i| runs[0][i].t).collect(),
        reward_running_mean: idx.iter().map(|&i| smooth[i]).collect(),
        cumulative_regret: idx.iter().map(|&i| mean_cum[i]).collect(),
    })
}

/// Run every (agent, seed) pair, write `runs/<agent>/<seed>.csv`,
/// `summary.json` and, when enabled, the SVG plots under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.agents.len()).flat_map(|a| (0..cfg.num_seeds).map(move |s| (a, s))).collect();
    let results = map_vec(cfg.exec, jobs, |(a, s)| -> Result<Vec<StepRecord>> {
        let records = run_single(cfg, a, s)?;
        write_run_csv(&run_csv_path(out, &cfg.agents[a].name, s), &records)?;
        Ok(records)
    });
    let mut results = results.into_iter();
    let mut agents = Vec::with_capacity(cfg.agents.len());
    for spec in &cfg.agents {
        let runs = results.by_ref().take(cfg.num_seeds).collect::<Result<Vec<_>>>()?;
        agents.push(summarize_agent(&spec.name, spec.kind.as_str(), &runs, cfg.plot_window, cfg.curve_points)?);
    }
    let summary = RunSummary {
        horizon: cfg.horizon,
        num_seeds: cfg.num_seeds,
        base_seed: cfg.base_seed,
        plot_window: cfg.plot_window,
        agents,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if cfg.plot {
        emit_plots(&summary, out)?;
    }
    Ok(summary)
}

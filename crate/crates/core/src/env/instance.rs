use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::process::{AbruptProcess, Ar1Process, ThetaProcess};
use super::{Environment, FeatureMap, StepRecord};
use crate::nn::sigmoid;
use crate::rng::{stream, Rng as StreamRng};
use crate::{Error, Result};

const FEATURE_STREAM: u64 = 0;
const THETA_STREAM: u64 = 1;
const CONTEXT_STREAM: u64 = 2;
const REWARD_STREAM: u64 = 3;

/// Largest dimension for which the logistic/abrupt next-reward expectation is
/// computed by enumerating resample patterns.
const MAX_ABRUPT_LOGISTIC_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RewardKind {
    LinearGaussian { noise_sd: f64 },
    LogisticBernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProcessSpec {
    Ar1 { gamma: Vec<f64> },
    Abrupt { q: Vec<f64>, beta_mean: f64, beta_sd: f64 },
}

/// Everything needed to build a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d: usize,
    pub num_actions: usize,
    pub num_contexts: usize,
    pub process: ProcessSpec,
    pub reward: RewardKind,
    /// Standard deviation of the initial AR(1) draw. Abrupt processes start
    /// from a `β` draw instead.
    pub theta_init_sd: f64,
    pub seed: u64,
}

/// Linear-Gaussian state-space description used by the exact agents:
/// `θ' = Γθ + W`, `W ~ N(0, diag(stationary_var ⊙ (1 − γ²)))`,
/// `r = φᵀθ + N(0, noise_sd²)`, `θ_0 ~ N(0, diag(prior_var))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussianModel {
    pub gamma: Vec<f64>,
    pub stationary_var: Vec<f64>,
    pub noise_sd: f64,
    pub prior_var: Vec<f64>,
    /// False when the model is a moment-matched surrogate (abrupt changes).
    pub exact: bool,
}

impl LinearGaussianModel {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn transition_var(&self) -> Vec<f64> {
        self.gamma.iter().zip(&self.stationary_var).map(|(g, s)| s * (1.0 - g * g)).collect()
    }
}

/// Synthetic non-stationary contextual bandit.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    spec: SyntheticSpec,
    features: FeatureMap,
    process: ThetaProcess,
    context_rng: StreamRng,
    reward_rng: StreamRng,
    context: usize,
    t: usize,
}

/// Trapezoid nodes/weights for `E[f(Z)]`, `Z ~ N(0, 1)`.
fn normal_quadrature() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 81;
        let h = 16.0 / (n - 1) as f64;
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let z = -8.0 + h * k as f64;
                (z, (-0.5 * z * z).exp())
            })
            .collect();
        let total: f64 = raw.iter().map(|p| p.1).sum();
        raw.into_iter().map(|(z, w)| (z, w / total)).collect()
    })
}

/// `E[σ(μ + s Z)]` for standard normal `Z`.
pub(crate) fn logistic_normal_mean(mu: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return sigmoid(mu);
    }
    normal_quadrature().iter().map(|&(z, w)| w * sigmoid(mu + sd * z)).sum()
}

impl BanditInstance {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        if spec.d == 0 || spec.num_actions == 0 || spec.num_contexts == 0 {
            return Err(Error::param("d, num_actions and num_contexts must be positive"));
        }
        if !(spec.theta_init_sd > 0.0) {
            return Err(Error::param("theta_init_sd must be positive"));
        }
        if let RewardKind::LinearGaussian { noise_sd } = spec.reward {
            if !(noise_sd >= 0.0) {
                return Err(Error::param("noise_sd must be non-negative"));
            }
        }
        let features = FeatureMap::random(
            spec.num_contexts,
            spec.num_actions,
            spec.d,
            &mut stream(spec.seed, FEATURE_STREAM),
        );
        let mut theta_rng = stream(spec.seed, THETA_STREAM);
        let process = match &spec.process {
            ProcessSpec::Ar1 { gamma } => {
                if gamma.len() != spec.d {
                    return Err(Error::shape(format!("gamma has {} entries, d = {}", gamma.len(), spec.d)));
                }
                let theta = (0..spec.d)
                    .map(|_| spec.theta_init_sd * theta_rng.sample::<f64, _>(StandardNormal))
                    .collect();
                ThetaProcess::Ar1(Ar1Process::new(gamma.clone(), theta, theta_rng)?)
            }
            ProcessSpec::Abrupt { q, beta_mean, beta_sd } => {
                if q.len() != spec.d {
                    return Err(Error::shape(format!("q has {} entries, d = {}", q.len(), spec.d)));
                }
                if spec.reward == RewardKind::LogisticBernoulli && spec.d > MAX_ABRUPT_LOGISTIC_DIM {
                    return Err(Error::Unsupported(format!(
                        "logistic rewards with abrupt changes need d <= {MAX_ABRUPT_LOGISTIC_DIM}"
                    )));
                }
                let theta = (0..spec.d)
                    .map(|_| beta_mean + beta_sd * theta_rng.sample::<f64, _>(StandardNormal))
                    .collect();
                ThetaProcess::Abrupt(AbruptProcess::new(q.clone(), *beta_mean, *beta_sd, theta, theta_rng)?)
            }
        };
        let mut context_rng = stream(spec.seed, CONTEXT_STREAM);
        let context = context_rng.random_range(0..spec.num_contexts);
        Ok(BanditInstance {
            reward_rng: stream(spec.seed, REWARD_STREAM),
            spec,
            features,
            process,
            context_rng,
            context,
            t: 0,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn theta(&self) -> &[f64] {
        self.process.theta()
    }

    pub fn process(&self) -> &ThetaProcess {
        &self.process
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.spec.reward
    }

    /// `E[R | θ]` under the current parameter.
    pub fn expected_reward(&self, context: usize, action: usize) -> Result<f64> {
        let phi = self.features.get(context, action)?;
        let lin: f64 = phi.iter().zip(self.theta()).map(|(a, b)| a * b).sum();
        Ok(match self.spec.reward {
            RewardKind::LinearGaussian { .. } => lin,
            RewardKind::LogisticBernoulli => sigmoid(lin),
        })
    }

    /// `E[R_{t+1, c, a} | θ_t]`: the expectation the regret benchmark uses.
    pub fn expected_next_reward(&self, context: usize, action: usize) -> Result<f64> {
        let phi = self.features.get(context, action)?;
        let theta = self.theta();
        match (&self.process, self.spec.reward) {
            (ThetaProcess::Ar1(p), reward) => {
                let mut mu = 0.0;
                let mut var = 0.0;
                for i in 0..phi.len() {
                    mu += phi[i] * p.gamma[i] * theta[i];
                    var += phi[i] * phi[i] * (1.0 - p.gamma[i] * p.gamma[i]);
                }
                Ok(match reward {
                    RewardKind::LinearGaussian { .. } => mu,
                    RewardKind::LogisticBernoulli => logistic_normal_mean(mu, var.sqrt()),
                })
            }
            (ThetaProcess::Abrupt(p), RewardKind::LinearGaussian { .. }) => Ok(phi
                .iter()
                .enumerate()
                .map(|(i, f)| f * ((1.0 - p.q[i]) * theta[i] + p.q[i] * p.beta_mean))
                .sum()),
            (ThetaProcess::Abrupt(p), RewardKind::LogisticBernoulli) => {
                // Enumerate which coordinates get resampled.
                let d = phi.len();
                let mut total = 0.0;
                for mask in 0u32..(1u32 << d) {
                    let mut prob = 1.0;
                    let mut mu = 0.0;
                    let mut var = 0.0;
                    for i in 0..d {
                        if mask & (1 << i) != 0 {
                            prob *= p.q[i];
                            mu += phi[i] * p.beta_mean;
                            var += phi[i] * phi[i] * p.beta_sd * p.beta_sd;
                        } else {
                            prob *= 1.0 - p.q[i];
                            mu += phi[i] * theta[i];
                        }
                    }
                    if prob > 0.0 {
                        total += prob * logistic_normal_mean(mu, var.sqrt());
                    }
                }
                Ok(total)
            }
        }
    }

    fn linear_score(&self, context: usize, action: usize) -> f64 {
        self.features.row(context, action).iter().zip(self.theta()).map(|(a, b)| a * b).sum()
    }
}

impl Environment for BanditInstance {
    fn num_actions(&self) -> usize {
        self.spec.num_actions
    }

    fn feature_dim(&self) -> usize {
        self.spec.d
    }

    fn t(&self) -> usize {
        self.t
    }

    fn context(&self) -> usize {
        self.context
    }

    fn action_features(&self, action: usize) -> &[f64] {
        self.features.row(self.context, action)
    }

    fn step(&mut self, action: usize) -> Result<StepRecord> {
        let n = self.spec.num_actions;
        if action >= n {
            return Err(Error::InvalidAction { action, num_actions: n });
        }
        let c = self.context;
        let mut optimal = f64::NEG_INFINITY;
        let mut chosen = 0.0;
        for a in 0..n {
            let v = self.expected_next_reward(c, a)?;
            if a == action {
                chosen = v;
            }
            optimal = optimal.max(v);
        }

        self.process.advance();
        let lin = self.linear_score(c, action);
        let reward = match self.spec.reward {
            RewardKind::LinearGaussian { noise_sd } => {
                let z: f64 = self.reward_rng.sample(StandardNormal);
                lin + noise_sd * z
            }
            RewardKind::LogisticBernoulli => {
                let u: f64 = self.reward_rng.random();
                if u < sigmoid(lin) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let record = StepRecord {
            t: self.t,
            context: c,
            action,
            reward,
            chosen_expected_reward: chosen,
            optimal_expected_reward: optimal,
        };
        self.t += 1;
        self.context = self.context_rng.random_range(0..self.spec.num_contexts);
        Ok(record)
    }

    fn linear_gaussian_model(&self) -> Option<LinearGaussianModel> {
        let RewardKind::LinearGaussian { noise_sd } = self.spec.reward else {
            return None;
        };
        let d = self.spec.d;
        match &self.spec.process {
            ProcessSpec::Ar1 { gamma } => Some(LinearGaussianModel {
                gamma: gamma.clone(),
                stationary_var: vec![1.0; d],
                noise_sd,
                prior_var: vec![self.spec.theta_init_sd.powi(2); d],
                exact: true,
            }),
            // Best linear surrogate: same mean dynamics and stationary covariance.
            ProcessSpec::Abrupt { q, beta_mean, beta_sd } if *beta_mean == 0.0 => Some(LinearGaussianModel {
                gamma: q.iter().map(|p| 1.0 - p).collect(),
                stationary_var: vec![beta_sd * beta_sd; d],
                noise_sd,
                prior_var: vec![beta_sd * beta_sd; d],
                exact: false,
            }),
            ProcessSpec::Abrupt { .. } => None,
        }
    }
}

/// The AR(1) contextual logistic benchmark: 10 actions, `d = 10`,
/// `γ_i = 0.99^i`, `θ` initialised `N(0, 0.01)`, 100 contexts.
pub fn make_ar1_logistic_benchmark(seed: u64) -> BanditInstance {
    let d = 10;
    BanditInstance::new(SyntheticSpec {
        d,
        num_actions: 10,
        num_contexts: 100,
        process: ProcessSpec::Ar1 { gamma: (1..=d).map(|i| 0.99f64.powi(i as i32)).collect() },
        reward: RewardKind::LogisticBernoulli,
        theta_init_sd: 0.1,
        seed,
    })
    .expect("benchmark spec is valid")
}

//! Decision policies: neural ensemble sampling and its sequence / predictive
//! extensions, exact Kalman-filtered TS and LinPS, and a uniform baseline.

mod buffer;
mod config;
mod ensemble;
mod exact;
mod kalman;
mod neural;
mod predictive;
mod sequence;

pub use buffer::{ReplayBuffer, Transition};
pub use config::{sliding_window_variant, AgentConfig, AgentKind, RolloutMode};
pub use ensemble::{flatten_last_layer, last_layer_score, train_reward_nn, RewardParticle};
pub use exact::{ExactAgent, ExactRule};
pub use kalman::{
    act_exact_linps, act_exact_ts, kalman_predict, kalman_predict_with, kalman_update, linps_conditional_mean,
    psd_cholesky, GaussianBelief,
};
pub use neural::{NeuralAgent, NeuralParticle, NeuralVariant};
pub use predictive::{eligible_prefix, predictive_input, train_predictive_nn, PredictiveParticle};
pub use sequence::{rollout_future_weights, train_sequence_nn, SequenceParticle, SequenceTrainStats};

use rand::Rng as _;

use crate::env::{Environment, LinearGaussianModel, StepRecord};
use crate::rng::{stream, Rng};
use crate::{Error, Result};

/// What an agent sees before acting.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: usize,
    pub context: usize,
    /// `φ(C_t, a)` for every action `a`.
    pub features: Vec<Vec<f64>>,
}

impl Observation {
    pub fn from_env(env: &dyn Environment) -> Self {
        Observation {
            t: env.t(),
            context: env.context(),
            features: (0..env.num_actions()).map(|a| env.action_features(a).to_vec()).collect(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.features.len()
    }

    pub fn feature_refs(&self) -> Vec<&[f64]> {
        self.features.iter().map(|f| f.as_slice()).collect()
    }
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;
    /// Steps between calls to [`Agent::train`].
    fn train_interval(&self) -> usize {
        1
    }
    fn train(&mut self) -> Result<()> {
        Ok(())
    }
    fn act(&mut self, obs: &Observation) -> Result<usize>;
    fn observe(&mut self, obs: &Observation, action: usize, reward: f64) -> Result<()>;
}

/// Index of the largest score; ties go to the lowest index. NaN never wins.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() && !s.is_nan() {
            best = i;
        }
    }
    best
}

/// Play `horizon` steps: train every `train_interval` steps (starting at
/// `t = 0`), act, step the environment, observe. Stops early when a finite
/// environment runs out.
pub fn run_agent_episode(agent: &mut dyn Agent, env: &mut dyn Environment, horizon: usize) -> Result<Vec<StepRecord>> {
    if horizon == 0 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let interval = agent.train_interval().max(1);
    let mut records = Vec::with_capacity(horizon.min(1 << 20));
    for t in 0..horizon {
        if env.remaining() == Some(0) {
            break;
        }
        if t % interval == 0 {
            agent.train()?;
        }
        let obs = Observation::from_env(env);
        let action = agent.act(&obs)?;
        if action >= obs.num_actions() {
            return Err(Error::InvalidAction { action, num_actions: obs.num_actions() });
        }
        let rec = env.step(action)?;
        agent.observe(&obs, action, rec.reward)?;
        records.push(rec);
    }
    Ok(records)
}

/// Uniform over the action set.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent { rng: stream(seed, 0) }
    }
}

impl Agent for RandomAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Random
    }

    fn act(&mut self, obs: &Observation) -> Result<usize> {
        if obs.num_actions() == 0 {
            return Err(Error::EmptyActionSet);
        }
        Ok(self.rng.random_range(0..obs.num_actions()))
    }

    fn observe(&mut self, _: &Observation, _: usize, _: f64) -> Result<()> {
        Ok(())
    }
}

/// Build an agent for an environment with the given feature dimension.
/// Exact agents need the environment's linear-Gaussian model.
pub fn build_agent(
    kind: AgentKind,
    config: &AgentConfig,
    feature_dim: usize,
    model: Option<LinearGaussianModel>,
    seed: u64,
) -> Result<Box<dyn Agent>> {
    Ok(match kind {
        AgentKind::Random => Box::new(RandomAgent::new(seed)),
        AgentKind::ExactTs | AgentKind::ExactLinps => {
            let model = model.ok_or_else(|| {
                Error::Unsupported(format!("{} needs a linear-Gaussian environment", kind.as_str()))
            })?;
            let rule = if kind == AgentKind::ExactTs { ExactRule::Ts } else { ExactRule::LinPs };
            Box::new(ExactAgent::new(rule, model, seed)?)
        }
        AgentKind::NeuralEnsemble | AgentKind::WindowNeuralEnsemble => {
            Box::new(NeuralAgent::new(kind, NeuralVariant::Ensemble, config.clone(), feature_dim, seed)?)
        }
        AgentKind::NeuralSequenceEnsemble => {
            Box::new(NeuralAgent::new(kind, NeuralVariant::Sequence, config.clone(), feature_dim, seed)?)
        }
        AgentKind::NeuralPes => Box::new(NeuralAgent::new(kind, NeuralVariant::Pes, config.clone(), feature_dim, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_and_nan() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
    }
}

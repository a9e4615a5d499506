use serde::{Deserialize, Serialize};

use crate::nn::LossKind;
use crate::{Error, ExecMode, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    NeuralEnsemble,
    WindowNeuralEnsemble,
    NeuralSequenceEnsemble,
    NeuralPes,
    ExactTs,
    ExactLinps,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::NeuralEnsemble => "neural_ensemble",
            AgentKind::WindowNeuralEnsemble => "window_neural_ensemble",
            AgentKind::NeuralSequenceEnsemble => "neural_sequence_ensemble",
            AgentKind::NeuralPes => "neural_pes",
            AgentKind::ExactTs => "exact_ts",
            AgentKind::ExactLinps => "exact_linps",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(
            self,
            AgentKind::NeuralEnsemble
                | AgentKind::WindowNeuralEnsemble
                | AgentKind::NeuralSequenceEnsemble
                | AgentKind::NeuralPes
        )
    }
}

/// How `ŵ_{t+x}` is produced from a sequence model trained one step ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutMode {
    /// Apply the one-step model `x` times, feeding predictions back in.
    Iterated,
    /// Apply the one-step model once and use its output for any `x ≥ 1`.
    Direct,
}

/// Hyperparameters of the neural agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    /// Particles per ensemble (M).
    pub ensemble_size: usize,
    /// Replay buffer capacity (K); the sliding window of windowed baselines.
    pub buffer_capacity: usize,
    /// Reward-model minibatch size (K').
    pub minibatch: usize,
    /// Predictive-head minibatch size (K'').
    pub pred_minibatch: usize,
    /// Sequence-model lookback (L).
    pub lookback: usize,
    /// Gradient steps per round: reward model (τ), sequence (τ_seq), predictive (τ_pred).
    pub reward_steps: usize,
    pub seq_steps: usize,
    pub pred_steps: usize,
    /// Step sizes α, α_seq, α_pred. Minibatch gradients are summed, not averaged.
    pub lr: f64,
    pub seq_lr: f64,
    pub pred_lr: f64,
    /// Coefficient of the `‖w − w_0‖₂` anchor penalty on last layers.
    pub reg_coeff: f64,
    /// Steps between training rounds.
    pub train_interval: usize,
    pub loss: LossKind,
    /// Hidden widths of the reward model; the last one is the base feature width.
    pub hidden: Vec<usize>,
    pub gru_hidden: usize,
    pub pred_hidden: Vec<usize>,
    pub rollout: RolloutMode,
    /// Sequence model predicts `w_{j+1} − w_j` and adds it back.
    pub residual_sequence: bool,
    pub exec: ExecMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::for_kind(AgentKind::NeuralPes)
    }
}

impl AgentConfig {
    /// AR(1)-benchmark defaults per agent kind.
    pub fn for_kind(kind: AgentKind) -> Self {
        let base = AgentConfig {
            ensemble_size: 10,
            buffer_capacity: 10_000,
            minibatch: 32,
            pred_minibatch: 32,
            lookback: 10,
            reward_steps: 50,
            seq_steps: 20,
            pred_steps: 50,
            lr: 1e-4,
            seq_lr: 1e-4,
            pred_lr: 1e-4,
            reg_coeff: 0.05,
            train_interval: 100,
            loss: LossKind::BernoulliLogLoss,
            hidden: vec![50, 25],
            gru_hidden: 25,
            pred_hidden: vec![10],
            rollout: RolloutMode::Iterated,
            residual_sequence: true,
            exec: ExecMode::Parallel,
        };
        match kind {
            AgentKind::NeuralEnsemble => {
                AgentConfig { buffer_capacity: 50_000, hidden: vec![50, 25, 10], reg_coeff: 0.0, ..base }
            }
            AgentKind::WindowNeuralEnsemble => AgentConfig { hidden: vec![50, 25, 10], reg_coeff: 0.0, ..base },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ensemble_size", self.ensemble_size),
            ("buffer_capacity", self.buffer_capacity),
            ("minibatch", self.minibatch),
            ("pred_minibatch", self.pred_minibatch),
            ("lookback", self.lookback),
            ("train_interval", self.train_interval),
            ("gru_hidden", self.gru_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::param(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("lr", self.lr), ("seq_lr", self.seq_lr), ("pred_lr", self.pred_lr), ("reg_coeff", self.reg_coeff)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be finite and non-negative")));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::param("hidden must list at least one positive width"));
        }
        if self.pred_hidden.contains(&0) {
            return Err(Error::param("pred_hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn feature_width(&self) -> usize {
        *self.hidden.last().unwrap()
    }
}

/// The same agent restricted to the most recent `window` transitions.
pub fn sliding_window_variant(config: &AgentConfig, window: usize) -> Result<AgentConfig> {
    if window == 0 {
        return Err(Error::param("window must be positive"));
    }
    Ok(AgentConfig { buffer_capacity: window, ..config.clone() })
}

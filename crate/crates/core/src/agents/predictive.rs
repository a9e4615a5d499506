//! Predictive heads `f^pred(w^pred_m; w_{m,j+2} ⊙ b(ψ_m; c, a))`.

use crate::nn::{sgd_step_in_place, LossKind, MlpWeights, MlpWorkspace, Params};
use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

use super::buffer::ReplayBuffer;
use super::config::AgentConfig;
use super::ensemble::RewardParticle;

#[derive(Debug, Clone)]
pub struct PredictiveParticle {
    pub head: MlpWeights,
    pub anchor: MlpWeights,
    pub rng: Rng,
    /// Rounds in which at least one gradient step was taken.
    pub trained_rounds: usize,
    ws: MlpWorkspace,
    grad: MlpWeights,
}

/// Elementwise product of the weight part of a flattened last layer with the
/// base features. The bias entry of `w_flat` is not used.
pub fn predictive_input(w_flat: &[f64], features: &[f64]) -> Vec<f64> {
    features.iter().zip(w_flat).map(|(b, w)| w * b).collect()
}

impl PredictiveParticle {
    pub fn new(feature_dim: usize, config: &AgentConfig, init_seed: u64, rng: Rng) -> Self {
        let mut sizes = vec![feature_dim];
        sizes.extend(&config.pred_hidden);
        sizes.push(1);
        PredictiveParticle::from_head(MlpWeights::random(&sizes, &mut rng_from_seed(init_seed)), rng)
    }

    pub fn from_head(head: MlpWeights, rng: Rng) -> Self {
        let grad = head.zeros_like();
        PredictiveParticle { anchor: head.clone(), head, rng, trained_rounds: 0, ws: MlpWorkspace::default(), grad }
    }

    /// Reward prediction (sigmoid applied under log-loss).
    pub fn predict(&mut self, input: &[f64], loss: LossKind) -> f64 {
        loss.predict(self.head.forward_ws(input, &mut self.ws)[0])
    }
}

/// Number of leading buffer entries whose `w_{j+2}` snapshot is recorded.
pub fn eligible_prefix(buffer: &ReplayBuffer, history_len: usize) -> usize {
    buffer.prefix_len(|tr| tr.round + 2 <= history_len)
}

/// τ_pred SGD steps on minibatches of size `min(K'', eligible)`. Needs at
/// least `L + 2` recorded snapshots; otherwise does nothing. Returns the
/// number of steps taken.
pub fn train_predictive_nn(
    buffer: &ReplayBuffer,
    reward: &mut RewardParticle,
    pred: &mut PredictiveParticle,
    config: &AgentConfig,
) -> Result<usize> {
    let hist_len = reward.history.len();
    if hist_len < config.lookback + 2 || config.pred_steps == 0 {
        return Ok(0);
    }
    let eligible = eligible_prefix(buffer, hist_len);
    if eligible == 0 {
        return Ok(0);
    }
    let batch = config.pred_minibatch.min(eligible);
    for _ in 0..config.pred_steps {
        pred.grad.param_slices_mut().into_iter().for_each(|s| s.fill(0.0));
        for idx in ReplayBuffer::sample_indices(&mut pred.rng, eligible, batch) {
            let tr = buffer.get(idx);
            // history is 1-based in the algorithm: w_{round+2} lives at round + 1.
            let future = tr.round + 1;
            if future >= hist_len {
                return Err(Error::InsufficientHistory { needed: future + 1, have: hist_len });
            }
            let b = reward.features(&tr.features);
            let input = predictive_input(&reward.history[future], &b);
            pred.head.accumulate_grad(&input, &[tr.reward], config.loss, &mut pred.ws, &mut pred.grad);
        }
        pred.head.accumulate_anchor_penalty(&pred.anchor, config.reg_coeff, batch as f64, &mut pred.grad);
        sgd_step_in_place(&mut pred.head, &pred.grad, config.pred_lr)?;
    }
    pred.trained_rounds += 1;
    Ok(config.pred_steps)
}

//! Reward-model ensemble: per-particle base network `b(ψ_m; ·)` and last
//! layer `f(w_m; ·)`, with the history of last-layer snapshots.

use crate::nn::{sgd_step_in_place, LossKind, MlpWeights, MlpWorkspace, Params};
use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

use super::buffer::ReplayBuffer;
use super::config::AgentConfig;

#[derive(Debug, Clone)]
pub struct RewardParticle {
    pub model: MlpWeights,
    /// Initial weights `(ψ_{m,0}, w_{m,0})`; only the last layer is used as anchor.
    pub anchor: MlpWeights,
    /// Flattened last layers `w_{m,1..t}`, one per completed training round.
    pub history: Vec<Vec<f64>>,
    pub rng: Rng,
    ws: MlpWorkspace,
    grad: MlpWeights,
}

/// Last layer flattened as weight rows followed by the bias.
pub fn flatten_last_layer(model: &MlpWeights) -> Vec<f64> {
    let l = model.last_layer();
    l.weight.iter().chain(&l.bias).copied().collect()
}

/// `f(w; b)` for a flattened scalar-output last layer.
#[inline]
pub fn last_layer_score(flat: &[f64], features: &[f64]) -> f64 {
    let n = features.len();
    flat[..n].iter().zip(features).map(|(w, b)| w * b).sum::<f64>() + flat[n]
}

impl RewardParticle {
    pub fn new(input_dim: usize, config: &AgentConfig, init_seed: u64, rng: Rng) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let model = MlpWeights::random(&sizes, &mut rng_from_seed(init_seed));
        RewardParticle::from_model(model, rng)
    }

    pub fn from_model(model: MlpWeights, rng: Rng) -> Self {
        let grad = model.zeros_like();
        RewardParticle { anchor: model.clone(), model, history: Vec::new(), rng, ws: MlpWorkspace::default(), grad }
    }

    pub fn latest(&self) -> Option<&[f64]> {
        self.history.last().map(|v| v.as_slice())
    }

    /// `b(ψ_m; x)`.
    pub fn features(&mut self, x: &[f64]) -> Vec<f64> {
        self.model.features(x, &mut self.ws)
    }

    /// Raw model output `f(w_m; b(ψ_m; x))`.
    pub fn raw_score(&mut self, x: &[f64]) -> f64 {
        self.model.forward_ws(x, &mut self.ws)[0]
    }
}

/// τ SGD steps on minibatches of size `min(K', |B|)` drawn uniformly with
/// replacement, then record the resulting last layer.
///
/// Each step descends `Σ_batch [L(f(w; b(ψ; x)), r) + reg·‖w − w_0‖₂]`.
/// An empty buffer only records the current last layer.
pub fn train_reward_nn(buffer: &ReplayBuffer, particle: &mut RewardParticle, config: &AgentConfig) -> Result<()> {
    if !buffer.is_empty() {
        let batch = config.minibatch.min(buffer.len());
        let RewardParticle { model, anchor, rng, ws, grad, .. } = particle;
        for _ in 0..config.reward_steps {
            grad.param_slices_mut().into_iter().for_each(|s| s.fill(0.0));
            for idx in ReplayBuffer::sample_indices(rng, buffer.len(), batch) {
                let tr = buffer.get(idx);
                if config.loss == LossKind::BernoulliLogLoss && tr.reward != 0.0 && tr.reward != 1.0 {
                    return Err(Error::InvalidTarget(tr.reward));
                }
                model.accumulate_grad(&tr.features, &[tr.reward], config.loss, ws, grad);
            }
            model.accumulate_anchor_penalty(anchor, config.reg_coeff, batch as f64, grad);
            sgd_step_in_place(model, grad, config.lr)?;
        }
    }
    let flat = flatten_last_layer(&particle.model);
    particle.history.push(flat);
    Ok(())
}

//! GRU sequence model over last-layer snapshots.
//!
//! Trained one step ahead: window `w_{j−L+1..j}` → `w_{j+1}`. With
//! `residual_sequence` the readout predicts the increment over `w_j`.

use rand::Rng as _;

use crate::nn::{sgd_step_in_place, GruWeights, Params};
use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

use super::config::{AgentConfig, RolloutMode};

#[derive(Debug, Clone)]
pub struct SequenceParticle {
    pub gru: GruWeights,
    pub rng: Rng,
    grad: GruWeights,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceTrainStats {
    /// History indices `j` (1-based) sampled, one per step.
    pub sampled: Vec<usize>,
    pub losses: Vec<f64>,
}

impl SequenceParticle {
    pub fn new(weight_dim: usize, config: &AgentConfig, init_seed: u64, rng: Rng) -> Self {
        let mut init = rng_from_seed(init_seed);
        let mut gru = GruWeights::random(weight_dim, config.gru_hidden, weight_dim, &mut init);
        if config.residual_sequence {
            // Start as the persistence forecast `ŵ_{t+1} = w_t`.
            gru.readout.weight.fill(0.0);
        }
        SequenceParticle::from_weights(gru, rng)
    }

    pub fn from_weights(gru: GruWeights, rng: Rng) -> Self {
        let grad = gru.zeros_like();
        SequenceParticle { gru, rng, grad }
    }

    /// One application of the sequence model to a window of snapshots.
    pub fn predict_next(&self, window: &[Vec<f64>], residual: bool) -> Result<Vec<f64>> {
        let mut y = self.gru.forward(window)?;
        if residual {
            let last = window.last().ok_or(Error::EmptySequence)?;
            y.iter_mut().zip(last).for_each(|(a, b)| *a += b);
        }
        Ok(y)
    }
}

/// τ_seq single-sample SGD steps on the MSE between the model's prediction
/// from `w_{j−L+1..j}` and `w_{j+1}`, `j ~ unif{L, …, t−1}`. A history
/// shorter than `L + 1` leaves the model unchanged.
pub fn train_sequence_nn(
    seq: &mut SequenceParticle,
    history: &[Vec<f64>],
    config: &AgentConfig,
) -> Result<SequenceTrainStats> {
    let l = config.lookback;
    let t = history.len();
    let mut stats = SequenceTrainStats::default();
    if t < l + 1 {
        return Ok(stats);
    }
    let SequenceParticle { gru, rng, grad } = seq;
    for _ in 0..config.seq_steps {
        let j = rng.random_range(l..=t - 1);
        // 1-based w_{j−L+1..j} is history[j−L..j]; target w_{j+1} is history[j].
        let window = &history[j - l..j];
        let offset = config.residual_sequence.then(|| window[l - 1].as_slice());
        grad.param_slices_mut().into_iter().for_each(|s| s.fill(0.0));
        let loss = gru.accumulate_grad(window, offset, &history[j], grad)?;
        sgd_step_in_place(gru, grad, config.seq_lr)?;
        stats.sampled.push(j);
        stats.losses.push(loss);
    }
    Ok(stats)
}

/// `ŵ_{t+x}` from the last `L` snapshots. `x = 0` returns `w_t`.
pub fn rollout_future_weights(
    seq: &SequenceParticle,
    history: &[Vec<f64>],
    steps: usize,
    config: &AgentConfig,
) -> Result<Vec<f64>> {
    let l = config.lookback;
    if history.len() < l {
        return Err(Error::InsufficientHistory { needed: l, have: history.len() });
    }
    if steps == 0 {
        return Ok(history.last().unwrap().clone());
    }
    let mut window: Vec<Vec<f64>> = history[history.len() - l..].to_vec();
    let applications = match config.rollout {
        RolloutMode::Iterated => steps,
        RolloutMode::Direct => 1,
    };
    let mut pred = Vec::new();
    for _ in 0..applications {
        pred = seq.predict_next(&window, config.residual_sequence)?;
        window.remove(0);
        window.push(pred.clone());
    }
    Ok(pred)
}

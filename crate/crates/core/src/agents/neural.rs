use rand::Rng as _;

use crate::exec::map_vec;
use crate::rng::{derive_seed, stream, Rng};
use crate::{Error, Result};

use super::buffer::{ReplayBuffer, Transition};
use super::config::AgentConfig;
use super::ensemble::{last_layer_score, train_reward_nn, RewardParticle};
use super::predictive::{predictive_input, train_predictive_nn, PredictiveParticle};
use super::sequence::{rollout_future_weights, train_sequence_nn, SequenceParticle};
use super::{argmax, Agent, AgentKind, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuralVariant {
    /// Act on the latest reward model.
    Ensemble,
    /// Act on the one-step sequence-model forecast of the last layer.
    Sequence,
    /// Act on the predictive heads fed with the two-step forecast.
    Pes,
}

/// Everything owned by ensemble member `m`.
#[derive(Debug, Clone)]
pub struct NeuralParticle {
    pub reward: RewardParticle,
    pub seq: Option<SequenceParticle>,
    pub pred: Option<PredictiveParticle>,
}

#[derive(Debug, Clone)]
pub struct NeuralAgent {
    kind: AgentKind,
    variant: NeuralVariant,
    config: AgentConfig,
    particles: Vec<NeuralParticle>,
    buffer: ReplayBuffer,
    rng: Rng,
    /// Forecast last layers for the current round, filled lazily.
    rollouts: Vec<Option<Vec<f64>>>,
}

impl NeuralAgent {
    pub fn new(kind: AgentKind, variant: NeuralVariant, config: AgentConfig, input_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let width = config.feature_width();
        let particles = (0..config.ensemble_size as u64)
            .map(|m| {
                let s = |tag: u64| derive_seed(seed, &[m, tag]);
                let reward = RewardParticle::new(input_dim, &config, s(0), stream(s(1), 0));
                let seq = (variant != NeuralVariant::Ensemble)
                    .then(|| SequenceParticle::new(width + 1, &config, s(2), stream(s(3), 0)));
                let pred = (variant == NeuralVariant::Pes)
                    .then(|| PredictiveParticle::new(width, &config, s(4), stream(s(5), 0)));
                NeuralParticle { reward, seq, pred }
            })
            .collect();
        NeuralAgent::from_particles(kind, variant, config, particles, seed)
    }

    /// Assemble an agent from hand-built particles.
    pub fn from_particles(
        kind: AgentKind,
        variant: NeuralVariant,
        config: AgentConfig,
        particles: Vec<NeuralParticle>,
        seed: u64,
    ) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::param("ensemble needs at least one particle"));
        }
        let needs_seq = variant != NeuralVariant::Ensemble;
        let needs_pred = variant == NeuralVariant::Pes;
        if particles.iter().any(|p| needs_seq && p.seq.is_none() || needs_pred && p.pred.is_none()) {
            return Err(Error::param("particles are missing models required by the variant"));
        }
        let n = particles.len();
        Ok(NeuralAgent {
            kind,
            variant,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            particles,
            rng: stream(seed, 0),
            rollouts: vec![None; n],
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn variant(&self) -> NeuralVariant {
        self.variant
    }

    pub fn particles(&self) -> &[NeuralParticle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [NeuralParticle] {
        self.rollouts.iter_mut().for_each(|r| *r = None);
        &mut self.particles
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Snapshots recorded so far (identical across particles).
    pub fn rounds(&self) -> usize {
        self.particles[0].reward.history.len()
    }

    /// Draw the particle used for the next decision.
    pub fn sample_particle(&mut self) -> usize {
        self.rng.random_range(0..self.particles.len())
    }

    fn base_features(&mut self, m: usize, obs: &Observation) -> Result<Vec<Vec<f64>>> {
        if obs.num_actions() == 0 {
            return Err(Error::EmptyActionSet);
        }
        Ok(obs.features.iter().map(|x| self.particles[m].reward.features(x)).collect())
    }

    /// Greedy action of particle `m`'s current reward model.
    pub fn ensemble_action(&mut self, m: usize, obs: &Observation) -> Result<usize> {
        if obs.num_actions() == 0 {
            return Err(Error::EmptyActionSet);
        }
        let scores: Vec<f64> = obs.features.iter().map(|x| self.particles[m].reward.raw_score(x)).collect();
        Ok(argmax(&scores))
    }

    fn forecast(&mut self, m: usize, steps: usize) -> Result<Vec<f64>> {
        if let Some(w) = &self.rollouts[m] {
            return Ok(w.clone());
        }
        let p = &self.particles[m];
        let seq = p.seq.as_ref().ok_or_else(|| Error::Unsupported("particle has no sequence model".into()))?;
        let w = rollout_future_weights(seq, &p.reward.history, steps, &self.config)?;
        self.rollouts[m] = Some(w.clone());
        Ok(w)
    }

    /// Particle `m` scores actions with its forecast `ŵ_{t+1}`; falls back to
    /// [`NeuralAgent::ensemble_action`] while the history is shorter than `L`.
    pub fn sequence_action(&mut self, m: usize, obs: &Observation) -> Result<usize> {
        if self.particles[m].reward.history.len() < self.config.lookback {
            return self.ensemble_action(m, obs);
        }
        let w = self.forecast(m, 1)?;
        let scores: Vec<f64> = self.base_features(m, obs)?.iter().map(|b| last_layer_score(&w, b)).collect();
        Ok(argmax(&scores))
    }

    /// Sum over every predictive head of `f^pred(ŵ_{m,t+2} ⊙ b(ψ_m; c, a))`.
    /// Falls back to [`NeuralAgent::ensemble_action`] until the history holds
    /// `L + 2` snapshots and the heads have been trained.
    pub fn pes_action(&mut self, m: usize, obs: &Observation) -> Result<usize> {
        let ready = self.particles[m].reward.history.len() >= self.config.lookback + 2
            && self.particles[m].pred.as_ref().is_some_and(|p| p.trained_rounds > 0);
        if !ready {
            return self.ensemble_action(m, obs);
        }
        let w = self.forecast(m, 2)?;
        let inputs: Vec<Vec<f64>> = self.base_features(m, obs)?.iter().map(|b| predictive_input(&w, b)).collect();
        let loss = self.config.loss;
        let mut scores = vec![0.0; inputs.len()];
        for p in &mut self.particles {
            let head = p.pred.as_mut().ok_or_else(|| Error::Unsupported("particle has no predictive head".into()))?;
            for (s, x) in scores.iter_mut().zip(&inputs) {
                *s += head.predict(x, loss);
            }
        }
        Ok(argmax(&scores))
    }

    pub fn act_neural_ensemble(&mut self, obs: &Observation) -> Result<usize> {
        let m = self.sample_particle();
        self.ensemble_action(m, obs)
    }

    pub fn act_sequence_ensemble(&mut self, obs: &Observation) -> Result<usize> {
        let m = self.sample_particle();
        self.sequence_action(m, obs)
    }

    pub fn act_neural_pes(&mut self, obs: &Observation) -> Result<usize> {
        let m = self.sample_particle();
        self.pes_action(m, obs)
    }
}

fn train_particle(p: &mut NeuralParticle, buffer: &ReplayBuffer, config: &AgentConfig) -> Result<()> {
    train_reward_nn(buffer, &mut p.reward, config)?;
    if let Some(seq) = &mut p.seq {
        train_sequence_nn(seq, &p.reward.history, config)?;
    }
    if let Some(pred) = &mut p.pred {
        train_predictive_nn(buffer, &mut p.reward, pred, config)?;
    }
    Ok(())
}

impl Agent for NeuralAgent {
    fn kind(&self) -> AgentKind {
        self.kind
    }

    fn train_interval(&self) -> usize {
        self.config.train_interval
    }

    fn train(&mut self) -> Result<()> {
        let particles = std::mem::take(&mut self.particles);
        let (buffer, config) = (&self.buffer, &self.config);
        let results = map_vec(config.exec, particles, |mut p| {
            let r = train_particle(&mut p, buffer, config);
            (p, r)
        });
        let mut first_err = None;
        for (p, r) in results {
            self.particles.push(p);
            if let (Err(e), None) = (r, &first_err) {
                first_err = Some(e);
            }
        }
        self.rollouts.iter_mut().for_each(|r| *r = None);
        first_err.map_or(Ok(()), Err)
    }

    fn act(&mut self, obs: &Observation) -> Result<usize> {
        match self.variant {
            NeuralVariant::Ensemble => self.act_neural_ensemble(obs),
            NeuralVariant::Sequence => self.act_sequence_ensemble(obs),
            NeuralVariant::Pes => self.act_neural_pes(obs),
        }
    }

    fn observe(&mut self, obs: &Observation, action: usize, reward: f64) -> Result<()> {
        let features = obs
            .features
            .get(action)
            .ok_or(Error::InvalidAction { action, num_actions: obs.num_actions() })?
            .clone();
        let round = self.rounds();
        self.buffer.push(Transition { context: obs.context, action, reward, t: obs.t, round, features });
        Ok(())
    }
}

use crate::env::LinearGaussianModel;
use crate::rng::{stream, Rng};
use crate::{Error, Result};

use super::kalman::{act_exact_linps, act_exact_ts, kalman_predict_with, kalman_update, GaussianBelief};
use super::{Agent, AgentKind, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactRule {
    Ts,
    LinPs,
}

/// Kalman-filtered agent holding the posterior on the current parameter.
#[derive(Debug, Clone)]
pub struct ExactAgent {
    rule: ExactRule,
    model: LinearGaussianModel,
    posterior: GaussianBelief,
    /// One-step predictive belief computed while acting, reused by `observe`.
    pending: Option<GaussianBelief>,
    rng: Rng,
}

impl ExactAgent {
    pub fn new(rule: ExactRule, model: LinearGaussianModel, seed: u64) -> Result<Self> {
        let d = model.dim();
        if model.stationary_var.len() != d || model.prior_var.len() != d {
            return Err(Error::shape("linear-Gaussian model vectors must share one dimension"));
        }
        if !(model.noise_sd >= 0.0) {
            return Err(Error::param("noise_sd must be non-negative"));
        }
        let posterior = GaussianBelief::diagonal(&vec![0.0; d], &model.prior_var);
        Ok(ExactAgent { rule, model, posterior, pending: None, rng: stream(seed, 0) })
    }

    pub fn posterior(&self) -> &GaussianBelief {
        &self.posterior
    }

    pub fn set_posterior(&mut self, belief: GaussianBelief) {
        self.posterior = belief;
        self.pending = None;
    }
}

impl Agent for ExactAgent {
    fn kind(&self) -> AgentKind {
        match self.rule {
            ExactRule::Ts => AgentKind::ExactTs,
            ExactRule::LinPs => AgentKind::ExactLinps,
        }
    }

    fn act(&mut self, obs: &Observation) -> Result<usize> {
        let feats = obs.feature_refs();
        let (a, next) = match self.rule {
            ExactRule::Ts => act_exact_ts(&self.posterior, &self.model, &feats, &mut self.rng)?,
            ExactRule::LinPs => act_exact_linps(&self.posterior, &self.model, &feats, &mut self.rng)?,
        };
        self.pending = Some(next);
        Ok(a)
    }

    fn observe(&mut self, obs: &Observation, action: usize, reward: f64) -> Result<()> {
        let phi = obs
            .features
            .get(action)
            .ok_or(Error::InvalidAction { action, num_actions: obs.num_actions() })?;
        let next = self
            .pending
            .take()
            .unwrap_or_else(|| kalman_predict_with(&self.posterior, &self.model.gamma, &self.model.stationary_var));
        self.posterior = kalman_update(&next, phi, reward, self.model.noise_sd);
        Ok(())
    }
}

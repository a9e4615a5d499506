//! Non-stationary contextual bandit environments.
//!
//! Synthetic instances follow a fixed timeline per step: the environment holds
//! the current parameter `θ_t`, scores every action by its expected *next*
//! reward given `θ_t` (this is the regret benchmark), advances to `θ_{t+1}`,
//! draws the realised reward from `θ_{t+1}` and samples the next context.

mod features;
mod instance;
mod process;
mod replay;

pub use features::FeatureMap;
pub use instance::{
    make_ar1_logistic_benchmark, BanditInstance, LinearGaussianModel, ProcessSpec, RewardKind, SyntheticSpec,
};
pub use process::{advance_theta, AbruptProcess, Ar1Process, ThetaProcess};
pub use replay::{ReplayEnvironment, ReplayRow};

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub context: usize,
    pub action: usize,
    /// Realised reward.
    pub reward: f64,
    /// Expected reward of the chosen action under the regret benchmark.
    pub chosen_expected_reward: f64,
    /// `max_a` of the same expectation.
    pub optimal_expected_reward: f64,
}

impl StepRecord {
    pub fn regret(&self) -> f64 {
        self.optimal_expected_reward - self.chosen_expected_reward
    }
}

/// Step interface shared by synthetic and replay environments.
pub trait Environment: Send {
    fn num_actions(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// Index of the next step to be played.
    fn t(&self) -> usize;
    fn context(&self) -> usize;
    /// `φ(C_t, a)` for the current context.
    fn action_features(&self, action: usize) -> &[f64];
    fn step(&mut self, action: usize) -> Result<StepRecord>;
    /// Number of steps left, `None` for an unbounded generator.
    fn remaining(&self) -> Option<usize> {
        None
    }
    /// The exact linear-Gaussian model, when this environment has one.
    fn linear_gaussian_model(&self) -> Option<LinearGaussianModel> {
        None
    }
}

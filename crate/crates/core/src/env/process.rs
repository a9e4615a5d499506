use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::Rng as StreamRng;
use crate::{Error, Result};

/// `θ_{t+1,i} = γ_i θ_{t,i} + W_{t+1,i}`, `W ~ N(0, 1 − γ_i²)`.
#[derive(Debug, Clone)]
pub struct Ar1Process {
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    rng: StreamRng,
}

impl Ar1Process {
    pub fn new(gamma: Vec<f64>, theta: Vec<f64>, rng: StreamRng) -> Result<Self> {
        if gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::param("AR(1) coefficients must lie in [0, 1]"));
        }
        if gamma.len() != theta.len() {
            return Err(Error::shape("gamma and theta lengths differ"));
        }
        Ok(Ar1Process { gamma, theta, rng })
    }

    pub fn advance(&mut self) {
        for (th, &g) in self.theta.iter_mut().zip(&self.gamma) {
            let w: f64 = self.rng.sample(StandardNormal);
            *th = g * *th + (1.0 - g * g).sqrt() * w;
        }
    }
}

/// `θ_{t+1,i} = B_{t,i} β_{t+1,i} + (1 − B_{t,i}) θ_{t,i}` with
/// `B ~ Bernoulli(q_i)` and `β ~ N(beta_mean, beta_sd²)`.
#[derive(Debug, Clone)]
pub struct AbruptProcess {
    pub q: Vec<f64>,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub theta: Vec<f64>,
    /// Which coordinates were resampled by the last `advance`.
    pub last_resampled: Vec<bool>,
    rng: StreamRng,
}

impl AbruptProcess {
    pub fn new(q: Vec<f64>, beta_mean: f64, beta_sd: f64, theta: Vec<f64>, rng: StreamRng) -> Result<Self> {
        if q.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("switch probabilities must lie in [0, 1]"));
        }
        if q.len() != theta.len() {
            return Err(Error::shape("q and theta lengths differ"));
        }
        if !(beta_sd >= 0.0) {
            return Err(Error::param("beta_sd must be non-negative"));
        }
        let d = q.len();
        Ok(AbruptProcess { q, beta_mean, beta_sd, theta, last_resampled: vec![false; d], rng })
    }

    pub fn advance(&mut self) {
        for i in 0..self.theta.len() {
            // Both draws happen every step so the stream never depends on outcomes.
            let u: f64 = self.rng.random();
            let z: f64 = self.rng.sample(StandardNormal);
            let switch = u < self.q[i];
            self.last_resampled[i] = switch;
            if switch {
                self.theta[i] = self.beta_mean + self.beta_sd * z;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ThetaProcess {
    Ar1(Ar1Process),
    Abrupt(AbruptProcess),
}

impl ThetaProcess {
    pub fn theta(&self) -> &[f64] {
        match self {
            ThetaProcess::Ar1(p) => &p.theta,
            ThetaProcess::Abrupt(p) => &p.theta,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta().len()
    }

    pub fn advance(&mut self) {
        match self {
            ThetaProcess::Ar1(p) => p.advance(),
            ThetaProcess::Abrupt(p) => p.advance(),
        }
    }
}

/// Free-function form of [`ThetaProcess::advance`].
pub fn advance_theta(mut process: ThetaProcess) -> ThetaProcess {
    process.advance();
    process
}

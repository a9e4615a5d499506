//! Regret bounds for linear predictive sampling and the information
//! quantities they depend on. All logarithms are natural (nats).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::env::StepRecord;
use crate::{Error, Result};

fn check_unit_interval(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(x) => Err(Error::param(format!("{name} entries must lie in [0, 1], got {x}"))),
        None => Ok(()),
    }
}

/// `(I(θ₂;θ₁), I(θ₃;θ₂|θ₁))` for independent unit-variance AR(1) coordinates:
/// `Σ ½·log(1/(1−γ²))` and `Σ ½·log(1+γ²)`. The first is `+∞` when any `γ_i = 1`.
pub fn ar1_mi_terms(gamma: &[f64]) -> Result<(f64, f64)> {
    check_unit_interval("gamma", gamma)?;
    let first = gamma
        .iter()
        .map(|g| if *g == 1.0 { f64::INFINITY } else { -0.5 * (-g * g).ln_1p() })
        .sum();
    let per_step = gamma.iter().map(|g| 0.5 * (g * g).ln_1p()).sum();
    Ok((first, per_step))
}

/// Bernoulli entropy in nats.
pub fn bernoulli_entropy(q: f64) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    h(q) + h(1.0 - q)
}

/// `(Σ (1−q_i)·H(θ_{1,i}), Σ [2·H_b(q_i) + q_i(1−q_i)·H(θ_{1,i})])` for
/// abrupt changes with resampling probabilities `q`.
pub fn abrupt_bound_terms(q: &[f64], entropy_theta1: &[f64]) -> Result<(f64, f64)> {
    check_unit_interval("q", q)?;
    if q.len() != entropy_theta1.len() {
        return Err(Error::shape("q and entropy_theta1 must have equal length"));
    }
    if entropy_theta1.iter().any(|h| !(*h >= 0.0)) {
        return Err(Error::param("entropies must be non-negative"));
    }
    let first = q.iter().zip(entropy_theta1).map(|(q, h)| (1.0 - q) * h).sum();
    let per_step = q.iter().zip(entropy_theta1).map(|(q, h)| 2.0 * bernoulli_entropy(*q) + q * (1.0 - q) * h).sum();
    Ok((first, per_step))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundProcess {
    Ar1 { gamma: Vec<f64> },
    Abrupt { q: Vec<f64>, entropy_theta1: Vec<f64> },
    /// Supply `I(θ₂;θ₁)` and `I(θ₃;θ₂|θ₁)` directly.
    Generic { mi_first: f64, mi_per_step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d: usize,
    pub horizon: usize,
    pub process: BoundProcess,
}

/// Non-finite values serialise as JSON `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub regret_bound: f64,
    pub average_regret_bound: f64,
    /// Plays the role of `I(θ₂;θ₁)`.
    pub first_term: f64,
    /// Plays the role of `I(θ₃;θ₂|θ₁)`.
    pub per_step_term: f64,
    /// AR(1) only: the same bound written with `d/4` and unhalved logarithms.
    pub ar1_closed_form: Option<f64>,
    pub ar1_closed_form_average: Option<f64>,
}

fn generic_bound(d: usize, horizon: usize, first: f64, per_step: f64) -> (f64, f64) {
    let dh = d as f64 / 2.0;
    let t = horizon as f64;
    let cumulative = (dh * t * (first + (t - 1.0) * per_step)).sqrt();
    (cumulative, (dh * per_step).sqrt())
}

pub fn linps_regret_bound(inputs: &BoundInputs) -> Result<BoundResult> {
    let BoundInputs { d, horizon, ref process } = *inputs;
    if d == 0 || horizon == 0 {
        return Err(Error::param("d and horizon must be positive"));
    }
    let (first, per_step) = match process {
        BoundProcess::Ar1 { gamma } | BoundProcess::Abrupt { q: gamma, .. } if gamma.len() != d => {
            return Err(Error::shape(format!("expected {d} coordinates, got {}", gamma.len())));
        }
        BoundProcess::Ar1 { gamma } => ar1_mi_terms(gamma)?,
        BoundProcess::Abrupt { q, entropy_theta1 } => abrupt_bound_terms(q, entropy_theta1)?,
        BoundProcess::Generic { mi_first, mi_per_step } => {
            if !(*mi_first >= 0.0 && *mi_per_step >= 0.0) {
                return Err(Error::param("mutual informations must be non-negative"));
            }
            (*mi_first, *mi_per_step)
        }
    };
    let (regret_bound, average_regret_bound) = generic_bound(d, horizon, first, per_step);
    let (mut closed, mut closed_avg) = (None, None);
    if let BoundProcess::Ar1 { gamma } = process {
        let dq = d as f64 / 4.0;
        let t = horizon as f64;
        let log_first: f64 = gamma.iter().map(|g| -(-g * g).ln_1p()).sum();
        let log_step: f64 = gamma.iter().map(|g| (g * g).ln_1p()).sum();
        let c = (dq * t * (log_first + (t - 1.0) * log_step)).sqrt();
        let a = (dq * log_step).sqrt();
        debug_assert!(c == regret_bound || (c - regret_bound).abs() <= 1e-9 * regret_bound.max(1.0));
        debug_assert!((a - average_regret_bound).abs() <= 1e-12 * average_regret_bound.max(1.0));
        closed = Some(c);
        closed_avg = Some(a);
    }
    Ok(BoundResult {
        regret_bound,
        average_regret_bound,
        first_term: first,
        per_step_term: per_step,
        ar1_closed_form: closed,
        ar1_closed_form_average: closed_avg,
    })
}

/// Which coordinates of a joint sample form `X`, `Y` and the conditioning set `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiSpec {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub given: Vec<usize>,
}

/// `½·log det`, or `−∞` for a singular block.
fn half_logdet(cov: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cov[(idx[i], idx[j])]);
    match sub.cholesky() {
        Some(ch) => ch.l().diagonal().iter().map(|v| v.ln()).sum(),
        None => f64::NEG_INFINITY,
    }
}

/// Gaussian estimate of `I(X;Y|Z)` from the empirical covariance of
/// `samples`: `½[log|Σ_XZ| + log|Σ_YZ| − log|Σ_Z| − log|Σ_XYZ|]`.
///
/// A singular joint block with non-singular marginals yields `+∞`; a singular
/// `Σ_XZ`, `Σ_YZ` or `Σ_Z` is an error.
pub fn gaussian_mi_from_samples(samples: &[Vec<f64>], spec: &MiSpec) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::EmptyInput("need at least two samples".into()));
    }
    let k = samples[0].len();
    let all = spec.x.iter().chain(&spec.y).chain(&spec.given);
    if spec.x.is_empty() || spec.y.is_empty() || all.clone().any(|&i| i >= k) {
        return Err(Error::param("invalid coordinate selection"));
    }
    if samples.iter().any(|s| s.len() != k) {
        return Err(Error::shape("samples have unequal lengths"));
    }
    let mut mean = vec![0.0; k];
    for s in samples {
        mean.iter_mut().zip(s).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(k, k);
    for s in samples {
        for i in 0..k {
            let di = s[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let cat = |a: &[usize], b: &[usize]| -> Vec<usize> { a.iter().chain(b).copied().collect() };
    let xz = half_logdet(&cov, &cat(&spec.x, &spec.given));
    let yz = half_logdet(&cov, &cat(&spec.y, &spec.given));
    let z = half_logdet(&cov, &spec.given);
    if !(xz.is_finite() && yz.is_finite() && z.is_finite()) {
        return Err(Error::DegenerateCovariance("a marginal block is singular".into()));
    }
    let xyz = half_logdet(&cov, &cat(&cat(&spec.x, &spec.y), &spec.given));
    if xyz == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(xz + yz - z - xyz)
}

/// Draw `n` joint samples from `sampler` and estimate `I(X;Y|Z)`.
pub fn mc_gaussian_mi<R, F>(mut sampler: F, spec: &MiSpec, n: usize, rng: &mut R) -> Result<f64>
where
    R: rand::Rng + ?Sized,
    F: FnMut(&mut R) -> Vec<f64>,
{
    let samples: Vec<Vec<f64>> = (0..n).map(|_| sampler(rng)).collect();
    gaussian_mi_from_samples(&samples, spec)
}

/// `(θ₁, θ₂, θ₃)` of a scalar stationary AR(1) chain.
pub fn ar1_triple<R: rand::Rng + ?Sized>(gamma: f64, rng: &mut R) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let sd = (1.0 - gamma * gamma).max(0.0).sqrt();
    let t1: f64 = rng.sample(StandardNormal);
    let t2 = gamma * t1 + sd * rng.sample::<f64, _>(StandardNormal);
    let t3 = gamma * t2 + sd * rng.sample::<f64, _>(StandardNormal);
    vec![t1, t2, t3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRegret {
    pub cumulative: f64,
    pub average: f64,
    pub per_step: Vec<f64>,
}

pub fn empirical_regret(records: &[StepRecord]) -> Result<EmpiricalRegret> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no step records".into()));
    }
    let per_step: Vec<f64> = records.iter().map(StepRecord::regret).collect();
    let cumulative: f64 = per_step.iter().sum();
    Ok(EmpiricalRegret { cumulative, average: cumulative / records.len() as f64, per_step })
}

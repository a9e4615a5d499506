//! Exact Gaussian filtering for linear-Gaussian AR(1) bandits, and the
//! Thompson-sampling / linear-predictive-sampling decision rules built on it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::argmax;
use crate::env::LinearGaussianModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::shape("covariance must be d × d"));
        }
        let mut b = GaussianBelief { mean, cov };
        b.symmetrize();
        Ok(b)
    }

    pub fn isotropic(d: usize, var: f64) -> Self {
        GaussianBelief { mean: DVector::zeros(d), cov: DMatrix::identity(d, d) * var }
    }

    pub fn diagonal(mean: &[f64], var: &[f64]) -> Self {
        GaussianBelief { mean: DVector::from_column_slice(mean), cov: DMatrix::from_diagonal(&DVector::from_column_slice(var)) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn symmetrize(&mut self) {
        let t = self.cov.transpose();
        self.cov = (&self.cov + t) * 0.5;
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let l = psd_cholesky(&self.cov);
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.mean + l * z
    }
}

/// Lower-triangular `L` with `L Lᵀ = A` for symmetric PSD `A`; columns
/// whose pivot vanishes are zeroed instead of failing.
pub fn psd_cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    l
}

/// One AR(1) transition with unit stationary variance:
/// `mean' = Γ mean`, `cov' = Γ cov Γ + (I − Γ²)`.
pub fn kalman_predict(belief: &GaussianBelief, gamma: &[f64]) -> GaussianBelief {
    kalman_predict_with(belief, gamma, &vec![1.0; gamma.len()])
}

/// Transition with per-coordinate stationary variance `s`:
/// `cov' = Γ cov Γ + diag(s ⊙ (1 − γ²))`.
pub fn kalman_predict_with(belief: &GaussianBelief, gamma: &[f64], stationary_var: &[f64]) -> GaussianBelief {
    let d = belief.dim();
    let mut mean = belief.mean.clone();
    let mut cov = belief.cov.clone();
    for i in 0..d {
        mean[i] *= gamma[i];
        for j in 0..d {
            cov[(i, j)] *= gamma[i] * gamma[j];
        }
        cov[(i, i)] += stationary_var[i] * (1.0 - gamma[i] * gamma[i]);
    }
    let mut b = GaussianBelief { mean, cov };
    b.symmetrize();
    b
}

fn predict_model(belief: &GaussianBelief, model: &LinearGaussianModel) -> GaussianBelief {
    kalman_predict_with(belief, &model.gamma, &model.stationary_var)
}

/// Condition on `r = φᵀθ + N(0, noise_sd²)`.
pub fn kalman_update(belief: &GaussianBelief, phi: &[f64], reward: f64, noise_sd: f64) -> GaussianBelief {
    let phi = DVector::from_column_slice(phi);
    let p_phi = &belief.cov * &phi;
    let s = phi.dot(&p_phi) + noise_sd * noise_sd;
    if !(s > 0.0) {
        return belief.clone();
    }
    let gain = &p_phi / s;
    let innovation = reward - phi.dot(&belief.mean);
    let mean = &belief.mean + &gain * innovation;
    let cov = &belief.cov - &gain * p_phi.transpose();
    let mut b = GaussianBelief { mean, cov };
    b.symmetrize();
    b
}

/// `E[θ_{t+1} | H_t, θ_{t+2} = x]` given the one-step predictive belief
/// `θ_{t+1} | H_t ~ N(m, S)`:
/// `m + S Γ (Γ S Γ + Q)⁺ (x − Γ m)`.
pub fn linps_conditional_mean(
    next: &GaussianBelief,
    model: &LinearGaussianModel,
    two_ahead: &GaussianBelief,
    x: &DVector<f64>,
) -> DVector<f64> {
    let gamma = DMatrix::from_diagonal(&DVector::from_column_slice(&model.gamma));
    let cross = &next.cov * &gamma;
    let max = two_ahead.cov.amax();
    let inv = two_ahead
        .cov
        .clone()
        .pseudo_inverse(1e-12 * max.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(next.dim(), next.dim()));
    &next.mean + cross * inv * (x - &two_ahead.mean)
}

fn linear_scores(features: &[&[f64]], theta: &DVector<f64>) -> Vec<f64> {
    features.iter().map(|phi| phi.iter().zip(theta.iter()).map(|(a, b)| a * b).sum()).collect()
}

fn check_dims(features: &[&[f64]], d: usize) -> Result<()> {
    if features.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::shape("feature dimension does not match the belief"));
    }
    Ok(())
}

/// Thompson sampling: propagate one step, sample `θ̂_{t+1}`, act greedily.
/// Returns the action and the propagated belief.
pub fn act_exact_ts<R: Rng + ?Sized>(
    posterior: &GaussianBelief,
    model: &LinearGaussianModel,
    features: &[&[f64]],
    rng: &mut R,
) -> Result<(usize, GaussianBelief)> {
    check_dims(features, posterior.dim())?;
    let next = predict_model(posterior, model);
    let theta = next.sample(rng);
    Ok((argmax(&linear_scores(features, &theta)), next))
}

/// Linear predictive sampling: propagate two steps, sample `θ̂_{t+2}`, score
/// each action by `φᵀ E[θ_{t+1} | H_t, θ_{t+2} = θ̂_{t+2}]`.
pub fn act_exact_linps<R: Rng + ?Sized>(
    posterior: &GaussianBelief,
    model: &LinearGaussianModel,
    features: &[&[f64]],
    rng: &mut R,
) -> Result<(usize, GaussianBelief)> {
    check_dims(features, posterior.dim())?;
    let next = predict_model(posterior, model);
    let two = predict_model(&next, model);
    let x = two.sample(rng);
    let cond = linps_conditional_mean(&next, model, &two, &x);
    Ok((argmax(&linear_scores(features, &cond)), next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(gamma: Vec<f64>) -> LinearGaussianModel {
        let d = gamma.len();
        LinearGaussianModel { gamma, stationary_var: vec![1.0; d], noise_sd: 0.1, prior_var: vec![1.0; d], exact: true }
    }

    #[test]
    fn standard_normal_is_fixed_point() {
        let b = GaussianBelief::isotropic(3, 1.0);
        for g in [[0.0, 0.5, 1.0], [0.3, 0.3, 0.3]] {
            let p = kalman_predict(&b, &g);
            assert!((p.cov.clone() - DMatrix::identity(3, 3)).amax() < 1e-15);
            assert!(p.mean.amax() == 0.0);
        }
    }

    #[test]
    fn zero_and_unit_gamma() {
        let b = GaussianBelief::new(DVector::from_vec(vec![1.0, -2.0]), DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2])).unwrap();
        let reset = kalman_predict(&b, &[0.0, 0.0]);
        assert_eq!(reset, GaussianBelief::isotropic(2, 1.0));
        assert_eq!(kalman_predict(&b, &[1.0, 1.0]), b);
    }

    #[test]
    fn update_closed_form() {
        let b = GaussianBelief::isotropic(1, 1.0);
        let post = kalman_update(&b, &[1.0], 1.0, 1.0);
        assert!((post.mean[0] - 0.5).abs() < 1e-15);
        assert!((post.cov[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(kalman_update(&b, &[0.0], 3.0, 0.1), b);
        let b2 = GaussianBelief::new(DVector::from_vec(vec![0.2, 0.1]), DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0])).unwrap();
        let far = kalman_update(&b2, &[0.6, 0.8], 5.0, 1e9);
        assert!((far.mean.clone() - b2.mean.clone()).amax() < 1e-9);
        assert!((far.cov.clone() - b2.cov.clone()).amax() < 1e-9);
    }

    #[test]
    fn psd_cholesky_handles_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_cholesky(&a);
        assert!((&l * l.transpose() - a).amax() < 1e-12);
        let z = psd_cholesky(&DMatrix::zeros(3, 3));
        assert_eq!(z, DMatrix::zeros(3, 3));
    }

    #[test]
    fn two_step_worked_case() {
        let m = model(vec![0.8]);
        let post = GaussianBelief::diagonal(&[1.0], &[0.25]);
        let next = predict_model(&post, &m);
        assert!((next.mean[0] - 0.8).abs() < 1e-15);
        assert!((next.cov[(0, 0)] - 0.52).abs() < 1e-15);
        let two = predict_model(&next, &m);
        assert!((two.mean[0] - 0.64).abs() < 1e-15);
        assert!((two.cov[(0, 0)] - 0.6928).abs() < 1e-14);
        let x = DVector::from_vec(vec![1.5]);
        let c = linps_conditional_mean(&next, &m, &two, &x);
        let expected = 0.8 + 0.52 * 0.8 / 0.6928 * (1.5 - 0.64);
        assert!((c[0] - expected).abs() < 1e-12);
    }
}

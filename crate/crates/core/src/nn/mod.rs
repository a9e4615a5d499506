//! Minimal deterministic neural-network kernel.
//!
//! Everything is plain `f64` arithmetic on row-major buffers. Gradients are
//! values of the same type as the weights they differentiate, so they share
//! the shape tree and can be fed straight to [`sgd_step`].

mod dense;
mod gradcheck;
mod gru;
mod loss;
mod mlp;

pub use dense::{glorot_uniform, Dense};
pub use gradcheck::{grad_check, run_grad_check_suite, GradCheckReport, GradCheckSuite};
pub use gru::{gru_backward, gru_forward, GruWeights};
pub use loss::{sigmoid, LossKind};
pub use mlp::{mlp_backward, mlp_forward, MlpWeights, MlpWorkspace};

use crate::{Error, Result};

/// Flat views over every trainable buffer of a weight object.
///
/// Two objects of the same architecture return slices of equal lengths in the
/// same order; that ordering is what "shape-congruent" means here.
pub trait Params {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    /// Read parameter `idx` in flattened order.
    fn get_param(&self, mut idx: usize) -> f64 {
        for s in self.param_slices() {
            if idx < s.len() {
                return s[idx];
            }
            idx -= s.len();
        }
        panic!("parameter index out of range");
    }

    fn set_param(&mut self, mut idx: usize, value: f64) {
        for s in self.param_slices_mut() {
            if idx < s.len() {
                s[idx] = value;
                return;
            }
            idx -= s.len();
        }
        panic!("parameter index out of range");
    }
}

pub(crate) fn check_congruent<P: Params>(a: &P, b: &P) -> Result<()> {
    let sa = a.param_slices();
    let sb = b.param_slices();
    if sa.len() != sb.len() || sa.iter().zip(&sb).any(|(x, y)| x.len() != y.len()) {
        return Err(Error::shape("parameter trees are not congruent"));
    }
    Ok(())
}

/// `w - step_size * grad`, elementwise.
pub fn sgd_step<P: Params + Clone>(weights: &P, grad: &P, step_size: f64) -> Result<P> {
    let mut next = weights.clone();
    sgd_step_in_place(&mut next, grad, step_size)?;
    Ok(next)
}

pub fn sgd_step_in_place<P: Params>(weights: &mut P, grad: &P, step_size: f64) -> Result<()> {
    check_congruent(weights, grad)?;
    let g = grad.param_slices();
    for (w, g) in weights.param_slices_mut().into_iter().zip(g) {
        for (wi, gi) in w.iter_mut().zip(g) {
            *wi -= step_size * gi;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn net() -> MlpWeights {
        MlpWeights::random(&[3, 4, 2], &mut rng_from_seed(11))
    }

    #[test]
    fn zero_grad_is_identity() {
        let w = net();
        let g = w.zeros_like();
        assert_eq!(sgd_step(&w, &g, 0.3).unwrap(), w);
    }

    #[test]
    fn unit_step_on_self_zeroes() {
        let w = net();
        let out = sgd_step(&w, &w, 1.0).unwrap();
        assert!(out.flatten().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_step_size_is_identity() {
        let w = net();
        let g = MlpWeights::random(&[3, 4, 2], &mut rng_from_seed(12));
        assert_eq!(sgd_step(&w, &g, 0.0).unwrap(), w);
    }

    #[test]
    fn sequential_steps_are_linear() {
        let w = net();
        let g1 = MlpWeights::random(&[3, 4, 2], &mut rng_from_seed(1));
        let g2 = MlpWeights::random(&[3, 4, 2], &mut rng_from_seed(2));
        let two = sgd_step(&sgd_step(&w, &g1, 0.1).unwrap(), &g2, 0.1).unwrap();
        let mut sum = g1.clone();
        for (s, b) in sum.param_slices_mut().into_iter().zip(g2.param_slices()) {
            for (x, y) in s.iter_mut().zip(b) {
                *x += y;
            }
        }
        let one = sgd_step(&w, &sum, 0.1).unwrap();
        for (a, b) in two.flatten().iter().zip(one.flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let w = net();
        let g = MlpWeights::random(&[3, 5, 2], &mut rng_from_seed(3));
        assert!(matches!(sgd_step(&w, &g, 0.1), Err(Error::Shape(_))));
    }
}

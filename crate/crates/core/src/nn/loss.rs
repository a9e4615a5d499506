use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared error over output coordinates.
    Mse,
    /// Log-loss of a sigmoid applied to a scalar logit; targets in `{0, 1}`.
    BernoulliLogLoss,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl LossKind {
    pub fn validate_target(self, target: &[f64]) -> Result<()> {
        if self == LossKind::BernoulliLogLoss {
            if let Some(&t) = target.iter().find(|&&t| t != 0.0 && t != 1.0) {
                return Err(Error::InvalidTarget(t));
            }
        }
        Ok(())
    }

    /// Loss value, writing `dL/dy` into `dy`.
    #[inline]
    pub fn value_and_grad(self, y: &[f64], target: &[f64], dy: &mut [f64]) -> f64 {
        match self {
            LossKind::Mse => {
                let n = y.len() as f64;
                let mut loss = 0.0;
                for ((g, yi), ti) in dy.iter_mut().zip(y).zip(target) {
                    let r = yi - ti;
                    loss += r * r;
                    *g = 2.0 * r / n;
                }
                loss / n
            }
            LossKind::BernoulliLogLoss => {
                let mut loss = 0.0;
                for ((g, &yi), &ti) in dy.iter_mut().zip(y).zip(target) {
                    loss += softplus(yi) - ti * yi;
                    *g = sigmoid(yi) - ti;
                }
                loss
            }
        }
    }

    /// Map raw network output to a reward prediction.
    #[inline]
    pub fn predict(self, raw: f64) -> f64 {
        match self {
            LossKind::Mse => raw,
            LossKind::BernoulliLogLoss => sigmoid(raw),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_loss_is_nonnegative_and_probability_in_unit_interval() {
        let mut dy = [0.0];
        for &y in &[-40.0, -3.0, -0.1, 0.0, 0.2, 5.0, 40.0] {
            for &t in &[0.0, 1.0] {
                let l = LossKind::BernoulliLogLoss.value_and_grad(&[y], &[t], &mut dy);
                assert!(l >= 0.0, "loss {l} at y={y}, t={t}");
                let p = sigmoid(y);
                assert!((0.0..=1.0).contains(&p));
            }
        }
        assert!(sigmoid(3.0) > 0.0 && sigmoid(3.0) < 1.0);
    }

    #[test]
    fn log_loss_rejects_fractional_target() {
        assert!(matches!(
            LossKind::BernoulliLogLoss.validate_target(&[0.3]),
            Err(Error::InvalidTarget(_))
        ));
        assert!(LossKind::Mse.validate_target(&[0.3]).is_ok());
    }

    #[test]
    fn mse_quadruples_when_residual_doubles() {
        let mut dy = [0.0; 2];
        let a = LossKind::Mse.value_and_grad(&[1.0, 2.0], &[0.5, 1.0], &mut dy);
        let b = LossKind::Mse.value_and_grad(&[1.0, 2.0], &[0.0, 0.0], &mut dy);
        assert!((b - 4.0 * a).abs() < 1e-12);
    }
}

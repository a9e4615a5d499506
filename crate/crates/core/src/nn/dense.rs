use rand::Rng;
use serde::{Deserialize, Serialize};

/// Affine layer `y = W x + b` with `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Glorot-uniform entries in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, n: usize, rng: &mut R) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense { in_dim, out_dim, weight: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] }
    }

    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Dense {
            in_dim,
            out_dim,
            weight: glorot_uniform(in_dim, out_dim, in_dim * out_dim, rng),
            bias: vec![0.0; out_dim],
        }
    }

    #[inline]
    pub fn row(&self, o: usize) -> &[f64] {
        &self.weight[o * self.in_dim..(o + 1) * self.in_dim]
    }

    /// `out = W x + b`.
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        for (o, y) in out.iter_mut().enumerate().take(self.out_dim) {
            *y = self.bias[o] + dot(self.row(o), x);
        }
    }

    /// `out += W x` (no bias).
    #[inline]
    pub fn apply_add_nobias(&self, x: &[f64], out: &mut [f64]) {
        for (o, y) in out.iter_mut().enumerate().take(self.out_dim) {
            *y += dot(self.row(o), x);
        }
    }

    /// Accumulate `dW += dy xᵀ`, `db += dy`, and `dx += Wᵀ dy` when requested.
    #[inline]
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let gw = &mut grad.weight[o * self.in_dim..(o + 1) * self.in_dim];
            for (gwi, xi) in gw.iter_mut().zip(x) {
                *gwi += g * xi;
            }
        }
        if let Some(dx) = dx {
            for (o, &g) in dy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for (dxi, wi) in dx.iter_mut().zip(self.row(o)) {
                    *dxi += g * wi;
                }
            }
        }
    }

    /// Backward for [`Dense::apply_add_nobias`]: the bias gradient is untouched.
    #[inline]
    pub fn backward_nobias(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for (o, &g) in dy.iter().enumerate() {
            let gw = &mut grad.weight[o * self.in_dim..(o + 1) * self.in_dim];
            for (gwi, xi) in gw.iter_mut().zip(x) {
                *gwi += g * xi;
            }
        }
        if let Some(dx) = dx {
            for (o, &g) in dy.iter().enumerate() {
                for (dxi, wi) in dx.iter_mut().zip(self.row(o)) {
                    *dxi += g * wi;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weight.iter().chain(&self.bias).all(|x| x.is_finite())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

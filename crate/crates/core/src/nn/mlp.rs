use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{dot, Dense};
use super::{check_congruent, LossKind, Params};
use crate::{Error, Result};

/// Dense network with ReLU on every hidden layer and a linear output layer.
///
/// The final layer doubles as the "last layer" of a reward model: everything
/// before it is the base network, and its input is the base feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub layers: Vec<Dense>,
}

/// Scratch buffers for allocation-free forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct MlpWorkspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    out_grad: Vec<f64>,
}

impl MlpWeights {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("an MLP needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::shape(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        for l in &layers {
            if l.weight.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::shape("layer buffers do not match declared dims"));
            }
            if !l.is_finite() {
                return Err(Error::param("non-finite weight"));
            }
        }
        Ok(MlpWeights { layers })
    }

    /// Glorot-initialised network with the given layer widths, input first.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes.windows(2).map(|w| Dense::random(w[0], w[1], rng)).collect();
        MlpWeights { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        MlpWeights { layers }
    }

    pub fn zeros_like(&self) -> Self {
        MlpWeights { layers: self.layers.iter().map(|l| Dense::zeros(l.in_dim, l.out_dim)).collect() }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn last_layer(&self) -> &Dense {
        self.layers.last().unwrap()
    }

    pub fn last_layer_mut(&mut self) -> &mut Dense {
        self.layers.last_mut().unwrap()
    }

    /// Width of the base feature vector entering the last layer.
    pub fn feature_dim(&self) -> usize {
        self.last_layer().in_dim
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::shape(format!("input length {} != {}", x.len(), self.in_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut ws = MlpWorkspace::default();
        Ok(self.forward_ws(x, &mut ws).to_vec())
    }

    /// Forward pass keeping every activation in `ws`. Returns the raw output.
    pub fn forward_ws<'a>(&self, x: &[f64], ws: &'a mut MlpWorkspace) -> &'a [f64] {
        let n = self.layers.len();
        let fits = ws.acts.len() == n + 1
            && ws.acts[0].len() == x.len()
            && self.layers.iter().zip(&ws.acts[1..]).all(|(l, a)| a.len() == l.out_dim);
        if !fits {
            ws.acts = std::iter::once(x.len())
                .chain(self.layers.iter().map(|l| l.out_dim))
                .map(|d| vec![0.0; d])
                .collect();
            ws.deltas = self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        }
        ws.acts[0].copy_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(k + 1);
            let out = &mut tail[0];
            layer.apply(&head[k], out);
            if k + 1 < n {
                for v in out.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        &ws.acts[n]
    }

    /// Base features `b(ψ; x)`: the activation entering the last layer.
    pub fn features(&self, x: &[f64], ws: &mut MlpWorkspace) -> Vec<f64> {
        self.forward_ws(x, ws);
        ws.acts[self.layers.len() - 1].clone()
    }

    /// Backpropagate `loss(output, target)` for one sample, accumulating into
    /// `grad`. Returns the loss value. Requires a preceding validation of shapes.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        target: &[f64],
        loss: LossKind,
        ws: &mut MlpWorkspace,
        grad: &mut MlpWeights,
    ) -> f64 {
        self.forward_ws(x, ws);
        let n = self.layers.len();
        ws.out_grad.resize(self.out_dim(), 0.0);
        let value = loss.value_and_grad(&ws.acts[n], target, &mut ws.out_grad);
        ws.deltas[n - 1].copy_from_slice(&ws.out_grad);
        for k in (0..n).rev() {
            let (lower, upper) = ws.deltas.split_at_mut(k);
            let dy = &upper[0];
            if k == 0 {
                self.layers[0].backward(&ws.acts[0], dy, &mut grad.layers[0], None);
            } else {
                let dx = &mut lower[k - 1];
                dx.iter_mut().for_each(|v| *v = 0.0);
                self.layers[k].backward(&ws.acts[k], dy, &mut grad.layers[k], Some(dx));
                // ReLU: pass gradient only where the activation was positive.
                for (d, a) in dx.iter_mut().zip(&ws.acts[k]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        value
    }

    /// `coeff · ‖w_last − anchor_last‖₂` and its (sub)gradient, scaled by
    /// `times` and accumulated into `grad`'s last layer.
    pub fn accumulate_anchor_penalty(
        &self,
        anchor: &MlpWeights,
        coeff: f64,
        times: f64,
        grad: &mut MlpWeights,
    ) -> f64 {
        if coeff == 0.0 {
            return 0.0;
        }
        let w = self.last_layer();
        let a = anchor.last_layer();
        let diff: Vec<f64> = w.weight.iter().chain(&w.bias).zip(a.weight.iter().chain(&a.bias)).map(|(x, y)| x - y).collect();
        let norm = dot(&diff, &diff).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let scale = coeff * times / norm;
        let g = grad.last_layer_mut();
        let nw = g.weight.len();
        for (i, d) in diff.iter().enumerate() {
            if i < nw {
                g.weight[i] += scale * d;
            } else {
                g.bias[i - nw] += scale * d;
            }
        }
        coeff * times * norm
    }
}

impl Params for MlpWeights {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()]).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

pub fn mlp_forward(weights: &MlpWeights, input: &[f64]) -> Result<Vec<f64>> {
    weights.forward(input)
}

/// Loss and gradient for one sample, with the optional last-layer anchor
/// penalty `reg_coeff · ‖w − w_anchor‖₂`.
pub fn mlp_backward(
    weights: &MlpWeights,
    input: &[f64],
    target: &[f64],
    loss: LossKind,
    anchor: Option<&MlpWeights>,
    reg_coeff: f64,
) -> Result<(f64, MlpWeights)> {
    weights.check_input(input)?;
    if target.len() != weights.out_dim() {
        return Err(Error::shape(format!("target length {} != {}", target.len(), weights.out_dim())));
    }
    if loss == LossKind::BernoulliLogLoss && weights.out_dim() != 1 {
        return Err(Error::shape("Bernoulli log-loss needs a scalar output"));
    }
    loss.validate_target(target)?;
    if reg_coeff < 0.0 {
        return Err(Error::param("reg_coeff must be non-negative"));
    }
    let mut grad = weights.zeros_like();
    let mut ws = MlpWorkspace::default();
    let mut value = weights.accumulate_grad(input, target, loss, &mut ws, &mut grad);
    if let Some(anchor) = anchor {
        check_congruent(weights, anchor)?;
        value += weights.accumulate_anchor_penalty(anchor, reg_coeff, 1.0, &mut grad);
    }
    Ok((value, grad))
}

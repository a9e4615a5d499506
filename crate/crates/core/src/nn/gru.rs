use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{dot, glorot_uniform, Dense};
use super::loss::sigmoid;
use super::{LossKind, Params};
use crate::{Error, Result};

/// Single-layer GRU with a linear readout of the final hidden state.
///
/// Per step, from `h` and input `x`:
///
/// ```text
/// z  = σ(W_z x + b_z + U_z h)
/// r  = σ(W_r x + b_r + U_r h)
/// n  = tanh(W_n x + b_n + U_n (r ⊙ h))
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
///
/// The hidden state starts at zero and the output is `V h_L + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruWeights {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_z: Dense,
    pub w_r: Dense,
    pub w_n: Dense,
    /// Recurrent matrices, `hidden × hidden` row-major.
    pub u_z: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u_n: Vec<f64>,
    pub readout: Dense,
}

struct StepCache {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

impl GruWeights {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        let hh = hidden_dim * hidden_dim;
        GruWeights {
            input_dim,
            hidden_dim,
            w_z: Dense::zeros(input_dim, hidden_dim),
            w_r: Dense::zeros(input_dim, hidden_dim),
            w_n: Dense::zeros(input_dim, hidden_dim),
            u_z: vec![0.0; hh],
            u_r: vec![0.0; hh],
            u_n: vec![0.0; hh],
            readout: Dense::zeros(hidden_dim, output_dim),
        }
    }

    pub fn random<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        let hh = hidden_dim * hidden_dim;
        GruWeights {
            input_dim,
            hidden_dim,
            w_z: Dense::random(input_dim, hidden_dim, rng),
            w_r: Dense::random(input_dim, hidden_dim, rng),
            w_n: Dense::random(input_dim, hidden_dim, rng),
            u_z: glorot_uniform(hidden_dim, hidden_dim, hh, rng),
            u_r: glorot_uniform(hidden_dim, hidden_dim, hh, rng),
            u_n: glorot_uniform(hidden_dim, hidden_dim, hh, rng),
            readout: Dense::random(hidden_dim, output_dim, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.readout.out_dim
    }

    pub fn zeros_like(&self) -> Self {
        GruWeights::zeros(self.input_dim, self.hidden_dim, self.output_dim())
    }

    fn validate<S: AsRef<[f64]>>(&self, sequence: &[S]) -> Result<()> {
        if sequence.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(x) = sequence.iter().find(|x| x.as_ref().len() != self.input_dim) {
            return Err(Error::shape(format!(
                "sequence element length {} != {}",
                x.as_ref().len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// One recurrent step from `h`. Returns the cache needed by backprop.
    fn step(&self, x: &[f64], h: &[f64]) -> StepCache {
        let hd = self.hidden_dim;
        let mut z = vec![0.0; hd];
        let mut r = vec![0.0; hd];
        let mut n = vec![0.0; hd];
        self.w_z.apply(x, &mut z);
        self.w_r.apply(x, &mut r);
        self.w_n.apply(x, &mut n);
        for i in 0..hd {
            z[i] = sigmoid(z[i] + dot(&self.u_z[i * hd..(i + 1) * hd], h));
            r[i] = sigmoid(r[i] + dot(&self.u_r[i * hd..(i + 1) * hd], h));
        }
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        for i in 0..hd {
            n[i] = (n[i] + dot(&self.u_n[i * hd..(i + 1) * hd], &rh)).tanh();
        }
        StepCache { h_prev: h.to_vec(), z, r, n, rh }
    }

    fn next_hidden(c: &StepCache) -> Vec<f64> {
        (0..c.z.len()).map(|i| (1.0 - c.z[i]) * c.n[i] + c.z[i] * c.h_prev[i]).collect()
    }

    /// Final hidden state after consuming `sequence` from a zero state.
    pub fn final_hidden<S: AsRef<[f64]>>(&self, sequence: &[S]) -> Result<Vec<f64>> {
        self.validate(sequence)?;
        let mut h = vec![0.0; self.hidden_dim];
        for x in sequence {
            h = Self::next_hidden(&self.step(x.as_ref(), &h));
        }
        Ok(h)
    }

    pub fn forward<S: AsRef<[f64]>>(&self, sequence: &[S]) -> Result<Vec<f64>> {
        let h = self.final_hidden(sequence)?;
        let mut out = vec![0.0; self.output_dim()];
        self.readout.apply(&h, &mut out);
        Ok(out)
    }

    /// Backprop-through-time of the MSE between readout and `target`,
    /// accumulated into `grad`.
    ///
    /// `output_offset` is added to the readout before the loss; the sequence
    /// model uses it for its residual parameterisation.
    pub fn accumulate_grad<S: AsRef<[f64]>>(
        &self,
        sequence: &[S],
        output_offset: Option<&[f64]>,
        target: &[f64],
        grad: &mut GruWeights,
    ) -> Result<f64> {
        self.validate(sequence)?;
        if target.len() != self.output_dim() {
            return Err(Error::shape(format!("target length {} != {}", target.len(), self.output_dim())));
        }
        let hd = self.hidden_dim;
        let mut caches = Vec::with_capacity(sequence.len());
        let mut h = vec![0.0; hd];
        for x in sequence {
            let c = self.step(x.as_ref(), &h);
            h = Self::next_hidden(&c);
            caches.push(c);
        }
        let mut y = vec![0.0; self.output_dim()];
        self.readout.apply(&h, &mut y);
        if let Some(off) = output_offset {
            for (yi, o) in y.iter_mut().zip(off) {
                *yi += o;
            }
        }
        let mut dy = vec![0.0; y.len()];
        let loss = LossKind::Mse.value_and_grad(&y, target, &mut dy);

        let mut dh = vec![0.0; hd];
        self.readout.backward(&h, &dy, &mut grad.readout, Some(&mut dh));

        for (x, c) in sequence.iter().zip(caches.iter()).rev() {
            let x = x.as_ref();
            let mut dh_prev: Vec<f64> = dh.iter().zip(&c.z).map(|(d, z)| d * z).collect();
            let dn_pre: Vec<f64> = (0..hd).map(|i| dh[i] * (1.0 - c.z[i]) * (1.0 - c.n[i] * c.n[i])).collect();
            let dz_pre: Vec<f64> =
                (0..hd).map(|i| dh[i] * (c.h_prev[i] - c.n[i]) * c.z[i] * (1.0 - c.z[i])).collect();

            // candidate gate
            self.w_n.backward(x, &dn_pre, &mut grad.w_n, None);
            let mut d_rh = vec![0.0; hd];
            for i in 0..hd {
                let g = dn_pre[i];
                let row = i * hd..(i + 1) * hd;
                for (gu, v) in grad.u_n[row.clone()].iter_mut().zip(&c.rh) {
                    *gu += g * v;
                }
                for (d, u) in d_rh.iter_mut().zip(&self.u_n[row]) {
                    *d += g * u;
                }
            }
            let dr_pre: Vec<f64> =
                (0..hd).map(|i| d_rh[i] * c.h_prev[i] * c.r[i] * (1.0 - c.r[i])).collect();
            for i in 0..hd {
                dh_prev[i] += d_rh[i] * c.r[i];
            }

            // update and reset gates
            self.w_z.backward(x, &dz_pre, &mut grad.w_z, None);
            self.w_r.backward(x, &dr_pre, &mut grad.w_r, None);
            for i in 0..hd {
                let row = i * hd..(i + 1) * hd;
                let (gz, gr) = (dz_pre[i], dr_pre[i]);
                for j in 0..hd {
                    grad.u_z[row.start + j] += gz * c.h_prev[j];
                    grad.u_r[row.start + j] += gr * c.h_prev[j];
                    dh_prev[j] += gz * self.u_z[row.start + j] + gr * self.u_r[row.start + j];
                }
            }
            dh = dh_prev;
        }
        Ok(loss)
    }
}

impl Params for GruWeights {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            &self.w_z.weight,
            &self.w_z.bias,
            &self.w_r.weight,
            &self.w_r.bias,
            &self.w_n.weight,
            &self.w_n.bias,
            &self.u_z,
            &self.u_r,
            &self.u_n,
            &self.readout.weight,
            &self.readout.bias,
        ]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w_z.weight,
            &mut self.w_z.bias,
            &mut self.w_r.weight,
            &mut self.w_r.bias,
            &mut self.w_n.weight,
            &mut self.w_n.bias,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_n,
            &mut self.readout.weight,
            &mut self.readout.bias,
        ]
    }
}

pub fn gru_forward<S: AsRef<[f64]>>(weights: &GruWeights, sequence: &[S]) -> Result<Vec<f64>> {
    weights.forward(sequence)
}

/// MSE between the readout and `target`, with its BPTT gradient.
pub fn gru_backward<S: AsRef<[f64]>>(
    weights: &GruWeights,
    sequence: &[S],
    target: &[f64],
) -> Result<(f64, GruWeights)> {
    let mut grad = weights.zeros_like();
    let loss = weights.accumulate_grad(sequence, None, target, &mut grad)?;
    Ok((loss, grad))
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Finite table `φ(c, a) ∈ ℝ^d` over context ids and action ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    d: usize,
    num_contexts: usize,
    num_actions: usize,
    table: Vec<f64>,
}

impl FeatureMap {
    /// i.i.d. standard normal d-vectors per pair, normalised to unit length.
    pub fn random<R: Rng + ?Sized>(num_contexts: usize, num_actions: usize, d: usize, rng: &mut R) -> Self {
        let mut table = Vec::with_capacity(num_contexts * num_actions * d);
        for _ in 0..num_contexts * num_actions {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
            table.extend(v);
        }
        FeatureMap { d, num_contexts, num_actions, table }
    }

    /// Build from explicit rows `rows[c][a]`; rows longer than 1 are rescaled
    /// to unit norm.
    pub fn from_rows(rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let num_contexts = rows.len();
        let num_actions = rows.first().map_or(0, |r| r.len());
        let d = rows.first().and_then(|r| r.first()).map_or(0, |v| v.len());
        if num_contexts == 0 || num_actions == 0 || d == 0 {
            return Err(Error::param("feature table must be non-empty"));
        }
        let mut table = Vec::with_capacity(num_contexts * num_actions * d);
        for ctx in &rows {
            if ctx.len() != num_actions {
                return Err(Error::shape("every context needs the same number of actions"));
            }
            for v in ctx {
                if v.len() != d {
                    return Err(Error::shape("feature vectors must share one dimension"));
                }
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let s = if n > 1.0 { 1.0 / n } else { 1.0 };
                table.extend(v.iter().map(|x| x * s));
            }
        }
        Ok(FeatureMap { d, num_contexts, num_actions, table })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_contexts(&self) -> usize {
        self.num_contexts
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, context: usize, action: usize) -> Result<&[f64]> {
        if context >= self.num_contexts || action >= self.num_actions {
            return Err(Error::UnknownPair { context, action });
        }
        Ok(self.row(context, action))
    }

    #[inline]
    pub(crate) fn row(&self, context: usize, action: usize) -> &[f64] {
        let start = (context * self.num_actions + action) * self.d;
        &self.table[start..start + self.d]
    }
}

use rand::Rng;
use serde::Serialize;

use super::{GruWeights, LossKind, MlpWeights, Params};
use crate::rng::rng_from_seed;

const FD_STEP: f64 = 1e-5;
const EXEMPT_BELOW: f64 = 1e-8;

#[derive(Debug, Clone, Default, Serialize)]
pub struct GradCheckReport {
    pub cases: usize,
    pub entries_checked: usize,
    pub entries_exempt: usize,
    pub max_rel_error: f64,
    /// `(case, parameter index, analytic, numeric)` for entries over tolerance.
    pub failures: Vec<(usize, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, case: usize, other: GradCheckReport) {
        self.cases += 1;
        self.entries_checked += other.entries_checked;
        self.entries_exempt += other.entries_exempt;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.failures.extend(other.failures.into_iter().map(|(_, i, a, n)| (case, i, a, n)));
    }
}

/// Compare `analytic` against central differences of `objective`.
///
/// Relative error is `|a − n| / max(|a|, |n|)`; entries where `|a| + |n|`
/// is below 1e-8 are exempt.
pub fn grad_check<P, F>(weights: &P, analytic: &P, objective: F, tolerance: f64) -> GradCheckReport
where
    P: Params + Clone,
    F: Fn(&P) -> f64,
{
    let mut report = GradCheckReport { cases: 1, ..Default::default() };
    let mut probe = weights.clone();
    for idx in 0..weights.num_params() {
        let orig = weights.get_param(idx);
        probe.set_param(idx, orig + FD_STEP);
        let up = objective(&probe);
        probe.set_param(idx, orig - FD_STEP);
        let down = objective(&probe);
        probe.set_param(idx, orig);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic.get_param(idx);
        if a.abs() + numeric.abs() < EXEMPT_BELOW {
            report.entries_exempt += 1;
            continue;
        }
        report.entries_checked += 1;
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
        report.max_rel_error = report.max_rel_error.max(rel);
        if !(rel < tolerance) {
            report.failures.push((0, idx, a, numeric));
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckSuite {
    pub tolerance: f64,
    pub mlp: GradCheckReport,
    pub gru: GradCheckReport,
}

impl GradCheckSuite {
    pub fn passed(&self) -> bool {
        self.mlp.passed() && self.gru.passed()
    }
}

/// Smallest |pre-activation| over the hidden layers: finite differences are
/// meaningless within `FD_STEP`-ish distance of a ReLU kink.
fn min_hidden_preactivation(w: &MlpWeights, x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut min = f64::INFINITY;
    for layer in &w.layers[..w.layers.len() - 1] {
        let mut z = vec![0.0; layer.out_dim];
        layer.apply(&a, &mut z);
        min = z.iter().fold(min, |m, v| m.min(v.abs()));
        a = z.into_iter().map(|v| v.max(0.0)).collect();
    }
    min
}

fn random_vec<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn mlp_case<R: Rng>(rng: &mut R) -> (MlpWeights, Vec<f64>, Vec<f64>, LossKind, MlpWeights, f64) {
    loop {
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(1..=5)];
        for _ in 0..depth {
            sizes.push(rng.random_range(2..=6));
        }
        let loss = if rng.random_bool(0.5) { LossKind::Mse } else { LossKind::BernoulliLogLoss };
        let out = if loss == LossKind::Mse { rng.random_range(1..=3) } else { 1 };
        sizes.push(out);
        let mut w = MlpWeights::random(&sizes, rng);
        for l in &mut w.layers {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        let x = random_vec(sizes[0], rng);
        if min_hidden_preactivation(&w, &x) < 1e-3 {
            continue;
        }
        let target = match loss {
            LossKind::Mse => random_vec(out, rng),
            LossKind::BernoulliLogLoss => vec![if rng.random_bool(0.5) { 1.0 } else { 0.0 }],
        };
        let anchor = MlpWeights::random(&sizes, rng);
        let reg = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
        return (w, x, target, loss, anchor, reg);
    }
}

/// Seeded analytic-vs-numeric comparison over `cases` random MLP and GRU
/// configurations.
pub fn run_grad_check_suite(cases: usize, seed: u64, tolerance: f64) -> GradCheckSuite {
    let mut rng = rng_from_seed(seed);
    let mut mlp = GradCheckReport::default();
    for case in 0..cases {
        let (w, x, t, loss, anchor, reg) = mlp_case(&mut rng);
        let (_, g) = super::mlp_backward(&w, &x, &t, loss, Some(&anchor), reg).expect("valid case");
        let objective = |p: &MlpWeights| super::mlp_backward(p, &x, &t, loss, Some(&anchor), reg).unwrap().0;
        mlp.merge(case, grad_check(&w, &g, objective, tolerance));
    }

    let mut gru = GradCheckReport::default();
    for case in 0..cases {
        let input = rng.random_range(1..=4);
        let hidden = rng.random_range(1..=5);
        let out = rng.random_range(1..=3);
        let len = rng.random_range(1..=6);
        let mut w = GruWeights::random(input, hidden, out, &mut rng);
        for b in [&mut w.w_z.bias, &mut w.w_r.bias, &mut w.w_n.bias, &mut w.readout.bias] {
            b.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
        let seq: Vec<Vec<f64>> = (0..len).map(|_| random_vec(input, &mut rng)).collect();
        let t = random_vec(out, &mut rng);
        let (_, g) = super::gru_backward(&w, &seq, &t).expect("valid case");
        let objective = |p: &GruWeights| super::gru_backward(p, &seq, &t).unwrap().0;
        gru.merge(case, grad_check(&w, &g, objective, tolerance));
    }
    GradCheckSuite { tolerance, mlp, gru }
}

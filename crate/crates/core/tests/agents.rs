use nalgebra::{DMatrix, DVector};
use pes_core::agents::{
    act_exact_linps, act_exact_ts, argmax, build_agent, eligible_prefix, predictive_input, rollout_future_weights,
    run_agent_episode, sliding_window_variant, train_predictive_nn, train_reward_nn, train_sequence_nn, Agent,
    AgentConfig, AgentKind, GaussianBelief, NeuralAgent, NeuralParticle, NeuralVariant, Observation,
    PredictiveParticle, RandomAgent, ReplayBuffer, RewardParticle, RolloutMode, SequenceParticle, Transition,
};
use pes_core::env::{BanditInstance, LinearGaussianModel, ProcessSpec, RewardKind, SyntheticSpec};
use pes_core::nn::{sgd_step_in_place, Dense, GruWeights, LossKind, MlpWeights, MlpWorkspace, Params};
use pes_core::rng::{rng_from_seed, stream};
use pes_core::ExecMode;
use proptest::prelude::*;

fn small_config() -> AgentConfig {
    AgentConfig {
        ensemble_size: 3,
        buffer_capacity: 100,
        minibatch: 4,
        pred_minibatch: 4,
        lookback: 2,
        reward_steps: 5,
        seq_steps: 5,
        pred_steps: 5,
        lr: 0.01,
        seq_lr: 0.01,
        pred_lr: 0.01,
        reg_coeff: 0.05,
        train_interval: 5,
        loss: LossKind::BernoulliLogLoss,
        hidden: vec![6, 4],
        gru_hidden: 5,
        pred_hidden: vec![3],
        rollout: RolloutMode::Iterated,
        residual_sequence: true,
        exec: ExecMode::Sequential,
    }
}

fn transition(features: Vec<f64>, reward: f64, t: usize, round: usize) -> Transition {
    Transition { context: 0, action: 0, reward, t, round, features }
}

fn logistic_env(seed: u64, actions: usize, gamma: f64) -> BanditInstance {
    BanditInstance::new(SyntheticSpec {
        d: 3,
        num_actions: actions,
        num_contexts: 10,
        process: ProcessSpec::Ar1 { gamma: vec![gamma; 3] },
        reward: RewardKind::LogisticBernoulli,
        theta_init_sd: 1.0,
        seed,
    })
    .unwrap()
}

fn obs(features: Vec<Vec<f64>>) -> Observation {
    Observation { t: 0, context: 0, features }
}

/// Identity base layer (ReLU is the identity on non-negative inputs)
/// followed by the given last layer.
fn linear_particle(last_w: Vec<f64>, last_b: f64, seed: u64) -> RewardParticle {
    let d = last_w.len();
    let mut base = Dense::zeros(d, d);
    for i in 0..d {
        base.weight[i * d + i] = 1.0;
    }
    let last = Dense { in_dim: d, out_dim: 1, weight: last_w, bias: vec![last_b] };
    RewardParticle::from_model(MlpWeights::new(vec![base, last]).unwrap(), stream(seed, 0))
}

// ---------------------------------------------------------------- reward model

#[test]
fn reward_training_degenerate_settings() {
    let mut buf = ReplayBuffer::new(10);
    buf.push(transition(vec![0.2, 0.4], 1.0, 0, 1));
    for cfg in [AgentConfig { reward_steps: 0, ..small_config() }, AgentConfig { lr: 0.0, ..small_config() }] {
        let mut p = RewardParticle::new(2, &cfg, 1, stream(2, 0));
        let before = p.model.clone();
        train_reward_nn(&buf, &mut p, &cfg).unwrap();
        assert_eq!(p.model, before);
        assert_eq!(p.history.len(), 1);
    }
    let cfg = small_config();
    let mut p = RewardParticle::new(2, &cfg, 1, stream(2, 0));
    let before = p.model.clone();
    train_reward_nn(&ReplayBuffer::new(3), &mut p, &cfg).unwrap();
    assert_eq!(p.model, before);
    assert_eq!(p.history, vec![pes_core::agents::flatten_last_layer(&before)]);
}

#[test]
fn reward_training_memorises_single_sample() {
    let cfg = AgentConfig { loss: LossKind::Mse, reward_steps: 500, lr: 0.01, reg_coeff: 0.0, minibatch: 8, hidden: vec![5], ..small_config() };
    let mut buf = ReplayBuffer::new(4);
    let x = vec![0.3, -0.6, 0.9];
    buf.push(transition(x.clone(), 0.7, 0, 1));
    let mut p = RewardParticle::new(3, &cfg, 9, stream(10, 0));
    train_reward_nn(&buf, &mut p, &cfg).unwrap();
    assert!((p.raw_score(&x) - 0.7).abs() < 1e-2);
}

#[test]
fn reward_training_rejects_fractional_targets_under_log_loss() {
    let cfg = small_config();
    let mut buf = ReplayBuffer::new(4);
    buf.push(transition(vec![0.3, 0.1], 0.5, 0, 1));
    let mut p = RewardParticle::new(2, &cfg, 1, stream(1, 0));
    assert!(train_reward_nn(&buf, &mut p, &cfg).is_err());
}

// ---------------------------------------------------------------- sequence model

#[test]
fn sequence_training_reduces_loss_on_constant_history() {
    let cfg = AgentConfig { residual_sequence: false, seq_steps: 200, seq_lr: 0.05, lookback: 3, ..small_config() };
    let w = vec![0.4, -0.2, 0.1, 0.3];
    let history = vec![w.clone(); 12];
    let mut seq = SequenceParticle::new(4, &cfg, 3, stream(4, 0));
    let stats = train_sequence_nn(&mut seq, &history, &cfg).unwrap();
    let head: f64 = stats.losses[..20].iter().sum::<f64>() / 20.0;
    let tail: f64 = stats.losses[180..].iter().sum::<f64>() / 20.0;
    assert!(tail < head, "{head} -> {tail}");
}

#[test]
fn sequence_training_edge_cases() {
    let cfg = AgentConfig { lookback: 3, seq_steps: 30, ..small_config() };
    let history: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64; 3]).collect();
    let mut seq = SequenceParticle::new(3, &cfg, 3, stream(4, 0));
    let stats = train_sequence_nn(&mut seq, &history, &cfg).unwrap();
    assert!(stats.sampled.iter().all(|&j| j == 3));
    let before = seq.gru.clone();
    let stats = train_sequence_nn(&mut seq, &history[..3], &cfg).unwrap();
    assert!(stats.sampled.is_empty());
    assert_eq!(seq.gru, before);
    let zero = AgentConfig { seq_steps: 0, ..cfg.clone() };
    train_sequence_nn(&mut seq, &history, &zero).unwrap();
    assert_eq!(seq.gru, before);
}

#[test]
fn rollout_rules() {
    let cfg = AgentConfig { lookback: 2, residual_sequence: false, ..small_config() };
    let seq = SequenceParticle::new(3, &cfg, 5, stream(6, 0));
    let history: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64, -0.2, 0.3]).collect();
    assert_eq!(rollout_future_weights(&seq, &history, 0, &cfg).unwrap(), history[4]);
    let one = rollout_future_weights(&seq, &history, 1, &cfg).unwrap();
    let mut shifted = history.clone();
    shifted.push(one.clone());
    let again = rollout_future_weights(&seq, &shifted, 1, &cfg).unwrap();
    assert_eq!(rollout_future_weights(&seq, &history, 2, &cfg).unwrap(), again);
    let direct = AgentConfig { rollout: RolloutMode::Direct, ..cfg.clone() };
    assert_eq!(rollout_future_weights(&seq, &history, 2, &direct).unwrap(), one);
    assert!(rollout_future_weights(&seq, &history[..1], 1, &cfg).is_err());
}

#[test]
fn rollout_fixed_point_after_training() {
    let cfg = AgentConfig { lookback: 3, residual_sequence: false, seq_steps: 3000, seq_lr: 0.05, ..small_config() };
    let w = vec![0.5, -0.3, 0.2];
    let history = vec![w.clone(); 10];
    let mut seq = SequenceParticle::new(3, &cfg, 8, stream(9, 0));
    train_sequence_nn(&mut seq, &history, &cfg).unwrap();
    for steps in [1, 2] {
        let pred = rollout_future_weights(&seq, &history, steps, &cfg).unwrap();
        let err = pred.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.05, "steps {steps}: {err}");
    }
}

// ---------------------------------------------------------------- predictive head

#[test]
fn predictive_training_edge_cases() {
    let cfg = AgentConfig { lookback: 1, ..small_config() };
    let mut reward = RewardParticle::new(2, &cfg, 1, stream(1, 0));
    reward.history = vec![vec![0.1; 5]; 3];
    let mut pred = PredictiveParticle::new(4, &cfg, 2, stream(2, 0));
    let mut buf = ReplayBuffer::new(10);
    buf.push(transition(vec![0.3, 0.2], 1.0, 0, 1));
    buf.push(transition(vec![0.1, 0.9], 0.0, 1, 2));
    assert_eq!(eligible_prefix(&buf, 3), 1);
    let before = pred.head.clone();
    let zero = AgentConfig { pred_steps: 0, ..cfg.clone() };
    assert_eq!(train_predictive_nn(&buf, &mut reward, &mut pred, &zero).unwrap(), 0);
    assert_eq!(pred.head, before);
    let mut late = ReplayBuffer::new(10);
    late.push(transition(vec![0.3, 0.2], 1.0, 0, 2));
    assert_eq!(train_predictive_nn(&late, &mut reward, &mut pred, &cfg).unwrap(), 0);
    assert_eq!(pred.head, before);
    assert_eq!(train_predictive_nn(&buf, &mut reward, &mut pred, &cfg).unwrap(), 5);
    assert_ne!(pred.head, before);
    assert_eq!(pred.trained_rounds, 1);
}

#[test]
fn all_ones_future_weights_reduce_to_plain_regression() {
    let cfg = AgentConfig { lookback: 1, reg_coeff: 0.1, ..small_config() };
    let width = cfg.feature_width();
    let mut reward = RewardParticle::new(2, &cfg, 3, stream(3, 0));
    reward.history = vec![vec![1.0; width + 1]; 4];
    let mut buf = ReplayBuffer::new(10);
    for (i, (x, r)) in [([0.3, 0.2], 1.0), ([0.9, -0.4], 0.0), ([-0.2, 0.5], 1.0)].into_iter().enumerate() {
        buf.push(transition(x.to_vec(), r, i, 1));
    }
    let mut pred = PredictiveParticle::new(width, &cfg, 4, stream(5, 0));
    let mut head = pred.head.clone();
    let anchor = head.clone();
    let mut rng = stream(5, 0);
    train_predictive_nn(&buf, &mut reward, &mut pred, &cfg).unwrap();

    let mut ws = MlpWorkspace::default();
    let mut grad = head.zeros_like();
    for _ in 0..cfg.pred_steps {
        grad.param_slices_mut().into_iter().for_each(|s| s.fill(0.0));
        let idx = ReplayBuffer::sample_indices(&mut rng, 3, 3);
        for i in idx {
            let tr = buf.get(i);
            let b = reward.features(&tr.features);
            head.accumulate_grad(&b, &[tr.reward], cfg.loss, &mut ws, &mut grad);
        }
        head.accumulate_anchor_penalty(&anchor, cfg.reg_coeff, 3.0, &mut grad);
        sgd_step_in_place(&mut head, &grad, cfg.pred_lr).unwrap();
    }
    assert_eq!(pred.head, head);
}

#[test]
fn predictive_head_matches_reward_model_when_stationary() {
    let cfg = AgentConfig {
        loss: LossKind::Mse,
        lookback: 1,
        reg_coeff: 0.0,
        hidden: vec![8, 4],
        pred_hidden: vec![8],
        minibatch: 16,
        pred_minibatch: 16,
        reward_steps: 20,
        pred_steps: 20,
        lr: 0.01,
        pred_lr: 0.01,
        ..small_config()
    };
    let mut rng = rng_from_seed(77);
    use rand::Rng;
    let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let target = |x: &[f64]| 0.2 + 0.5 * x[0] - 0.3 * x[1] + 0.2 * x[2];
    let mut buf = ReplayBuffer::new(100);
    for (i, x) in xs.iter().enumerate() {
        buf.push(transition(x.clone(), target(x), i, 1));
    }
    let mut reward = RewardParticle::new(3, &cfg, 21, stream(22, 0));
    let mut pred = PredictiveParticle::new(4, &cfg, 23, stream(24, 0));
    for _ in 0..300 {
        train_reward_nn(&buf, &mut reward, &cfg).unwrap();
        train_predictive_nn(&buf, &mut reward, &mut pred, &cfg).unwrap();
    }
    let mad: f64 = xs
        .iter()
        .map(|x| {
            let b = reward.features(x);
            let p = pred.predict(&predictive_input(&reward.history[2], &b), cfg.loss);
            (p - reward.raw_score(x)).abs()
        })
        .sum::<f64>()
        / xs.len() as f64;
    assert!(mad < 0.05, "mean abs difference {mad}");
}

// ---------------------------------------------------------------- acting

fn ensemble_agent(particles: Vec<NeuralParticle>, variant: NeuralVariant, cfg: AgentConfig, seed: u64) -> NeuralAgent {
    NeuralAgent::from_particles(AgentKind::NeuralPes, variant, AgentConfig { ensemble_size: particles.len(), ..cfg }, particles, seed)
        .unwrap()
}

fn bare(reward: RewardParticle) -> NeuralParticle {
    NeuralParticle { reward, seq: None, pred: None }
}

#[test]
fn hand_built_linear_particle() {
    // Scores: a0 = 0.2·1 + 0.5·0 − 0.1 = 0.1, a1 = 0.2·0.3 + 0.5·0.4 − 0.1 = 0.16.
    let p = linear_particle(vec![0.2, 0.5], -0.1, 1);
    let mut agent = ensemble_agent(vec![bare(p)], NeuralVariant::Ensemble, small_config(), 3);
    let o = obs(vec![vec![1.0, 0.0], vec![0.3, 0.4]]);
    for _ in 0..5 {
        assert_eq!(agent.act_neural_ensemble(&o).unwrap(), 1);
    }
    assert!(agent.act_neural_ensemble(&obs(vec![])).is_err());
}

#[test]
fn identical_particles_make_m_irrelevant() {
    let ps = (0..4).map(|_| bare(linear_particle(vec![0.1, -0.4, 0.9], 0.0, 1))).collect();
    let mut agent = ensemble_agent(ps, NeuralVariant::Ensemble, small_config(), 5);
    let o = obs(vec![vec![0.1, 0.2, 0.3], vec![0.5, 0.0, 0.4], vec![0.0, 0.0, 0.1]]);
    let first = agent.act_neural_ensemble(&o).unwrap();
    for _ in 0..20 {
        assert_eq!(agent.act_neural_ensemble(&o).unwrap(), first);
    }
}

fn with_persistence_seq(mut reward: RewardParticle, history: Vec<Vec<f64>>) -> NeuralParticle {
    let dim = history[0].len();
    reward.history = history;
    NeuralParticle {
        reward,
        seq: Some(SequenceParticle::from_weights(GruWeights::zeros(dim, 2, dim), stream(1, 0))),
        pred: None,
    }
}

#[test]
fn sequence_acting_falls_back_and_matches_on_fixed_point() {
    let cfg = AgentConfig { lookback: 3, ..small_config() };
    let o = obs(vec![vec![0.3, 0.1], vec![0.1, 0.5], vec![0.4, 0.4]]);
    let make = |hist_len: usize| {
        let ps: Vec<NeuralParticle> = (0..3)
            .map(|m| {
                let p = RewardParticle::new(2, &cfg, 10 + m, stream(20 + m, 0));
                let snap = pes_core::agents::flatten_last_layer(&p.model);
                with_persistence_seq(p, vec![snap; hist_len])
            })
            .collect();
        (
            ensemble_agent(ps.clone(), NeuralVariant::Sequence, cfg.clone(), 9),
            ensemble_agent(ps, NeuralVariant::Ensemble, cfg.clone(), 9),
        )
    };
    for hist_len in [1, 3, 6] {
        let (mut seq_agent, mut ens_agent) = make(hist_len);
        for _ in 0..30 {
            assert_eq!(seq_agent.act(&o).unwrap(), ens_agent.act(&o).unwrap(), "history {hist_len}");
        }
    }
}

#[test]
fn hand_built_pes_sum_argmax() {
    // Base: identity on 2 features; ŵ = (2, 1 | bias). Heads (MSE, linear):
    //   head 0: 1·x0 + 0·x1,   head 1: −0.5·x0 + 1·x1 + 0.1.
    // a0 = (0.1, 0.3) → input (0.2, 0.3) → 0.2 + (−0.1 + 0.3 + 0.1) = 0.5
    // a1 = (0.3, 0.0) → input (0.6, 0.0) → 0.6 + (−0.3 + 0.1)       = 0.4
    // Head 0 alone prefers a1; the sum prefers a0.
    let cfg = AgentConfig { lookback: 1, loss: LossKind::Mse, ..small_config() };
    let w = vec![2.0, 1.0, 0.0];
    let head = |wts: Vec<f64>, b: f64| {
        let mut p = PredictiveParticle::from_head(
            MlpWeights::new(vec![Dense { in_dim: 2, out_dim: 1, weight: wts, bias: vec![b] }]).unwrap(),
            stream(3, 0),
        );
        p.trained_rounds = 1;
        p
    };
    let mut p0 = with_persistence_seq(linear_particle(vec![2.0, 1.0], 0.0, 1), vec![w.clone(); 3]);
    p0.pred = Some(head(vec![1.0, 0.0], 0.0));
    let mut p1 = with_persistence_seq(linear_particle(vec![2.0, 1.0], 0.0, 2), vec![w.clone(); 3]);
    p1.pred = Some(head(vec![-0.5, 1.0], 0.1));
    let o = obs(vec![vec![0.1, 0.3], vec![0.3, 0.0]]);
    let mut agent = ensemble_agent(vec![p0.clone(), p1], NeuralVariant::Pes, cfg.clone(), 4);
    for _ in 0..10 {
        assert_eq!(agent.act_neural_pes(&o).unwrap(), 0);
    }
    let mut single = ensemble_agent(vec![p0], NeuralVariant::Pes, cfg, 4);
    assert_eq!(single.act_neural_pes(&o).unwrap(), 1);
}

#[test]
fn pes_falls_back_without_history_or_training() {
    let cfg = AgentConfig { lookback: 2, ..small_config() };
    let o = obs(vec![vec![0.3, 0.1], vec![0.1, 0.5], vec![0.4, 0.4]]);
    let build = |hist: usize, trained: usize| -> Vec<NeuralParticle> {
        (0..3)
            .map(|m| {
                let p = RewardParticle::new(2, &cfg, 30 + m, stream(40 + m, 0));
                let snap = pes_core::agents::flatten_last_layer(&p.model);
                let mut np = with_persistence_seq(p, vec![snap; hist]);
                let mut head = PredictiveParticle::new(4, &cfg, 50 + m, stream(60 + m, 0));
                head.trained_rounds = trained;
                np.pred = Some(head);
                np
            })
            .collect()
    };
    for (hist, trained) in [(1, 1), (3, 1), (4, 0)] {
        let ps = build(hist, trained);
        let mut pes = ensemble_agent(ps.clone(), NeuralVariant::Pes, cfg.clone(), 8);
        let mut ens = ensemble_agent(ps, NeuralVariant::Ensemble, cfg.clone(), 8);
        for _ in 0..30 {
            assert_eq!(pes.act(&o).unwrap(), ens.act(&o).unwrap());
        }
    }
}

// ---------------------------------------------------------------- episodes

#[test]
fn random_agent_single_action_zero_regret() {
    let mut env = logistic_env(3, 1, 0.9);
    let mut agent = RandomAgent::new(4);
    let recs = run_agent_episode(&mut agent, &mut env, 500).unwrap();
    assert_eq!(recs.len(), 500);
    assert!(recs.iter().all(|r| r.regret() == 0.0));
    assert!(run_agent_episode(&mut agent, &mut env, 0).is_err());
}

#[test]
fn episodes_are_deterministic() {
    for kind in [AgentKind::NeuralEnsemble, AgentKind::NeuralSequenceEnsemble, AgentKind::NeuralPes] {
        let run = || {
            let cfg = AgentConfig { train_interval: 1, ..small_config() };
            let mut env = logistic_env(5, 3, 0.95);
            let mut agent = build_agent(kind, &cfg, 3, None, 17).unwrap();
            run_agent_episode(agent.as_mut(), &mut env, 60).unwrap()
        };
        assert_eq!(run(), run(), "{kind:?}");
    }
}

#[test]
fn particle_training_order_does_not_matter() {
    let run = |exec| {
        let cfg = AgentConfig { exec, ..small_config() };
        let mut env = logistic_env(5, 3, 0.95);
        let mut agent = build_agent(AgentKind::NeuralPes, &cfg, 3, None, 17).unwrap();
        run_agent_episode(agent.as_mut(), &mut env, 80).unwrap()
    };
    assert_eq!(run(ExecMode::Sequential), run(ExecMode::Parallel));
}

#[test]
fn training_schedule_and_round_indices() {
    let cfg = AgentConfig { train_interval: 4, ..small_config() };
    let mut agent = NeuralAgent::new(AgentKind::NeuralPes, NeuralVariant::Pes, cfg, 3, 2).unwrap();
    let mut env = logistic_env(6, 3, 0.9);
    run_agent_episode(&mut agent, &mut env, 10).unwrap();
    // Trains at t = 0, 4, 8.
    assert_eq!(agent.rounds(), 3);
    let rounds: Vec<usize> = agent.buffer().iter().map(|t| t.round).collect();
    assert_eq!(rounds, vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3]);
    let every = AgentConfig { train_interval: 1, ..small_config() };
    let mut agent = NeuralAgent::new(AgentKind::NeuralPes, NeuralVariant::Pes, every, 3, 2).unwrap();
    run_agent_episode(&mut agent, &mut logistic_env(6, 3, 0.9), 7).unwrap();
    assert_eq!(agent.rounds(), 7);
}

#[test]
fn sliding_window_variants() {
    let base = small_config();
    assert!(sliding_window_variant(&base, 0).is_err());
    let one = sliding_window_variant(&base, 1).unwrap();
    let mut agent = NeuralAgent::new(AgentKind::WindowNeuralEnsemble, NeuralVariant::Ensemble, one, 3, 1).unwrap();
    let mut env = logistic_env(2, 3, 0.9);
    run_agent_episode(&mut agent, &mut env, 20).unwrap();
    assert_eq!(agent.buffer().len(), 1);
    assert_eq!(agent.buffer().get(0).t, 19);

    let horizon = 40;
    let run = |cfg: &AgentConfig| {
        let mut env = logistic_env(2, 3, 0.9);
        let mut agent = build_agent(AgentKind::NeuralEnsemble, cfg, 3, None, 5).unwrap();
        run_agent_episode(agent.as_mut(), &mut env, horizon).unwrap()
    };
    let wide = sliding_window_variant(&base, horizon).unwrap();
    assert_eq!(run(&base), run(&wide));
}

// ---------------------------------------------------------------- exact agents

fn lg_model(gamma: Vec<f64>) -> LinearGaussianModel {
    let d = gamma.len();
    LinearGaussianModel { gamma, stationary_var: vec![1.0; d], noise_sd: 0.1, prior_var: vec![1.0; d], exact: true }
}

#[test]
fn ts_symmetry() {
    let m = lg_model(vec![0.6]);
    let b = GaussianBelief::isotropic(1, 1.0);
    let feats: [&[f64]; 2] = [&[1.0], &[-1.0]];
    let mut rng = rng_from_seed(3);
    let n = 10_000;
    let zeros = (0..n).filter(|_| act_exact_ts(&b, &m, &feats, &mut rng).unwrap().0 == 0).count();
    assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.02);
    let single: [&[f64]; 1] = [&[1.0]];
    assert_eq!(act_exact_ts(&b, &m, &single, &mut rng).unwrap().0, 0);
    assert_eq!(act_exact_linps(&b, &m, &single, &mut rng).unwrap().0, 0);
}

#[test]
fn zero_covariance_is_greedy() {
    let m = lg_model(vec![1.0, 1.0]);
    let b = GaussianBelief::new(DVector::from_vec(vec![0.3, -0.8]), DMatrix::zeros(2, 2)).unwrap();
    let feats: [&[f64]; 3] = [&[1.0, 0.0], &[0.0, -1.0], &[0.5, 0.5]];
    let mut rng = rng_from_seed(1);
    for _ in 0..20 {
        assert_eq!(act_exact_ts(&b, &m, &feats, &mut rng).unwrap().0, 1);
        assert_eq!(act_exact_linps(&b, &m, &feats, &mut rng).unwrap().0, 1);
    }
}

#[test]
fn linps_ignores_independent_future() {
    let m = lg_model(vec![0.0, 0.0]);
    let b = GaussianBelief::new(DVector::from_vec(vec![0.9, -0.4]), DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2])).unwrap();
    let feats: [&[f64]; 3] = [&[0.2, 0.9], &[0.7, 0.1], &[-0.5, 0.5]];
    // Γ·mean is the zero vector, so every action ties and the lowest id wins.
    let gm = [0.0 * 0.9, 0.0 * -0.4];
    let greedy = argmax(&feats.iter().map(|f| f[0] * gm[0] + f[1] * gm[1]).collect::<Vec<_>>());
    assert_eq!(greedy, 0);
    let mut rng = rng_from_seed(2);
    for _ in 0..50 {
        assert_eq!(act_exact_linps(&b, &m, &feats, &mut rng).unwrap().0, greedy);
    }
}

#[test]
fn exact_agents_need_linear_gaussian_model() {
    assert!(build_agent(AgentKind::ExactTs, &small_config(), 3, None, 1).is_err());
    assert!(build_agent(AgentKind::ExactLinps, &small_config(), 3, Some(lg_model(vec![0.5; 3])), 1).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn buffer_keeps_last_k(k in 1usize..20, n in 0usize..60) {
        let mut b = ReplayBuffer::new(k);
        for t in 0..n {
            b.push(transition(vec![], 0.0, t, 1));
        }
        let got: Vec<usize> = b.iter().map(|t| t.t).collect();
        let want: Vec<usize> = (n.saturating_sub(k)..n).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn argmax_scale_invariant(scores in prop::collection::vec(-5.0f64..5.0, 1..12), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
        prop_assert_eq!(argmax(&scores), argmax(&scaled));
    }

    #[test]
    fn scaling_last_layer_keeps_ensemble_choice(seed in any::<u64>(), c in 0.1f64..10.0) {
        let cfg = small_config();
        let p = RewardParticle::new(3, &cfg, seed, stream(seed, 1));
        let mut scaled = p.model.clone();
        let last = scaled.last_layer_mut();
        last.weight.iter_mut().chain(last.bias.iter_mut()).for_each(|v| *v *= c);
        let q = RewardParticle::from_model(scaled, stream(seed, 1));
        let o = obs(vec![vec![0.1, 0.5, 0.2], vec![0.9, 0.1, 0.0], vec![0.3, 0.3, 0.3]]);
        let mut a = ensemble_agent(vec![bare(p)], NeuralVariant::Ensemble, cfg.clone(), seed);
        let mut b = ensemble_agent(vec![bare(q)], NeuralVariant::Ensemble, cfg, seed);
        prop_assert_eq!(a.act(&o).unwrap(), b.act(&o).unwrap());
    }

    #[test]
    fn scaling_features_keeps_exact_choice(seed in any::<u64>(), c in 0.1f64..10.0, g in 0.0f64..1.0) {
        let m = lg_model(vec![g, g]);
        let b = GaussianBelief::isotropic(2, 1.0);
        let raw = [[0.3, 0.1], [-0.2, 0.8], [0.5, -0.5]];
        let scaled: Vec<Vec<f64>> = raw.iter().map(|f| f.iter().map(|x| x * c).collect()).collect();
        let f1: Vec<&[f64]> = raw.iter().map(|f| f.as_slice()).collect();
        let f2: Vec<&[f64]> = scaled.iter().map(|f| f.as_slice()).collect();
        prop_assert_eq!(
            act_exact_ts(&b, &m, &f1, &mut rng_from_seed(seed)).unwrap().0,
            act_exact_ts(&b, &m, &f2, &mut rng_from_seed(seed)).unwrap().0
        );
        prop_assert_eq!(
            act_exact_linps(&b, &m, &f1, &mut rng_from_seed(seed)).unwrap().0,
            act_exact_linps(&b, &m, &f2, &mut rng_from_seed(seed)).unwrap().0
        );
    }

    #[test]
    fn kalman_covariance_stays_symmetric_psd(seed in any::<u64>(), g in 0.0f64..1.0, steps in 1usize..30) {
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        let mut b = GaussianBelief::isotropic(3, 1.0);
        for _ in 0..steps {
            b = pes_core::agents::kalman_predict(&b, &[g, g, g]);
            let phi: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            b = pes_core::agents::kalman_update(&b, &phi, rng.random_range(-2.0..2.0), 0.1);
            prop_assert_eq!(b.cov.clone(), b.cov.transpose());
            let eig = b.cov.clone().symmetric_eigen().eigenvalues;
            prop_assert!(eig.iter().all(|e| *e > -1e-12));
        }
    }
}

#[test]
fn neural_agents_learn_a_stationary_bandit() {
    // Sanity: with a frozen parameter and per-step feedback, an ensemble
    // beats uniform play.
    let cfg = AgentConfig { train_interval: 10, reward_steps: 20, minibatch: 16, lr: 0.05, ..small_config() };
    let horizon = 3000;
    let mean_reward = |agent: &mut dyn Agent| {
        let mut env = logistic_env(31, 4, 1.0);
        let recs = run_agent_episode(agent, &mut env, horizon).unwrap();
        recs[horizon / 2..].iter().map(|r| r.chosen_expected_reward).sum::<f64>() / (horizon / 2) as f64
    };
    let mut ens = build_agent(AgentKind::NeuralEnsemble, &cfg, 3, None, 3).unwrap();
    let mut rnd = RandomAgent::new(3);
    let learned = mean_reward(ens.as_mut());
    let uniform = mean_reward(&mut rnd);
    assert!(learned > uniform + 0.02, "{learned} vs {uniform}");
}

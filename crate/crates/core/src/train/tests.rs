use super::*;
use crate::cnf::{clause_literal_graph, random_ksat, Formula};
use crate::env::Env;
use crate::net::forward;

fn small_example(seed: u64) -> SupervisedExample {
    let f = random_ksat(6, 8, 3, seed).unwrap();
    let counts = (0..6).map(|i| (i * 7 + seed) % 4).collect();
    SupervisedExample::new(clause_literal_graph(&f), counts).unwrap()
}

/// Fresh parameters have zero biases, which puts edgeless literal rows exactly
/// on the LeakyReLU kink; a small perturbation moves every unit off it.
fn jittered(h: &HyperParams, seed: u64) -> NetParams {
    use rand::Rng as _;
    let mut p = NetParams::init(h, seed);
    let mut rng = crate::rng::seeded(seed ^ 0xabcd);
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|x| *x += rng.random_range(-0.1..0.1));
    }
    p
}

fn sampled() -> CheckTolerance {
    CheckTolerance {
        max_entries: Some(48),
        ..CheckTolerance::default()
    }
}

fn assert_all_pass(checks: &[TensorCheck]) {
    for c in checks {
        assert!(
            c.passed(),
            "{}: {} of {} entries off (max rel {:e}, max abs {:e})",
            c.name,
            c.failures,
            c.entries,
            c.max_rel_err,
            c.max_abs_err
        );
    }
}

fn rollouts(p: &NetParams, h: &HyperParams, n: usize) -> Vec<Episode> {
    let f = random_ksat(6, 8, 3, 21).unwrap();
    let mut env = Env::new();
    (0..n as u64)
        .map(|s| rl::rollout_episode(&mut env, &f, p, h, s).unwrap())
        .collect()
}

#[test]
fn target_distribution_examples() {
    let u = target_distribution(&[0, 0, 0]).unwrap();
    assert!(u.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    let t = target_distribution(&[1, 0]).unwrap();
    let e = std::f64::consts::E;
    assert!((t[0] - e / (e + 1.0)).abs() < 1e-15 && (t[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
    assert!((t[0] - 0.7311).abs() < 1e-4);
    let big = target_distribution(&[0, 3, 900, 1]).unwrap();
    assert!(big.iter().all(|&x| x >= 0.0) && (big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(target_distribution(&[]).is_err());
}

#[test]
fn kl_examples() {
    let logits = [0.3, -1.2, 2.0];
    let pi = crate::math::softmax(&logits);
    assert!(kl_loss(&pi, &logits).unwrap().abs() < 1e-12);
    assert!((kl_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!(kl_loss(&[1.0], &[0.0, 0.0]).is_err());
    let huge = [1e4, -1e4, 0.0];
    let k = kl_loss(&[0.2, 0.5, 0.3], &huge).unwrap();
    assert!(k.is_finite() && k > 0.0);
    assert!(kl_logit_grad(&[0.2, 0.5, 0.3], &huge).iter().all(|g| g.is_finite()));
    for s in 0..50u64 {
        let l: Vec<f64> = (0..5).map(|i| ((s * 31 + i * 17) % 13) as f64 - 6.0).collect();
        let p = target_distribution(&[s % 3, 1, 0, s % 5, 2]).unwrap();
        assert!(kl_loss(&p, &l).unwrap() >= 0.0);
    }
}

#[test]
fn zero_upstream_gives_zero_gradient() {
    let h = HyperParams::rl();
    let p = NetParams::init(&h, 1);
    let ex = small_example(1);
    let (_, cache) = crate::net::forward_cached(&p, &h, &ex.graph, false, 0).unwrap();
    let g = backward(&p, &h, &ex.graph, &cache, &OutputGrad::zeros(6)).unwrap();
    assert_eq!(g.norm(), 0.0);
    assert!(backward(&p, &h, &ex.graph, &cache, &OutputGrad::zeros(5)).is_err());
}

#[test]
fn kl_gradient_matches_finite_differences() {
    let h = HyperParams::supervised();
    let p = jittered(&h, 7);
    let ex = small_example(3);
    assert_eq!((ex.graph.num_vars, ex.graph.num_clauses), (6, 8));
    let checks = check_kl_gradients(&p, &h, &ex, false, 0, CheckTolerance::default()).unwrap();
    assert_eq!(checks.len(), p.tensors().len());
    assert_all_pass(&checks);
    // Dropout masks are a deterministic function of the seed.
    let checks = check_kl_gradients(&p, &h, &ex, true, 5, CheckTolerance::default()).unwrap();
    assert_all_pass(&checks);
}

#[test]
fn kl_gradient_with_value_head_architecture() {
    let h = HyperParams::rl();
    let p = jittered(&h, 2);
    let checks = check_kl_gradients(&p, &h, &small_example(4), false, 0, sampled()).unwrap();
    assert_all_pass(&checks);
    let value = checks.iter().filter(|c| c.name.starts_with("value.")).collect::<Vec<_>>();
    assert!(!value.is_empty() && value.iter().all(|c| c.max_abs_err == 0.0));
}

#[test]
fn reinforce_gradient_matches_finite_differences() {
    let h = HyperParams::rl();
    let p = jittered(&h, 11);
    let episodes = rollouts(&p, &h, 3);
    let cfg = ReinforceConfig::default();
    let checks = check_reinforce_gradients(&p, &h, &episodes, &cfg, sampled()).unwrap();
    assert_all_pass(&checks);
}

#[test]
fn kl_stationary_point_for_policy_bias() {
    let h = HyperParams::supervised();
    let p = NetParams::init(&h, 1);
    let ex = small_example(2);
    let out = forward(&p, &h, &ex.graph, false, 0).unwrap();
    let pi = crate::math::softmax(&out.policy_logits);
    let (_, cache) = crate::net::forward_cached(&p, &h, &ex.graph, false, 0).unwrap();
    let up = OutputGrad {
        logits: kl_logit_grad(&pi, &out.policy_logits),
        value: 0.0,
    };
    let g = backward(&p, &h, &ex.graph, &cache, &up).unwrap();
    assert!(g.policy.layers.last().unwrap().bias[0].abs() < 1e-12);
    assert!(g.norm() < 1e-9);
}

#[test]
fn advantage_normalization() {
    let a = normalize_advantages(&[1.0, 2.0, 4.0, -3.0, 0.5], 1e-8);
    let m = crate::math::mean(&a);
    let v = a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / a.len() as f64;
    assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-6);
    assert!(normalize_advantages(&[0.3; 4], 1e-8).iter().all(|&x| x == 0.0));
}

#[test]
fn equal_advantages_give_no_policy_gradient() {
    let h = HyperParams::rl();
    let p = NetParams::init(&h, 5);
    let episodes = rollouts(&p, &h, 2);
    let n: usize = episodes.iter().map(|e| e.steps.len()).sum();
    let coefs = vec![
        StepCoefficients {
            ratio: 1.0,
            advantage: 0.0,
            value_target: 0.5,
        };
        n
    ];
    let cfg = ReinforceConfig {
        value_coef: 0.0,
        ..ReinforceConfig::default()
    };
    let (loss, g) = reinforce_loss_and_grad(&episodes, &coefs, &p, &h, &cfg).unwrap();
    assert_eq!(loss.policy, 0.0);
    assert_eq!(g.norm(), 0.0);
}

#[test]
fn on_policy_ratios_are_exactly_one() {
    let h = HyperParams::rl();
    let p = NetParams::init(&h, 9);
    let episodes = rollouts(&p, &h, 4);
    let coefs = reinforce_coefficients(&episodes, &p, &h, &ReinforceConfig::default()).unwrap();
    assert!(coefs.iter().all(|c| c.ratio == 1.0));
    for ep in &episodes {
        for s in &ep.steps {
            let out = forward(&p, &h, &s.observation, false, 0).unwrap();
            assert_eq!(crate::math::log_softmax(&out.policy_logits)[s.action], s.behavior_logprob);
        }
    }
    assert!(reinforce_coefficients(&[], &p, &h, &ReinforceConfig::default()).is_err());
    let l = reinforce_loss(&episodes, &p, &h, &ReinforceConfig::default()).unwrap();
    assert!((l.total - (l.policy + 0.5 * l.value)).abs() < 1e-15);
}

#[test]
fn returns_to_go_are_undiscounted() {
    let g = clause_literal_graph(&Formula::new(1, vec![]));
    let step = |r: f64| EpisodeStep {
        observation: g.clone(),
        action: 0,
        behavior_logprob: 0.0,
        reward: r,
    };
    let ep = Episode {
        steps: vec![step(-0.1), step(-0.1), step(0.25)],
    };
    let r = ep.returns_to_go();
    assert!((r[0] - 0.05).abs() < 1e-15 && (r[1] - 0.15).abs() < 1e-15 && r[2] == 0.25);
    assert!((ep.total_return() - 0.05).abs() < 1e-15);
}

fn toy_dataset() -> Vec<SupervisedExample> {
    (0..10u64)
        .map(|s| {
            let f = random_ksat(8, 20, 3, 100 + s).unwrap();
            let counts = (0..8).map(|i| ((i * 5 + s * 3) % 6) as u64).collect();
            SupervisedExample::new(clause_literal_graph(&f), counts).unwrap()
        })
        .collect()
}

#[test]
fn supervised_training_is_deterministic_and_improves() {
    let h = HyperParams::supervised();
    let data = toy_dataset();
    let cfg = SupervisedConfig {
        lr: 1e-2,
        epochs: 3,
        seed: 4,
        ..SupervisedConfig::default()
    };
    let a = train_supervised(&data, &h, &cfg).unwrap();
    let b = train_supervised(&data, &h, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.epoch_kl, b.epoch_kl);
    assert!(a.epoch_kl[2] <= a.epoch_kl[0]);
    assert_ne!(a.params, a.live);
    assert!(train_supervised(&[], &h, &cfg).is_err());
}

#[test]
fn rl_training_is_deterministic() {
    let h = HyperParams::rl();
    let formulas: Vec<Formula> = (0..3).map(|s| random_ksat(10, 30, 3, s).unwrap()).collect();
    let cfg = RlConfig {
        workers: 1,
        batches: 3,
        seed: 8,
        ..RlConfig::default()
    };
    let a = train_rl(&formulas, &h, &cfg).unwrap();
    let b = train_rl(&formulas, &h, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.metrics.len(), 6);
    // The first learner step of each batch is on-policy.
    for m in a.metrics.iter().step_by(2) {
        assert_eq!(m.mean_ratio, 1.0);
    }
    assert!(train_rl(&formulas, &HyperParams::supervised(), &cfg).is_err());
}

#[test]
fn checkpoint_written_each_batch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.ngw");
    let h = HyperParams::rl();
    let formulas = vec![random_ksat(8, 20, 3, 1).unwrap()];
    let cfg = RlConfig {
        workers: 2,
        batches: 2,
        grad_steps: 1,
        checkpoint: Some(path.clone()),
        ..RlConfig::default()
    };
    let r = train_rl(&formulas, &h, &cfg).unwrap();
    let (mut saved, hs) = crate::net::load_weights(&path).unwrap();
    assert!(hs.same_architecture(&h));
    let mut expect = r.params.clone();
    expect.round_to_f32();
    saved.round_to_f32();
    assert_eq!(saved, expect);
}


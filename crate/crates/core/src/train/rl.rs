use std::path::PathBuf;

use rand::Rng as _;
use serde::Serialize;

use super::optim::{clip_gradients, Adam};
use super::{
    reinforce_coefficients, reinforce_loss_and_grad, Episode, EpisodeStep, ReinforceConfig,
};
use crate::cnf::Formula;
use crate::env::Env;
use crate::math::{log_softmax, softmax};
use crate::net::{forward, save_weights, HyperParams, NetParams};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RlConfig {
    pub workers: usize,
    pub episodes_per_worker: usize,
    pub batches: usize,
    /// Learner steps per batch; steps after the first are off-policy.
    pub grad_steps: usize,
    pub lr: f64,
    pub max_grad_norm: f64,
    pub loss: ReinforceConfig,
    pub seed: u64,
    /// Written after every batch.
    pub checkpoint: Option<PathBuf>,
    pub edge_cap: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            workers: 4,
            episodes_per_worker: 2,
            batches: 100,
            grad_steps: 2,
            lr: 1e-4,
            max_grad_norm: 1.0,
            loss: ReinforceConfig::default(),
            seed: 0,
            checkpoint: None,
            edge_cap: crate::env::DEFAULT_EDGE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RlMetrics {
    pub step: usize,
    pub batch: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub total_loss: f64,
    pub grad_norm: f64,
    pub mean_ratio: f64,
    pub mean_return: f64,
}

#[derive(Clone, Debug)]
pub struct RlReport {
    pub params: NetParams,
    pub metrics: Vec<RlMetrics>,
}

/// Samples an index from `probs`.
pub fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Plays one episode with actions sampled from the network policy.
pub fn rollout_episode(
    env: &mut Env,
    f: &Formula,
    p: &NetParams,
    h: &HyperParams,
    seed: u64,
) -> Result<Episode> {
    let mut obs = env.reset(f, rng::derive_seed(seed, 0))?;
    let mut action_rng = rng::derive(seed, 1);
    let mut steps = Vec::new();
    loop {
        let out = forward(p, h, &obs, false, 0)?;
        let action = sample_index(&softmax(&out.policy_logits), &mut action_rng);
        let behavior_logprob = log_softmax(&out.policy_logits)[action];
        let t = env.step(action)?;
        steps.push(EpisodeStep {
            observation: obs,
            action,
            behavior_logprob,
            reward: t.reward,
        });
        match t.observation {
            Some(next) if !t.done => obs = next,
            _ => break,
        }
    }
    Ok(Episode { steps })
}

/// Formulas the environment accepts (not decided by root propagation).
pub(crate) fn playable(formulas: &[Formula]) -> Vec<&Formula> {
    let mut env = Env::new();
    formulas.iter().filter(|f| env.reset(f, 0).is_ok()).collect()
}

pub fn train_rl(formulas: &[Formula], h: &HyperParams, cfg: &RlConfig) -> Result<RlReport> {
    let init = NetParams::init(h, rng::derive_seed(cfg.seed, 0));
    train_rl_from(init, formulas, h, cfg)
}

pub fn train_rl_from(
    p: NetParams,
    formulas: &[Formula],
    h: &HyperParams,
    cfg: &RlConfig,
) -> Result<RlReport> {
    let pool = playable(formulas);
    if pool.is_empty() {
        return Err(Error::InvalidArgument("no playable training formula".into()));
    }
    train_rl_with(p, h, cfg, |snapshot, wseed| {
        let mut wrng = rng::seeded(wseed);
        let f = pool[wrng.random_range(0..pool.len())];
        let mut env = Env::with_edge_cap(cfg.edge_cap);
        (0..cfg.episodes_per_worker)
            .map(|_| rollout_episode(&mut env, f, snapshot, h, wrng.random()))
            .collect()
    })
}

/// The learner loop with a custom episode source. `rollout(snapshot, seed)` is
/// called once per worker and batch with the parameters frozen for the batch.
pub fn train_rl_with<R>(
    mut p: NetParams,
    h: &HyperParams,
    cfg: &RlConfig,
    rollout: R,
) -> Result<RlReport>
where
    R: Fn(&NetParams, u64) -> Result<Vec<Episode>> + Sync,
{
    h.validate()?;
    p.check_shapes(h)?;
    if !h.value_head {
        return Err(Error::InvalidArgument("RL training needs a value head".into()));
    }
    if cfg.workers == 0 || cfg.episodes_per_worker == 0 || cfg.grad_steps == 0 {
        return Err(Error::InvalidArgument(
            "workers, episodes and gradient steps must be >= 1".into(),
        ));
    }
    let mut opt = Adam::new(cfg.lr, &p);
    let mut metrics = Vec::new();
    for batch in 0..cfg.batches {
        let snapshot = p.clone();
        let jobs: Vec<u64> = (0..cfg.workers)
            .map(|w| rng::derive_seed(cfg.seed, 10_000 + (batch * cfg.workers + w) as u64))
            .collect();
        let rollouts = crate::par::map(&jobs, |&wseed| rollout(&snapshot, wseed));
        let mut episodes = Vec::new();
        for r in rollouts {
            episodes.extend(r?);
        }
        if episodes.is_empty() {
            return Err(Error::InvalidArgument("rollout produced no episodes".into()));
        }
        let mean_return =
            episodes.iter().map(Episode::total_return).sum::<f64>() / episodes.len() as f64;
        for k in 0..cfg.grad_steps {
            let coefs = reinforce_coefficients(&episodes, &p, h, &cfg.loss)?;
            let mean_ratio = coefs.iter().map(|c| c.ratio).sum::<f64>() / coefs.len() as f64;
            let (loss, mut grad) = reinforce_loss_and_grad(&episodes, &coefs, &p, h, &cfg.loss)?;
            let norm = clip_gradients(&mut grad, cfg.max_grad_norm);
            opt.step(&mut p, &grad);
            metrics.push(RlMetrics {
                step: batch * cfg.grad_steps + k,
                batch,
                policy_loss: loss.policy,
                value_loss: loss.value,
                total_loss: loss.total,
                grad_norm: norm,
                mean_ratio,
                mean_return,
            });
        }
        if let Some(path) = &cfg.checkpoint {
            save_weights(&p, h, path)?;
        }
        log::info!("batch {} mean return {mean_return:.4}", batch + 1);
    }
    Ok(RlReport { params: p, metrics })
}

/// Mean return of `episodes_per_formula` rollouts per formula.
pub fn evaluate_policy(
    formulas: &[Formula],
    p: &NetParams,
    h: &HyperParams,
    episodes_per_formula: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let jobs: Vec<(usize, usize)> = (0..formulas.len())
        .flat_map(|i| (0..episodes_per_formula).map(move |e| (i, e)))
        .collect();
    crate::par::map(&jobs, |&(i, e)| {
        let mut env = Env::new();
        let s = rng::derive_seed(seed, (i * episodes_per_formula + e) as u64);
        rollout_episode(&mut env, &formulas[i], p, h, s).map(|ep| ep.total_return())
    })
    .into_iter()
    .collect()
}

/// Return of the uniform-random branching policy, paired with
/// [`evaluate_policy`]: same environment seeds and the same inverse-CDF draws,
/// so a near-uniform network replays nearly the same episodes.
pub fn evaluate_uniform(
    formulas: &[Formula],
    episodes_per_formula: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let jobs: Vec<(usize, usize)> = (0..formulas.len())
        .flat_map(|i| (0..episodes_per_formula).map(move |e| (i, e)))
        .collect();
    crate::par::map(&jobs, |&(i, e)| -> Result<f64> {
        let mut env = Env::new();
        let s = rng::derive_seed(seed, (i * episodes_per_formula + e) as u64);
        let mut obs = env.reset(&formulas[i], rng::derive_seed(s, 0))?;
        let mut action_rng = rng::derive(s, 1);
        let mut ret = 0.0;
        loop {
            let a = sample_index(&vec![1.0 / obs.num_vars as f64; obs.num_vars], &mut action_rng);
            let t = env.step(a)?;
            ret += t.reward;
            match t.observation {
                Some(next) if !t.done => obs = next,
                _ => return Ok(ret),
            }
        }
    })
    .into_iter()
    .collect()
}

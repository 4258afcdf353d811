use rand::seq::SliceRandom;

use super::optim::{add_scaled, Asgd};
use super::{kl_loss_and_grad, kl_loss, target_distribution, SupervisedExample};
use crate::net::{forward, HyperParams, NetParams};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// First epoch (0-based) whose iterates enter the average; `None` means the
    /// final epoch.
    pub average_from_epoch: Option<usize>,
    /// Apply dropout while training.
    pub dropout: bool,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        SupervisedConfig {
            lr: 1e-3,
            epochs: 3,
            batch_size: 8,
            seed: 0,
            average_from_epoch: None,
            dropout: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SupervisedReport {
    /// Averaged iterate, used for evaluation.
    pub params: NetParams,
    /// Last iterate.
    pub live: NetParams,
    /// Mean training KL of each epoch.
    pub epoch_kl: Vec<f64>,
}

/// Mean KL over a dataset in evaluation mode.
pub fn mean_kl(p: &NetParams, h: &HyperParams, data: &[SupervisedExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let losses = crate::par::map(data, |ex| -> Result<f64> {
        let out = forward(p, h, &ex.graph, false, 0)?;
        kl_loss(&target_distribution(&ex.glue_counts)?, &out.policy_logits)
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / data.len() as f64)
}

/// Trains freshly initialized parameters (seeded from `cfg.seed`).
pub fn train_supervised(
    data: &[SupervisedExample],
    h: &HyperParams,
    cfg: &SupervisedConfig,
) -> Result<SupervisedReport> {
    let init = NetParams::init(h, rng::derive_seed(cfg.seed, 0));
    train_supervised_from(init, data, h, cfg)
}

pub fn train_supervised_from(
    mut p: NetParams,
    data: &[SupervisedExample],
    h: &HyperParams,
    cfg: &SupervisedConfig,
) -> Result<SupervisedReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("batch size and epochs must be >= 1".into()));
    }
    h.validate()?;
    p.check_shapes(h)?;
    for ex in data {
        ex.validate()?;
    }
    let avg_from = cfg.average_from_epoch.unwrap_or(cfg.epochs - 1);
    let mut opt = Asgd::new(cfg.lr, &p);
    let mut shuffle_rng = rng::derive(cfg.seed, 1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_kl = Vec::with_capacity(cfg.epochs);
    let mut seen = 0u64;
    for epoch in 0..cfg.epochs {
        if epoch == avg_from {
            opt.start_averaging();
        }
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let jobs: Vec<(usize, u64)> = batch
                .iter()
                .enumerate()
                .map(|(k, &i)| (i, rng::derive_seed(cfg.seed, 1_000 + seen + k as u64)))
                .collect();
            seen += batch.len() as u64;
            let results = crate::par::map(&jobs, |&(i, seed)| {
                kl_loss_and_grad(&p, h, &data[i], cfg.dropout, seed)
            });
            let mut grad = p.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for r in results {
                let (loss, g) = r?;
                total += loss;
                add_scaled(&mut grad, &g, scale);
            }
            opt.step(&mut p, &grad);
        }
        let mean = total / data.len() as f64;
        log::info!("epoch {} mean KL {mean:.6}", epoch + 1);
        epoch_kl.push(mean);
    }
    Ok(SupervisedReport {
        params: opt.average.clone(),
        live: p,
        epoch_kl,
    })
}

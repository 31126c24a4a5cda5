use serde::{Deserialize, Serialize};

use super::loss::{evaluate, LossBreakdown};
use super::model::{init_model, AeDims, AeModel};
use crate::lbfgs::{minimize, LbfgsOptions, StopReason};
use crate::{Error, Result};

/// Training hyperparameters. Defaults: latent 16, decoder hidden 16/16,
/// 250 L-BFGS iterations, sparsity weight 0.5 toward target 0.05, L2 weight
/// 0.01.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Full-batch L-BFGS iteration budget.
    pub epochs: usize,
    pub sparsity_weight: f64,
    pub sparsity_target: f64,
    pub l2_weight: f64,
    pub latent: usize,
    pub decoder_hidden: (usize, usize),
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 250,
            sparsity_weight: 0.5,
            sparsity_target: 0.05,
            l2_weight: 0.01,
            latent: 16,
            decoder_hidden: (16, 16),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.sparsity_weight, self.l2_weight];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("penalty weights must be finite and non-negative"));
        }
        if !(self.sparsity_target > 0.0 && self.sparsity_target < 1.0) {
            return Err(Error::invalid(format!(
                "sparsity target must lie in (0, 1), got {}",
                self.sparsity_target
            )));
        }
        Ok(())
    }

    pub fn dims(&self, input: usize) -> Result<AeDims> {
        AeDims::new(input, self.latent, self.decoder_hidden.0, self.decoder_hidden.1)
    }
}

/// What happened during [`train_with_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial: LossBreakdown,
    pub last: LossBreakdown,
    /// Total loss at the start and after each accepted iteration.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
}

impl TrainReport {
    /// Lowest total loss seen up to and including each iteration.
    pub fn best_loss_history(&self) -> Vec<f64> {
        self.loss_history
            .iter()
            .scan(f64::INFINITY, |best, &f| {
                *best = best.min(f);
                Some(*best)
            })
            .collect()
    }
}

pub fn train(images: &[Vec<f64>], cfg: &TrainConfig) -> Result<AeModel> {
    Ok(train_with_report(images, cfg)?.0)
}

/// Trains a freshly initialized model (seeded from `cfg.seed`) with
/// full-batch L-BFGS, history 10, strong-Wolfe steps, stopping after
/// `cfg.epochs` iterations or when `‖∇‖∞ < 1e-7`.
pub fn train_with_report(images: &[Vec<f64>], cfg: &TrainConfig) -> Result<(AeModel, TrainReport)> {
    cfg.validate()?;
    if images.len() < 2 {
        return Err(Error::invalid(format!(
            "training needs at least 2 images, got {}",
            images.len()
        )));
    }
    let dims = cfg.dims(images[0].len())?;
    if let Some(x) = images.iter().find(|x| x.len() != dims.input) {
        return Err(Error::DimensionMismatch {
            expected: dims.input,
            actual: x.len(),
        });
    }
    if images.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training images contain non-finite values"));
    }

    let mut model = init_model(dims, cfg.seed)?;
    model.config = *cfg;
    let acts = model.activations();
    let (initial, _) = evaluate(&dims, acts, model.params(), images, cfg, false);

    let opts = LbfgsOptions {
        max_iters: cfg.epochs,
        ..LbfgsOptions::default()
    };
    let outcome = minimize(
        |p: &[f64], g: &mut [f64]| {
            let (l, grad) = evaluate(&dims, acts, p, images, cfg, true);
            g.copy_from_slice(&grad.expect("gradient requested"));
            l.total
        },
        model.params().to_vec(),
        &opts,
    )?;

    model.set_params(outcome.x);
    let (last, _) = evaluate(&dims, acts, model.params(), images, cfg, false);
    Ok((
        model,
        TrainReport {
            initial,
            last,
            loss_history: outcome.history,
            iterations: outcome.iterations,
            evaluations: outcome.evaluations,
            stop: outcome.stop,
        },
    ))
}

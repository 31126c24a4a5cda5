use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{layer_view, mse, Activation, AeDims, AeModel};
use super::TrainConfig;
use crate::{Error, Result};

/// Components of the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// `mse + β·sparsity_penalty + λ·l2_penalty`
    pub total: f64,
    pub mse: f64,
    /// `Σ_j KL(ρ ‖ ρ̂_j)` over latent units.
    pub sparsity_penalty: f64,
    /// `½·Σ W²` over all weight matrices, biases excluded.
    pub l2_penalty: f64,
}

/// Fixed number of contiguous batch groups whose partial gradients are
/// summed in order; keeps results independent of the thread count.
const GROUPS: usize = 8;

fn kl(rho: f64, rho_hat: f64) -> f64 {
    rho * (rho / rho_hat).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - rho_hat)).ln()
}

fn kl_grad(rho: f64, rho_hat: f64) -> f64 {
    -rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat)
}

fn check_batch(dims: &AeDims, batch: &[Vec<f64>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("loss needs a non-empty batch"));
    }
    if let Some(x) = batch.iter().find(|x| x.len() != dims.input) {
        return Err(Error::DimensionMismatch {
            expected: dims.input,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Objective value and, optionally, its gradient for a flat parameter vector.
pub(crate) fn evaluate(
    dims: &AeDims,
    acts: [Activation; 4],
    params: &[f64],
    batch: &[Vec<f64>],
    cfg: &TrainConfig,
    want_grad: bool,
) -> (LossBreakdown, Option<Vec<f64>>) {
    let n = batch.len() as f64;
    let layers: [_; 4] = std::array::from_fn(|k| layer_view(dims, acts, params, k));
    let offsets = dims.offsets();

    let latent: Vec<Vec<f64>> = batch.par_iter().map(|x| layers[0].forward(x)).collect();
    let mut rho_hat = vec![0.0; dims.latent];
    for z in &latent {
        for (r, v) in rho_hat.iter_mut().zip(z) {
            *r += v;
        }
    }
    rho_hat.iter_mut().for_each(|r| *r /= n);
    let rho = cfg.sparsity_target;
    let sparsity_penalty: f64 = rho_hat.iter().map(|&rh| kl(rho, rh)).sum();
    let sparse_delta: Vec<f64> = rho_hat
        .iter()
        .map(|&rh| cfg.sparsity_weight * kl_grad(rho, rh) / n)
        .collect();

    let group = batch.len().div_ceil(GROUPS.min(batch.len()));
    let partials: Vec<(f64, Option<Vec<f64>>)> = batch
        .par_chunks(group)
        .zip(latent.par_chunks(group))
        .map(|(xs, zs)| {
            let mut grad = want_grad.then(|| vec![0.0; params.len()]);
            let mut sq = 0.0;
            let mut z2 = vec![0.0; dims.h2];
            let mut z3 = vec![0.0; dims.h3];
            let mut xhat = vec![0.0; dims.input];
            for (x, z) in xs.iter().zip(zs) {
                layers[1].forward_into(z, &mut z2);
                layers[2].forward_into(&z2, &mut z3);
                layers[3].forward_into(&z3, &mut xhat);
                sq += mse(x, &xhat);
                if let Some(g) = grad.as_mut() {
                    backward(dims, &layers, &offsets, x, z, &z2, &z3, &xhat, &sparse_delta, n, g);
                }
            }
            (sq, grad)
        })
        .collect();

    let mut mse_sum = 0.0;
    let mut grad = want_grad.then(|| vec![0.0; params.len()]);
    for (sq, g) in partials {
        mse_sum += sq;
        if let (Some(acc), Some(g)) = (grad.as_mut(), g) {
            acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
    }

    let mut l2 = 0.0;
    for &(w, b) in &offsets {
        for (idx, wv) in params[w..b].iter().enumerate() {
            l2 += wv * wv;
            if let Some(g) = grad.as_mut() {
                g[w + idx] += cfg.l2_weight * wv;
            }
        }
    }
    let l2_penalty = 0.5 * l2;
    let mse_mean = mse_sum / n;
    let total = mse_mean + cfg.sparsity_weight * sparsity_penalty + cfg.l2_weight * l2_penalty;
    (
        LossBreakdown {
            total,
            mse: mse_mean,
            sparsity_penalty,
            l2_penalty,
        },
        grad,
    )
}

#[allow(clippy::too_many_arguments)]
fn backward(
    dims: &AeDims,
    layers: &[super::LayerView<'_>; 4],
    offsets: &[(usize, usize); 4],
    x: &[f64],
    z: &[f64],
    z2: &[f64],
    z3: &[f64],
    xhat: &[f64],
    sparse_delta: &[f64],
    n: f64,
    g: &mut [f64],
) {
    let scale = 2.0 / (n * dims.input as f64);
    // Output layer (linear): δ4 = ∂L/∂x̂.
    let delta4: Vec<f64> = xhat.iter().zip(x).map(|(a, b)| scale * (a - b)).collect();
    let mut e3 = vec![0.0; dims.h3];
    accumulate(&layers[3], offsets[3], z3, &delta4, &mut e3, g);
    let delta3: Vec<f64> = e3
        .iter()
        .zip(z3)
        .map(|(e, y)| e * layers[2].activation.derivative_from_output(*y))
        .collect();
    let mut e2 = vec![0.0; dims.h2];
    accumulate(&layers[2], offsets[2], z2, &delta3, &mut e2, g);
    let delta2: Vec<f64> = e2
        .iter()
        .zip(z2)
        .map(|(e, y)| e * layers[1].activation.derivative_from_output(*y))
        .collect();
    let mut e1 = vec![0.0; dims.latent];
    accumulate(&layers[1], offsets[1], z, &delta2, &mut e1, g);
    let delta1: Vec<f64> = e1
        .iter()
        .zip(sparse_delta)
        .zip(z)
        .map(|((e, s), y)| (e + s) * layers[0].activation.derivative_from_output(*y))
        .collect();

    let (w, b) = offsets[0];
    let cols = layers[0].cols;
    for (r, &dr) in delta1.iter().enumerate() {
        g[b + r] += dr;
        let row = &mut g[w + r * cols..w + (r + 1) * cols];
        for (gv, &xv) in row.iter_mut().zip(x) {
            if xv != 0.0 {
                *gv += dr * xv;
            }
        }
    }
}

/// Adds `δ ⊗ input` to the layer's weight gradient and `δ` to its bias
/// gradient, and writes `Wᵀ·δ` into `back`.
fn accumulate(
    layer: &super::LayerView<'_>,
    (w, b): (usize, usize),
    input: &[f64],
    delta: &[f64],
    back: &mut [f64],
    g: &mut [f64],
) {
    let cols = layer.cols;
    for (r, &dr) in delta.iter().enumerate() {
        g[b + r] += dr;
        let wrow = &layer.weights[r * cols..(r + 1) * cols];
        let grow = &mut g[w + r * cols..w + (r + 1) * cols];
        for c in 0..cols {
            grow[c] += dr * input[c];
            back[c] += wrow[c] * dr;
        }
    }
}

/// Regularized training loss of `m` on `batch`.
pub fn loss(m: &AeModel, batch: &[Vec<f64>], cfg: &TrainConfig) -> Result<LossBreakdown> {
    check_batch(&m.dims, batch)?;
    Ok(evaluate(&m.dims, m.activations(), m.params(), batch, cfg, false).0)
}

/// Exact gradient of `loss(m, batch, cfg).total` with respect to every
/// parameter, in the model's canonical flat order.
pub fn gradient(m: &AeModel, batch: &[Vec<f64>], cfg: &TrainConfig) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(m, batch, cfg)?.1)
}

pub fn loss_and_gradient(
    m: &AeModel,
    batch: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, Vec<f64>)> {
    check_batch(&m.dims, batch)?;
    let (l, g) = evaluate(&m.dims, m.activations(), m.params(), batch, cfg, true);
    Ok((l, g.expect("gradient requested")))
}

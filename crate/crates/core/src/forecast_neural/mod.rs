//! Single-layer LSTM, GRU and temporal-CNN forecasters with a dense scalar
//! head, trained by minibatch Adam with L2 on the input layer and early
//! stopping on validation MSE.

mod adam;
mod cnn;
mod gru;
mod lstm;
mod ops;
mod params;
mod train;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{WindowView, WindowedDataset};

pub use adam::{adam_step, AdamState};
pub use params::{init_params, Layout, NetworkParams};
pub use train::{train, EarlyStopping, Observation, TrainTrace, Trained};

/// Windows per parallel work unit when accumulating batch gradients. Fixed so
/// the reduction order (and thus every bit of the result) does not depend on
/// the thread count.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Lstm,
    Gru,
    Cnn,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Lstm => "lstm",
            Arch::Gru => "gru",
            Arch::Cnn => "cnn",
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub arch: Arch,
    pub hidden_size: usize,
    pub kernel_count: usize,
    pub kernel_width: usize,
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Lstm,
            hidden_size: 32,
            kernel_count: 5,
            kernel_width: 5,
            l2_lambda: 1e-4,
            batch_size: 128,
            max_epochs: 100,
            patience: 3,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn with_arch(arch: Arch) -> Self {
        Self {
            arch,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1");
        }
        if self.kernel_count == 0 || self.kernel_width == 0 {
            return bad("kernel_count and kernel_width must be at least 1");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return bad("max_epochs and patience must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Intermediate activations kept by [`forward`] for backpropagation.
#[derive(Debug, Clone)]
pub enum ForwardCache {
    Lstm(lstm::Cache),
    Gru(gru::Cache),
    Cnn(cnn::Cache),
}

pub fn forward(params: &NetworkParams, window: WindowView<'_>) -> Result<(f64, ForwardCache)> {
    params.check_window(window.l, window.n)?;
    Ok(forward_unchecked(params, &window))
}

fn forward_unchecked(params: &NetworkParams, x: &WindowView<'_>) -> (f64, ForwardCache) {
    match params.arch {
        Arch::Lstm => {
            let (y, c) = lstm::forward(params, x);
            (y, ForwardCache::Lstm(c))
        }
        Arch::Gru => {
            let (y, c) = gru::forward(params, x);
            (y, ForwardCache::Gru(c))
        }
        Arch::Cnn => {
            let (y, c) = cnn::forward(params, x);
            (y, ForwardCache::Cnn(c))
        }
    }
}

/// Accumulate `dy · ∂ŷ/∂params` into `grad`.
fn backward(params: &NetworkParams, x: &WindowView<'_>, cache: &ForwardCache, dy: f64, grad: &mut [f64]) {
    match cache {
        ForwardCache::Lstm(c) => lstm::backward(params, x, c, dy, grad),
        ForwardCache::Gru(c) => gru::backward(params, x, c, dy, grad),
        ForwardCache::Cnn(c) => cnn::backward(params, x, c, dy, grad),
    }
}

pub fn predict(params: &NetworkParams, window: WindowView<'_>) -> Result<f64> {
    forward(params, window).map(|(y, _)| y)
}

/// Predictions for every window of `ds`, in order.
pub fn predict_batch(params: &NetworkParams, ds: &WindowedDataset) -> Result<Vec<f64>> {
    params.check_window(ds.width(), ds.n_features())?;
    Ok((0..ds.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| forward_unchecked(params, &ds.view(i)).0)
        .collect())
}

/// Sum of squared errors and its gradient (data term only) over `indices`.
fn data_sse_grad(params: &NetworkParams, ds: &WindowedDataset, indices: &[usize]) -> (f64, Vec<f64>) {
    let partials: Vec<(f64, Vec<f64>)> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; params.len()];
            let mut sse = 0.0;
            for &i in chunk {
                let x = ds.view(i);
                let (y, cache) = forward_unchecked(params, &x);
                let r = y - ds.target(i);
                sse += r * r;
                backward(params, &x, &cache, 2.0 * r, &mut grad);
            }
            (sse, grad)
        })
        .collect();
    let mut sse = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (s, g) in partials {
        sse += s;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (sse, grad)
}

/// Minibatch objective over `indices`: returns (loss, data MSE, gradient).
pub(crate) fn batch_objective(
    params: &NetworkParams,
    ds: &WindowedDataset,
    indices: &[usize],
    l2_lambda: f64,
) -> (f64, f64, Vec<f64>) {
    let (sse, mut grad) = data_sse_grad(params, ds, indices);
    let m = indices.len() as f64;
    grad.iter_mut().for_each(|g| *g /= m);
    let mut penalty = 0.0;
    let reg = params.regularized();
    for (g, w) in grad[reg.clone()].iter_mut().zip(&params.values[reg]) {
        penalty += w * w;
        *g += 2.0 * l2_lambda * w;
    }
    let mse = sse / m;
    (mse + l2_lambda * penalty, mse, grad)
}

/// Batch MSE plus `l2_lambda · Σ w²` over the input layer, with its gradient.
pub fn loss_and_grads(
    params: &NetworkParams,
    batch: &WindowedDataset,
    l2_lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("loss over an empty batch"));
    }
    params.check_window(batch.width(), batch.n_features())?;
    let indices: Vec<usize> = (0..batch.len()).collect();
    let (loss, _, grad) = batch_objective(params, batch, &indices, l2_lambda);
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite ({loss})")));
    }
    Ok((loss, grad))
}

const FD_STEP: f64 = 1e-5;

/// Largest relative error between analytic gradients and central finite
/// differences, over every coordinate of freshly initialized parameters.
/// Relative error is `|a − f| / max(|a| + |f|, 1e-6)`.
pub fn grad_check(cfg: &NetworkConfig, batch: &WindowedDataset) -> Result<f64> {
    let params = init_params(cfg, batch.n_features(), batch.width())?;
    grad_check_at(&params, batch, cfg.l2_lambda)
}

/// [`grad_check`] at given parameters.
pub fn grad_check_at(params: &NetworkParams, batch: &WindowedDataset, l2_lambda: f64) -> Result<f64> {
    let (_, analytic) = loss_and_grads(params, batch, l2_lambda)?;
    let indices: Vec<usize> = (0..batch.len()).collect();
    let loss_at = |p: &NetworkParams| batch_objective(p, batch, &indices, l2_lambda).0;
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (k, a) in analytic.iter().enumerate() {
        let orig = probe.values[k];
        probe.values[k] = orig + FD_STEP;
        let up = loss_at(&probe);
        probe.values[k] = orig - FD_STEP;
        let down = loss_at(&probe);
        probe.values[k] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;

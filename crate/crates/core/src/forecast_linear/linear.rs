use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::NormalEquations;
use crate::types::{WindowView, WindowedDataset};

use super::exogenous_features;

/// `ŷ = Wᵀx + b` on the exogenous features of a window's final timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Window feature indices that `weights` apply to.
    pub features: Vec<usize>,
    pub ridge_fallback: bool,
}

impl LinearModel {
    pub fn predict_features(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

/// Least-squares fit through the normal equations, ignoring temporal order.
pub fn fit_linear(ds: &WindowedDataset) -> Result<LinearModel> {
    let features = exogenous_features(ds);
    let k = features.len();
    if ds.len() <= k {
        return Err(Error::IllPosed(format!(
            "{} samples cannot determine {k} weights",
            ds.len()
        )));
    }
    let mut ne = NormalEquations::new(k + 1);
    let mut row = vec![1.0; k + 1];
    for (i, w) in ds.views().enumerate() {
        let last = w.last_step();
        for (slot, &f) in row.iter_mut().zip(&features) {
            *slot = last[f];
        }
        ne.add_row(&row, ds.target(i));
    }
    let fit = ne.solve()?;
    Ok(LinearModel {
        weights: fit.coef[..k].to_vec(),
        bias: fit.coef[k],
        features,
        ridge_fallback: fit.ridge,
    })
}

pub fn predict_linear(model: &LinearModel, window: WindowView<'_>) -> Result<f64> {
    if model.features.iter().any(|&f| f >= window.n) {
        return Err(Error::invalid(format!(
            "model reads feature {} but window has {}",
            model.features.iter().max().copied().unwrap_or(0),
            window.n
        )));
    }
    let last = window.last_step();
    let x: Vec<f64> = model.features.iter().map(|&f| last[f]).collect();
    Ok(model.predict_features(&x))
}

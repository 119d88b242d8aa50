use crate::error::{Error, Result};
use crate::forecast_neural::{predict_batch, NetworkParams};
use crate::linalg::NormalEquations;
use crate::types::WindowedDataset;

use super::Combiner;

#[derive(Debug, Clone, PartialEq)]
pub struct StackerFit {
    pub combiner: Combiner,
    /// The design was singular and the mean combiner (weights 1/m, bias 0) was used.
    pub mean_fallback: bool,
}

/// Least-squares combiner `y ≈ wᵀ p + b` over per-member predictions
/// (`predictions[j][i]` is member `j` on sample `i`).
pub fn fit_stacker_on_predictions(predictions: &[Vec<f64>], targets: &[f64]) -> Result<StackerFit> {
    let m = predictions.len();
    if m == 0 || targets.is_empty() {
        return Err(Error::invalid("stacking needs at least one member and one sample"));
    }
    if predictions.iter().any(|p| p.len() != targets.len()) {
        return Err(Error::invalid("member predictions and targets differ in length"));
    }
    let mut ne = NormalEquations::new(m + 1);
    let mut row = vec![1.0; m + 1];
    for (i, y) in targets.iter().enumerate() {
        for (r, p) in row.iter_mut().zip(predictions) {
            *r = p[i];
        }
        ne.add_row(&row, *y);
    }
    Ok(match ne.solve_exact() {
        Some(coef) if coef.iter().all(|c| c.is_finite()) => StackerFit {
            combiner: Combiner::Stacker {
                weights: coef[..m].to_vec(),
                bias: coef[m],
            },
            mean_fallback: false,
        },
        _ => StackerFit {
            combiner: Combiner::Stacker {
                weights: vec![1.0 / m as f64; m],
                bias: 0.0,
            },
            mean_fallback: true,
        },
    })
}

/// Fit the stacking combiner on the validation set.
pub fn fit_stacker(members: &[NetworkParams], val: &WindowedDataset) -> Result<StackerFit> {
    let preds = members
        .iter()
        .map(|p| predict_batch(p, val))
        .collect::<Result<Vec<_>>>()?;
    fit_stacker_on_predictions(&preds, val.targets())
}

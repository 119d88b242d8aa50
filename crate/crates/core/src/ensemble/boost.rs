use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast_neural::{predict_batch, NetworkConfig};
use crate::rng::derive_seed;
use crate::types::WindowedDataset;

use super::{train_member, Combiner, EnsembleFit, EnsembleMethod, EnsembleModel};

/// Which samples the residuals that pick the next train set are computed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualScope {
    /// The full original train set.
    #[default]
    Original,
    /// Only the set the learner was just trained on.
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub train_size: usize,
    /// Indices into the original train set whose absolute residual under this
    /// round's learner exceeds the threshold.
    pub next_indices: Vec<usize>,
}

/// Sequential threshold boosting: learner `i` trains on the samples that
/// learner `i − 1` got wrong by more than `threshold`. Stops early once the
/// next set is empty or smaller than one batch. Members are mean-combined.
pub fn train_boosting(
    cfg: &NetworkConfig,
    m: usize,
    threshold: f64,
    scope: ResidualScope,
    train: &WindowedDataset,
    val: &WindowedDataset,
) -> Result<EnsembleFit> {
    if m == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid(format!("boost threshold must be positive, got {threshold}")));
    }
    let mut current: Vec<usize> = (0..train.len()).collect();
    let mut members = Vec::new();
    let mut rounds = Vec::new();
    for i in 0..m {
        let subset = train.select(&current);
        let fit = train_member(cfg, derive_seed(cfg.seed, i as u64), &subset, val)?;
        let candidates = match scope {
            ResidualScope::Original => (0..train.len()).collect(),
            ResidualScope::Current => current.clone(),
        };
        let eval = match scope {
            ResidualScope::Original => train.clone(),
            ResidualScope::Current => subset,
        };
        let preds = predict_batch(&fit.params, &eval)?;
        let next: Vec<usize> = candidates
            .into_iter()
            .zip(eval.targets().iter().zip(&preds))
            .filter(|(_, (y, p))| (*y - *p).abs() > threshold)
            .map(|(k, _)| k)
            .collect();
        members.push(fit);
        rounds.push(BoostRound {
            train_size: current.len(),
            next_indices: next.clone(),
        });
        if next.is_empty() || next.len() < cfg.batch_size {
            break;
        }
        current = next;
    }
    Ok(EnsembleFit {
        model: EnsembleModel {
            method: EnsembleMethod::Boosting,
            members: members.iter().map(|f| f.params.clone()).collect(),
            combiner: Combiner::Mean,
            boost_threshold: Some(threshold),
        },
        members,
        rounds,
    })
}

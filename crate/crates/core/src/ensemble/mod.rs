//! Bagging, threshold boosting and stacking over homogeneous neural members.

mod boost;
mod stack;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast_neural::{self, predict_batch, NetworkConfig, NetworkParams, TrainTrace, Trained};
use crate::rng::{derive_seed, seeded};
use crate::types::{WindowView, WindowedDataset};

pub use boost::{train_boosting, BoostRound, ResidualScope};
pub use stack::{fit_stacker, fit_stacker_on_predictions, StackerFit};

/// Seed stream for the bootstrap draw of a member, apart from its init seed.
const BOOTSTRAP_STREAM: u64 = 0x0b00_7575;
const RETRY_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMethod {
    Bagging,
    Boosting,
}

impl std::fmt::Display for EnsembleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleMethod::Bagging => "bagging",
            EnsembleMethod::Boosting => "boosting",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Combiner {
    Mean,
    Stacker { weights: Vec<f64>, bias: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub method: EnsembleMethod,
    pub members: Vec<NetworkParams>,
    pub combiner: Combiner,
    /// Residual threshold used to build the member train sets (boosting only).
    pub boost_threshold: Option<f64>,
}

/// A trained member with its bookkeeping.
#[derive(Debug, Clone)]
pub struct MemberFit {
    pub params: NetworkParams,
    pub trace: TrainTrace,
    /// Seed the member was finally trained with.
    pub seed: u64,
    pub retried: bool,
    pub train_size: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleFit {
    pub model: EnsembleModel,
    pub members: Vec<MemberFit>,
    /// Boosting rounds; empty for bagging.
    pub rounds: Vec<BoostRound>,
}

/// Indices of `n_prime` draws, uniform with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, n_prime: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    (0..n_prime).map(|_| rng.random_range(0..n)).collect()
}

pub fn bootstrap_sample(ds: &WindowedDataset, n_prime: usize, seed: u64) -> Result<WindowedDataset> {
    if ds.is_empty() {
        return Err(Error::invalid("bootstrap from an empty dataset"));
    }
    if n_prime == 0 {
        return Err(Error::invalid("bootstrap sample size must be at least 1"));
    }
    Ok(ds.select(&bootstrap_indices(ds.len(), n_prime, seed)))
}

/// Train one member, retrying once with a fresh seed if it diverges.
pub(crate) fn train_member(
    cfg: &NetworkConfig,
    seed: u64,
    train: &WindowedDataset,
    val: &WindowedDataset,
) -> Result<MemberFit> {
    let attempt = |seed| {
        let cfg = NetworkConfig { seed, ..cfg.clone() };
        forecast_neural::train(&cfg, train, val)
    };
    let (Trained { params, trace }, seed, retried) = match attempt(seed) {
        Ok(t) => (t, seed, false),
        Err(Error::Diverged { .. }) => {
            let fresh = derive_seed(seed, RETRY_STREAM);
            (attempt(fresh)?, fresh, true)
        }
        Err(e) => return Err(e),
    };
    Ok(MemberFit {
        params,
        trace,
        seed,
        retried,
        train_size: train.len(),
    })
}

/// `m` members, each trained on its own bootstrap resample of `train`
/// (member `i` seeded by `derive_seed(cfg.seed, i)`), combined by the mean.
pub fn train_bagging(
    cfg: &NetworkConfig,
    m: usize,
    train: &WindowedDataset,
    val: &WindowedDataset,
) -> Result<EnsembleFit> {
    if m == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    let members = (0..m)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i as u64);
            let sample = bootstrap_sample(train, train.len(), derive_seed(seed, BOOTSTRAP_STREAM))?;
            train_member(cfg, seed, &sample, val)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleFit {
        model: EnsembleModel {
            method: EnsembleMethod::Bagging,
            members: members.iter().map(|f| f.params.clone()).collect(),
            combiner: Combiner::Mean,
            boost_threshold: None,
        },
        members,
        rounds: Vec::new(),
    })
}

/// Per-member predictions over `ds`, member-major.
pub fn member_predictions(model: &EnsembleModel, ds: &WindowedDataset) -> Result<Vec<Vec<f64>>> {
    model.members.iter().map(|p| predict_batch(p, ds)).collect()
}

fn combine(combiner: &Combiner, preds: impl Iterator<Item = f64>) -> f64 {
    match combiner {
        Combiner::Mean => {
            let (sum, count) = preds.fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
            sum / count as f64
        }
        Combiner::Stacker { weights, bias } => bias + weights.iter().zip(preds).map(|(w, p)| w * p).sum::<f64>(),
    }
}

pub fn ensemble_predict(model: &EnsembleModel, window: WindowView<'_>) -> Result<f64> {
    let preds = model
        .members
        .iter()
        .map(|p| forecast_neural::predict(p, window))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(&model.combiner, preds.into_iter()))
}

/// Combined predictions for every window of `ds`.
pub fn ensemble_predict_batch(model: &EnsembleModel, ds: &WindowedDataset) -> Result<Vec<f64>> {
    let per_member = member_predictions(model, ds)?;
    Ok(combine_predictions(&model.combiner, &per_member, ds.len()))
}

pub fn combine_predictions(combiner: &Combiner, per_member: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| combine(combiner, per_member.iter().map(|p| p[i])))
        .collect()
}

#[cfg(test)]
mod tests;

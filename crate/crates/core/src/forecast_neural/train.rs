use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::stats::evaluate_metrics;
use crate::types::WindowedDataset;

use super::adam::{adam_step, AdamState};
use super::params::{init_params, NetworkParams};
use super::{batch_objective, predict_batch, NetworkConfig};

/// Stream index for minibatch shuffling, separate from initialization.
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean data MSE over the epoch's minibatches (sample weighted).
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch numbers.
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub restored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    /// Strictly below every earlier validation loss.
    pub improved: bool,
    pub stop: bool,
}

/// Patience rule: an epoch is "rising" when its validation loss is strictly
/// above the previous epoch's; `patience` consecutive rising epochs stop
/// training.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    epoch: usize,
    prev: Option<f64>,
    rising: usize,
    best: Option<(usize, f64)>,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            epoch: 0,
            prev: None,
            rising: 0,
            best: None,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> Observation {
        self.epoch += 1;
        match self.prev {
            Some(prev) if val_loss > prev => self.rising += 1,
            _ => self.rising = 0,
        }
        self.prev = Some(val_loss);
        let improved = self.best.is_none_or(|(_, b)| val_loss < b);
        if improved {
            self.best = Some((self.epoch, val_loss));
        }
        Observation {
            improved,
            stop: self.rising >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best.map(|(_, l)| l)
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    /// Parameters from the best validation epoch.
    pub params: NetworkParams,
    pub trace: TrainTrace,
}

fn diverged(epoch: usize, message: String, trace: &TrainTrace) -> Error {
    Error::Diverged {
        epoch,
        message,
        trace: Box::new(trace.clone()),
    }
}

/// Train a fresh network on `train`, early-stopping on `val`.
pub fn train(cfg: &NetworkConfig, train: &WindowedDataset, val: &WindowedDataset) -> Result<Trained> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    if train.width() != val.width() || train.n_features() != val.n_features() {
        return Err(Error::invalid("training and validation windows differ in shape"));
    }
    let mut params = init_params(cfg, train.n_features(), train.width())?;
    let mut adam = AdamState::new(params.len());
    let mut rng = seeded(derive_seed(cfg.seed, SHUFFLE_STREAM));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = params.clone();
    let mut trace = TrainTrace::default();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sse = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, mse, grad) = batch_objective(&params, train, batch, cfg.l2_lambda);
            if !loss.is_finite() {
                return Err(diverged(epoch, format!("training loss {loss}"), &trace));
            }
            sse += mse * batch.len() as f64;
            adam_step(&mut params.values, &grad, &mut adam, cfg.learning_rate);
        }
        let preds = predict_batch(&params, val)?;
        let val_loss = evaluate_metrics(val.targets(), &preds)?.mse;
        if !val_loss.is_finite() {
            return Err(diverged(epoch, format!("validation loss {val_loss}"), &trace));
        }
        trace.train_loss.push(sse / train.len() as f64);
        trace.val_loss.push(val_loss);
        trace.stopped_epoch = epoch;
        let obs = stopper.observe(val_loss);
        if obs.improved {
            best.values.copy_from_slice(&params.values);
        }
        if obs.stop {
            break;
        }
    }
    trace.best_epoch = stopper.best_epoch().unwrap_or(0);
    trace.restored = trace.best_epoch != trace.stopped_epoch;
    Ok(Trained {
        params: best,
        trace,
    })
}

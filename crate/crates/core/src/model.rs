//! A fitted forecaster of any kind behind one prediction interface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_predict, ensemble_predict_batch, EnsembleModel};
use crate::error::Result;
use crate::forecast_linear::{predict_arimax, predict_linear, ArimaxModel, LinearModel};
use crate::forecast_neural::{self, NetworkParams};
use crate::types::{WindowView, WindowedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Arimax,
    Network,
    Ensemble,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Arimax => "arimax",
            ModelKind::Network => "network",
            ModelKind::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForecastModel {
    Linear(LinearModel),
    Arimax(ArimaxModel),
    Network(NetworkParams),
    Ensemble(EnsembleModel),
}

impl ForecastModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ForecastModel::Linear(_) => ModelKind::Linear,
            ForecastModel::Arimax(_) => ModelKind::Arimax,
            ForecastModel::Network(_) => ModelKind::Network,
            ForecastModel::Ensemble(_) => ModelKind::Ensemble,
        }
    }

    pub fn predict(&self, window: WindowView<'_>) -> Result<f64> {
        match self {
            ForecastModel::Linear(m) => predict_linear(m, window),
            ForecastModel::Arimax(m) => predict_arimax(m, window),
            ForecastModel::Network(p) => forecast_neural::predict(p, window),
            ForecastModel::Ensemble(e) => ensemble_predict(e, window),
        }
    }

    /// Predictions for every window of `ds`, in order.
    pub fn predict_batch(&self, ds: &WindowedDataset) -> Result<Vec<f64>> {
        match self {
            ForecastModel::Network(p) => forecast_neural::predict_batch(p, ds),
            ForecastModel::Ensemble(e) => ensemble_predict_batch(e, ds),
            _ => (0..ds.len())
                .into_par_iter()
                .with_min_len(256)
                .map(|i| self.predict(ds.view(i)))
                .collect(),
        }
    }
}

//! Forecasting toolkit for vertical track heights.

pub mod ensemble;
pub mod error;
pub mod forecast_linear;
pub mod forecast_neural;
pub mod ingest;
mod linalg;
pub mod model;
pub mod persistence;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use model::{ForecastModel, ModelKind};
pub use stats::{evaluate_metrics, pearson, CorrelationReport, MetricsPair};
pub use types::{RawTable, SplitSet, WindowView, WindowedDataset};

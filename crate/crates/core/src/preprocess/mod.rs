//! Cleansing, feature selection, scaling, windowing, splitting and
//! proportional filtering, applied in that order.

mod cleanse;
mod filter;
mod scale;
mod select;
mod split;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cleanse::{drop_constant_features, remove_outliers_zscore};
pub use filter::{
    proportional_filter, variance_histogram, window_variance, FilterConfig, FilterOutcome,
};
pub use scale::{apply_scaler, fit_scaler, ScalingParams};
pub use select::{select_features, CorrelationRule, FeatureSelection};
pub use split::{shuffle_split, split_sizes};
pub use window::{make_windows, window_features};

/// Settings for the preprocessing stages that precede model training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub zscore_threshold: f64,
    /// Manual |r| cut-off; `None` uses the mean |r| rule.
    pub correlation_threshold: Option<f64>,
    pub window_width: usize,
    /// (train, test, val)
    pub split_fractions: (f64, f64, f64),
    pub shuffle_seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            zscore_threshold: 4.0,
            correlation_threshold: None,
            window_width: 8,
            split_fractions: (0.85, 0.10, 0.05),
            shuffle_seed: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.zscore_threshold.is_nan() || self.zscore_threshold <= 0.0 {
            return Err(Error::invalid("zscore_threshold must be positive"));
        }
        if let Some(t) = self.correlation_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("correlation_threshold must lie in [0, 1]"));
            }
        }
        if self.window_width < 2 {
            return Err(Error::invalid("window_width must be at least 2"));
        }
        split::check_fractions(self.split_fractions)
    }

    pub fn correlation_rule(&self) -> CorrelationRule {
        match self.correlation_threshold {
            Some(t) => CorrelationRule::Manual(t),
            None => CorrelationRule::MeanThreshold,
        }
    }
}

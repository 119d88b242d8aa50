use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::ResidualScope;
use crate::error::{Error, Result};
use crate::forecast_linear::ArimaxOrder;
use crate::forecast_neural::{Arch, NetworkConfig};
use crate::ingest::{CsvSchema, SynthConfig};
use crate::preprocess::{FilterConfig, PreprocessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Lr,
    Arima,
    Lstm,
    Gru,
    Cnn,
}

impl ModelName {
    pub const ALL: [ModelName; 5] = [ModelName::Lr, ModelName::Arima, ModelName::Lstm, ModelName::Gru, ModelName::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Lr => "lr",
            ModelName::Arima => "arima",
            ModelName::Lstm => "lstm",
            ModelName::Gru => "gru",
            ModelName::Cnn => "cnn",
        }
    }

    pub fn arch(self) -> Option<Arch> {
        match self {
            ModelName::Lstm => Some(Arch::Lstm),
            ModelName::Gru => Some(Arch::Gru),
            ModelName::Cnn => Some(Arch::Cnn),
            _ => None,
        }
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected lr, arima, lstm, gru or cnn)")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleChoice {
    #[default]
    None,
    Bagging,
    Boosting,
}

impl FromStr for EnsembleChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "bagging" => Ok(Self::Bagging),
            "boosting" => Ok(Self::Boosting),
            _ => Err(Error::Config(format!("unknown ensemble `{s}` (expected none, bagging or boosting)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub models: Vec<ModelName>,
    /// `[p, d, q]` per ARIMA model.
    pub arima_orders: Vec<[usize; 3]>,
    pub hidden_size: usize,
    pub kernel_count: usize,
    pub kernel_width: usize,
    /// Model trained by the filter sweep; defaults to the first neural model.
    pub sweep_model: Option<ModelName>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let net = NetworkConfig::default();
        Self {
            models: ModelName::ALL.to_vec(),
            arima_orders: vec![[3, 0, 0], [5, 1, 0], [8, 2, 3]],
            hidden_size: net.hidden_size,
            kernel_count: net.kernel_count,
            kernel_width: net.kernel_width,
            sweep_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let net = NetworkConfig::default();
        Self {
            l2_lambda: net.l2_lambda,
            batch_size: net.batch_size,
            max_epochs: net.max_epochs,
            patience: net.patience,
            learning_rate: net.learning_rate,
            seed: net.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub method: EnsembleChoice,
    pub members: usize,
    pub boost_threshold: f64,
    pub residual_scope: ResidualScope,
    pub stack: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            method: EnsembleChoice::None,
            members: 5,
            boost_threshold: 0.15,
            residual_scope: ResidualScope::Original,
            stack: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthConfig,
    /// Header names of the id and target columns in the input CSV.
    pub schema: CsvSchema,
    pub preprocess: PreprocessConfig,
    pub filter: FilterConfig,
    pub model: ModelSection,
    pub ensemble: EnsembleSection,
    pub train: TrainSection,
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub models: Option<Vec<ModelName>>,
    pub ensemble: Option<EnsembleChoice>,
    pub stack: bool,
    pub filter_proportion: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read and validate a config file. A missing or malformed file is a
    /// configuration error naming the path.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &RunOverrides) {
        if let Some(models) = &o.models {
            self.model.models = models.clone();
        }
        if let Some(e) = o.ensemble {
            self.ensemble.method = e;
        }
        if o.stack {
            self.ensemble.stack = true;
        }
        if let Some(p) = o.filter_proportion {
            self.filter.discard_proportion = p;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.synth.validate().map_err(cfg_err)?;
        self.preprocess.validate().map_err(cfg_err)?;
        self.filter.validate().map_err(cfg_err)?;
        if self.model.models.is_empty() {
            return Err(Error::Config("model.models must name at least one model".into()));
        }
        let mut seen = self.model.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.model.models.len() {
            return Err(Error::Config("model.models lists a model twice".into()));
        }
        if self.model.models.contains(&ModelName::Arima) && self.model.arima_orders.is_empty() {
            return Err(Error::Config("arima requested but model.arima_orders is empty".into()));
        }
        for [_, d, _] in &self.model.arima_orders {
            if *d > 2 {
                return Err(Error::Config("ARIMA differencing degree above 2 is not supported".into()));
            }
        }
        for m in &self.model.models {
            if let Some(arch) = m.arch() {
                self.network(arch).validate().map_err(cfg_err)?;
            }
        }
        if self.model.models.contains(&ModelName::Cnn) && self.model.kernel_width >= self.preprocess.window_width {
            return Err(Error::Config(format!(
                "kernel_width {} must be smaller than window_width {}",
                self.model.kernel_width, self.preprocess.window_width
            )));
        }
        if self.ensemble.members == 0 {
            return Err(Error::Config("ensemble.members must be at least 1".into()));
        }
        if self.ensemble.boost_threshold.is_nan() || self.ensemble.boost_threshold <= 0.0 {
            return Err(Error::Config("ensemble.boost_threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn network(&self, arch: Arch) -> NetworkConfig {
        let t = &self.train;
        NetworkConfig {
            arch,
            hidden_size: self.model.hidden_size,
            kernel_count: self.model.kernel_count,
            kernel_width: self.model.kernel_width,
            l2_lambda: t.l2_lambda,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            learning_rate: t.learning_rate,
            seed: t.seed,
        }
    }

    pub fn arima_orders(&self) -> Vec<ArimaxOrder> {
        self.model
            .arima_orders
            .iter()
            .map(|&[p, d, q]| ArimaxOrder::new(p, d, q))
            .collect()
    }

    /// Window width built by preprocessing: wide enough for every configured
    /// ARIMA order, never below the model window width.
    pub fn context_width(&self) -> usize {
        self.arima_orders()
            .iter()
            .map(ArimaxOrder::preferred_width)
            .fold(self.preprocess.window_width, usize::max)
    }

    /// Model trained by the filter sweep.
    pub fn sweep_model(&self) -> ModelName {
        self.model.sweep_model.unwrap_or_else(|| {
            let models = &self.model.models;
            models
                .iter()
                .copied()
                .find(|m| m.arch().is_some())
                .unwrap_or(models[0])
        })
    }
}

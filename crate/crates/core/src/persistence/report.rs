//! JSON run and sweep reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forecast_linear::{InitMethod, RefineStatus};
use crate::forecast_neural::TrainTrace;
use crate::preprocess::ScalingParams;
use crate::stats::MetricsPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitMetrics {
    pub train: MetricsPair,
    pub val: MetricsPair,
    pub test: MetricsPair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationAudit {
    /// Pearson r of each candidate feature with the target, by column name.
    pub per_feature_r: BTreeMap<String, f64>,
    pub mean_abs_r: f64,
    pub threshold: f64,
    pub selected: Vec<String>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowAudit {
    pub width: usize,
    /// Width of the windows built for models that need a longer history.
    pub context_width: usize,
    pub features: Vec<String>,
    pub total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterAudit {
    pub variance_threshold: f64,
    pub proportion: f64,
    pub candidates: usize,
    pub discarded_count: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessAudit {
    pub input_rows: usize,
    pub input_columns: usize,
    pub dropped_constant: Vec<String>,
    pub zscore_threshold: f64,
    pub outlier_sigma: &'static str,
    pub outliers_removed: usize,
    pub correlation: CorrelationAudit,
    pub scaler: ScalingParams,
    pub windows: WindowAudit,
    pub filter: FilterAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArimaxSummary {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub init: InitMethod,
    pub refine_status: RefineStatus,
    pub refine_steps: usize,
    pub stage1_css: f64,
    pub css: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberEntry {
    pub seed: u64,
    pub train_size: usize,
    pub retried: bool,
    pub metrics: SplitMetrics,
    pub trace: TrainTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackedEntry {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean_fallback: bool,
    pub metrics: SplitMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleEntry {
    pub method: String,
    pub requested_members: usize,
    pub members: Vec<MemberEntry>,
    /// Mean-combined ensemble.
    pub combined: SplitMetrics,
    pub stacked: Option<StackedEntry>,
    pub boost_threshold: Option<f64>,
    /// Size of each boosting round's next train set.
    pub boost_next_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEntry {
    pub name: String,
    pub kind: String,
    pub status: String,
    pub metrics: Option<SplitMetrics>,
    pub trace: Option<TrainTrace>,
    pub arimax: Option<ArimaxSummary>,
    pub ensemble: Option<EnsembleEntry>,
    pub ridge_fallback: Option<bool>,
    pub artifact: Option<String>,
    pub error: Option<String>,
}

impl ModelEntry {
    pub fn new(name: impl Into<String>, kind: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            status: "ok".into(),
            metrics: None,
            trace: None,
            arimax: None,
            ensemble: None,
            ridge_fallback: None,
            artifact: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config: Value,
    pub status: String,
    pub preprocess: PreprocessAudit,
    pub models: Vec<ModelEntry>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds per stage; the only non-deterministic field.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub proportion: f64,
    pub filter: FilterAudit,
    pub status: String,
    pub metrics: Option<SplitMetrics>,
    pub trace: Option<TrainTrace>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub version: String,
    pub config: Value,
    pub model: String,
    pub status: String,
    pub preprocess: PreprocessAudit,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

/// `x` rounded to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(|x| round_significant(x, 6)) {
                if let Some(num) = serde_json::Number::from_f64(r) {
                    *n = num;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats at 6 significant digits.
pub fn to_report_json(report: &impl Serialize) -> Result<String> {
    let mut v = serde_json::to_value(report).map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(report: &impl Serialize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_report_json(report)?).map_err(|e| Error::io(path, e))
}

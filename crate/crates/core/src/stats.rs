//! Evaluation metrics and Pearson correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsPair {
    pub mse: f64,
    pub mae: f64,
}

/// Mean squared error and mean absolute error, summed in index order.
pub fn evaluate_metrics(y: &[f64], y_hat: &[f64]) -> Result<MetricsPair> {
    if y.len() != y_hat.len() {
        return Err(Error::invalid(format!(
            "metric inputs differ in length ({} vs {})",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::invalid("metrics of an empty vector"));
    }
    let mut sq = 0.0;
    let mut abs = 0.0;
    for (a, b) in y.iter().zip(y_hat) {
        let r = a - b;
        sq += r * r;
        abs += r.abs();
    }
    let n = y.len() as f64;
    Ok(MetricsPair {
        mse: sq / n,
        mae: abs / n,
    })
}

/// Pearson correlation coefficient. Zero-variance inputs give exactly 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "pearson inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson needs at least two points"));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation of each candidate feature with the target, keyed by column
/// index in the table that was analysed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub per_feature_r: BTreeMap<usize, f64>,
    pub mean_abs_r: f64,
}

impl CorrelationReport {
    pub fn from_map(per_feature_r: BTreeMap<usize, f64>) -> Self {
        let mean_abs_r = if per_feature_r.is_empty() {
            0.0
        } else {
            per_feature_r.values().map(|r| r.abs()).sum::<f64>() / per_feature_r.len() as f64
        };
        Self {
            per_feature_r,
            mean_abs_r,
        }
    }
}

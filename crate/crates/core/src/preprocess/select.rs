use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{pearson, CorrelationReport};
use crate::types::RawTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrelationRule {
    /// Drop features whose |r| is strictly below the mean |r|.
    MeanThreshold,
    /// Drop features whose |r| is strictly below the given value.
    Manual(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub table: RawTable,
    pub report: CorrelationReport,
    /// Cut-off actually applied.
    pub threshold: f64,
    /// Dropped column indices of the input table.
    pub dropped: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Correlate every feature with the target column and drop the weakly
/// correlated ones. Ties with the cut-off are kept.
pub fn select_features(table: &RawTable, rule: CorrelationRule) -> Result<FeatureSelection> {
    if table.n_rows() < 2 {
        return Err(Error::invalid("feature selection needs at least two rows"));
    }
    let target = table.column(table.target_column());
    let mut per_feature = BTreeMap::new();
    for j in table.feature_columns() {
        per_feature.insert(j, pearson(&target, &table.column(j))?);
    }
    let report = CorrelationReport::from_map(per_feature);
    let threshold = match rule {
        CorrelationRule::MeanThreshold => report.mean_abs_r,
        CorrelationRule::Manual(t) => t,
    };
    let mut warnings = Vec::new();
    if target.iter().all(|&v| v == target[0]) {
        warnings.push("target column is constant; every correlation is zero".to_string());
    }
    let (keep, dropped): (Vec<usize>, Vec<usize>) = report
        .per_feature_r
        .keys()
        .copied()
        .partition(|j| report.per_feature_r[j].abs() >= threshold);
    Ok(FeatureSelection {
        table: table.retain_columns(&keep),
        report,
        threshold,
        dropped,
        warnings,
    })
}

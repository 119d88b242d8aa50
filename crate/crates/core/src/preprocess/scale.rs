use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RawTable;

/// Min/max of each scaled column, keyed by column name.
///
/// Only feature columns are scaled; ids and the target column keep their
/// original units so that heights, their variances and error metrics stay in
/// physical scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(table: &RawTable) -> ScalingParams {
    let mut params = ScalingParams {
        columns: Vec::new(),
        min: Vec::new(),
        max: Vec::new(),
    };
    for j in table.feature_columns() {
        let (lo, hi) = table
            .rows()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (lo, hi) = if lo > hi { (0.0, 0.0) } else { (lo, hi) };
        params.columns.push(table.column_names()[j].clone());
        params.min.push(lo);
        params.max.push(hi);
    }
    params
}

/// `x -> (x - min) / (max - min)`; constant columns map to 0. Values outside
/// the fitted range land outside [0, 1].
pub fn apply_scaler(table: &RawTable, params: &ScalingParams) -> Result<RawTable> {
    let mut out = table.clone();
    for (k, name) in params.columns.iter().enumerate() {
        let j = table
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("scaled column {name:?} missing from table")))?;
        let (lo, hi) = (params.min[k], params.max[k]);
        let range = hi - lo;
        if range > 0.0 {
            out.map_column(j, |x| (x - lo) / range);
        } else {
            out.map_column(j, |_| 0.0);
        }
    }
    Ok(out)
}

use crate::error::{Error, Result};
use crate::types::RawTable;

/// Drop every feature column holding a single unique value. Id and target
/// columns are never dropped. Returned indices refer to the input table.
pub fn drop_constant_features(table: &RawTable) -> (RawTable, Vec<usize>) {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for j in table.feature_columns() {
        let mut values = table.rows().map(|r| r[j]);
        let constant = match values.next() {
            Some(first) => values.all(|v| v == first),
            None => true,
        };
        if constant {
            dropped.push(j);
        } else {
            keep.push(j);
        }
    }
    (table.retain_columns(&keep), dropped)
}

/// Remove rows whose target z-score exceeds `threshold` in absolute value.
///
/// Mean and sample standard deviation are computed once on the input. A
/// zero standard deviation leaves the table unchanged.
pub fn remove_outliers_zscore(table: &RawTable, threshold: f64) -> Result<(RawTable, Vec<usize>)> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid("z-score threshold must be positive"));
    }
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::invalid("outlier removal needs at least two rows"));
    }
    let target = table.column(table.target_column());
    let mean = target.iter().sum::<f64>() / n as f64;
    let var = target.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return Ok((table.clone(), Vec::new()));
    }
    let (removed, kept): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| ((target[i] - mean) / sigma).abs() > threshold);
    Ok((table.retain_rows(&kept), removed))
}

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::types::WindowedDataset;

/// Proportional filtering: randomly drop a share of the "even" windows, those
/// whose target-history variance is below a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub variance_threshold: f64,
    pub discard_proportion: f64,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            variance_threshold: 0.2,
            discard_proportion: 0.0,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variance_threshold.is_nan() || self.variance_threshold < 0.0 {
            return Err(Error::invalid("variance_threshold must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.discard_proportion) {
            return Err(Error::invalid("discard_proportion must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub dataset: WindowedDataset,
    /// Indices (into the input) of the windows that survived, ascending.
    pub kept: Vec<usize>,
    pub candidates: usize,
    pub discarded_count: usize,
}

/// Population variance of one feature column of window `i`.
pub fn window_variance(ds: &WindowedDataset, i: usize, feature: usize) -> f64 {
    let col = ds.view(i).column(feature);
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Remove exactly `floor(proportion * candidates)` low-variance windows,
/// chosen uniformly at random. Windows at or above the threshold are kept.
pub fn proportional_filter(
    ds: &WindowedDataset,
    cfg: &FilterConfig,
    target_feature: usize,
) -> Result<FilterOutcome> {
    cfg.validate()?;
    if target_feature >= ds.n_features() {
        return Err(Error::invalid("target feature index out of range"));
    }
    let candidates: Vec<usize> = (0..ds.len())
        .filter(|&i| window_variance(ds, i, target_feature) < cfg.variance_threshold)
        .collect();
    let discard = (cfg.discard_proportion * candidates.len() as f64).floor() as usize;
    let mut drop = vec![false; ds.len()];
    for pick in index::sample(&mut seeded(cfg.seed), candidates.len(), discard) {
        drop[candidates[pick]] = true;
    }
    let kept: Vec<usize> = (0..ds.len()).filter(|&i| !drop[i]).collect();
    Ok(FilterOutcome {
        dataset: ds.select(&kept),
        kept,
        candidates: candidates.len(),
        discarded_count: discard,
    })
}

/// Histogram of target-history variances. `k` strictly increasing edges give
/// `k + 1` bins: `[0, e0)`, `[e0, e1)`, ..., `[e_{k-1}, inf)`.
pub fn variance_histogram(ds: &WindowedDataset, bin_edges: &[f64]) -> Result<Vec<usize>> {
    if ds.is_empty() {
        return Err(Error::invalid("histogram of an empty dataset"));
    }
    if bin_edges.windows(2).any(|w| w[0] >= w[1]) || bin_edges.iter().any(|e| e.is_nan()) {
        return Err(Error::invalid("bin edges must be strictly increasing"));
    }
    let feature = ds
        .target_feature()
        .ok_or_else(|| Error::invalid("dataset has no target feature column"))?;
    let mut counts = vec![0; bin_edges.len() + 1];
    for i in 0..ds.len() {
        let v = window_variance(ds, i, feature);
        counts[bin_edges.partition_point(|&e| e <= v)] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Width-2 windows whose target column is [-a, a] (variance a^2).
    fn dataset(variances: &[f64]) -> WindowedDataset {
        let windows = variances
            .iter()
            .flat_map(|v| {
                let a = v.sqrt();
                [-a, 1.0, a, 1.0]
            })
            .collect();
        WindowedDataset::new(windows, variances.to_vec(), 2, 2, Some(0)).unwrap()
    }

    fn cfg(p: f64) -> FilterConfig {
        FilterConfig {
            variance_threshold: 0.2,
            discard_proportion: p,
            seed: 3,
        }
    }

    #[test]
    fn proportion_one_keeps_only_uneven() {
        let ds = dataset(&[0.1, 0.3, 0.15, 0.5]);
        let out = proportional_filter(&ds, &cfg(1.0), 0).unwrap();
        assert_eq!(out.kept, vec![1, 3]);
        assert_eq!(out.candidates, 2);
        assert_eq!(out.discarded_count, 2);
    }

    #[test]
    fn proportion_zero_is_noop() {
        let ds = dataset(&[0.1, 0.3, 0.15, 0.5]);
        let out = proportional_filter(&ds, &cfg(0.0), 0).unwrap();
        assert_eq!(out.dataset, ds);
        assert_eq!(out.discarded_count, 0);
    }

    #[test]
    fn half_of_thousand() {
        let mut v = vec![0.01; 1000];
        v.extend([0.5; 37]);
        let ds = dataset(&v);
        let out = proportional_filter(&ds, &cfg(0.5), 0).unwrap();
        assert_eq!(out.candidates, 1000);
        assert_eq!(out.discarded_count, 500);
        assert_eq!(out.dataset.len(), 537);
        assert!((1000..1037).all(|i| out.kept.contains(&i)));
        let again = proportional_filter(&ds, &cfg(0.5), 0).unwrap();
        assert_eq!(out.kept, again.kept);
    }

    #[test]
    fn invalid_proportion() {
        let ds = dataset(&[0.1]);
        assert!(proportional_filter(&ds, &cfg(1.5), 0).is_err());
        assert!(proportional_filter(&ds, &cfg(0.5), 2).is_err());
    }

    #[test]
    fn histogram() {
        let ds = dataset(&[0.0, 0.0, 0.0]);
        assert_eq!(variance_histogram(&ds, &[0.1, 0.2]).unwrap(), vec![3, 0, 0]);
        let ds = dataset(&[0.05, 0.1, 0.15, 0.3, 7.0]);
        let counts = variance_histogram(&ds, &[0.1, 0.2]).unwrap();
        assert_eq!(counts, vec![1, 2, 2]);
        assert_eq!(counts.iter().sum::<usize>(), ds.len());
        assert!(variance_histogram(&ds, &[0.2, 0.1]).is_err());
        assert!(variance_histogram(&dataset(&[]), &[0.1]).is_err());
    }
}

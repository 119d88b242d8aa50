//! Linear-regression baseline and ARIMAX(p, d, q).

mod arimax;
mod diff;
mod linear;

pub use arimax::{fit_arimax, predict_arimax, ArimaxModel, ArimaxOrder, InitMethod, RefineStatus};
pub use diff::{difference, undifference};
pub use linear::{fit_linear, predict_linear, LinearModel};

use crate::types::WindowedDataset;

/// Feature indices other than the target-history column.
pub(crate) fn exogenous_features(ds: &WindowedDataset) -> Vec<usize> {
    (0..ds.n_features())
        .filter(|&f| Some(f) != ds.target_feature())
        .collect()
}

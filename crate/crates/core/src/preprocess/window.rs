use crate::error::{Error, Result};
use crate::ingest::SAMPLE_SPACING;
use crate::types::{RawTable, WindowedDataset};

/// Columns that enter a window (every non-id column, in table order) and the
/// position of the target column among them.
pub fn window_features(table: &RawTable) -> (Vec<usize>, usize) {
    let cols: Vec<usize> = (0..table.n_cols()).filter(|&j| !table.is_id(j)).collect();
    let target = cols
        .iter()
        .position(|&j| j == table.target_column())
        .expect("target is never an id column");
    (cols, target)
}

/// Start index of each maximal contiguous run. A run breaks when the mileage
/// changes or the meters column does not advance by exactly one sample.
fn run_starts(table: &RawTable) -> Vec<usize> {
    let [mileage, meters] = table.id_columns();
    let mut starts = Vec::new();
    for i in 0..table.n_rows() {
        let contiguous = i > 0 && {
            let (prev, cur) = (table.row(i - 1), table.row(i));
            prev[mileage] == cur[mileage]
                && ((cur[meters] - prev[meters]) - SAMPLE_SPACING).abs() < 1e-9
        };
        if !contiguous {
            starts.push(i);
        }
    }
    starts
}

/// Slide a width-`l` window over every contiguous run.
///
/// A run of `R` rows yields `R - l` windows; window `j` holds rows
/// `j..j+l` and its target is the target column of row `j + l`.
pub fn make_windows(table: &RawTable, l: usize) -> Result<WindowedDataset> {
    if l < 2 {
        return Err(Error::invalid("window width must be at least 2"));
    }
    let (cols, target_feature) = window_features(table);
    let n = cols.len();
    let mut starts = run_starts(table);
    starts.push(table.n_rows());
    let target_col = table.target_column();

    let mut windows = Vec::new();
    let mut targets = Vec::new();
    for bounds in starts.windows(2) {
        let (begin, end) = (bounds[0], bounds[1]);
        if end - begin <= l {
            continue;
        }
        for j in begin..end - l {
            for t in j..j + l {
                let row = table.row(t);
                windows.extend(cols.iter().map(|&c| row[c]));
            }
            targets.push(table.value(j + l, target_col));
        }
    }
    WindowedDataset::new(windows, targets, l, n, Some(target_feature))
}

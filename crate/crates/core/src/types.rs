//! Shared domain types: the raw sensor table and windowed datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major table of sensor readings.
///
/// Two identifier columns (mileage, meters) locate each sampled point and one
/// column holds the height to predict. Every other column is a feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    column_names: Vec<String>,
    data: Vec<f64>,
    id_columns: [usize; 2],
    target_column: usize,
}

impl RawTable {
    pub fn new(
        column_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        id_columns: [usize; 2],
        target_column: usize,
    ) -> Result<Self> {
        let width = column_names.len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Format(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    width
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(column_names, data, id_columns, target_column)
    }

    pub fn from_flat(
        column_names: Vec<String>,
        data: Vec<f64>,
        id_columns: [usize; 2],
        target_column: usize,
    ) -> Result<Self> {
        let width = column_names.len();
        if width == 0 {
            return Err(Error::invalid("table needs at least one column"));
        }
        if !data.len().is_multiple_of(width) {
            return Err(Error::Format(format!(
                "{} values do not fill rows of width {width}",
                data.len()
            )));
        }
        let [a, b] = id_columns;
        if a >= width || b >= width || target_column >= width {
            return Err(Error::invalid("id/target column index out of range"));
        }
        if a == b || a == target_column || b == target_column {
            return Err(Error::invalid("id and target columns must be distinct"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / width + 1,
                column: pos % width + 1,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            column_names,
            data,
            id_columns,
            target_column,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.column_names.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn id_columns(&self) -> [usize; 2] {
        self.id_columns
    }

    pub fn target_column(&self) -> usize {
        self.target_column
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.data[row * self.n_cols() + column]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn is_id(&self, j: usize) -> bool {
        self.id_columns.contains(&j)
    }

    /// Non-id, non-target column indices in file order.
    pub fn feature_columns(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| !self.is_id(j) && j != self.target_column)
            .collect()
    }

    /// Keep the listed columns (in ascending order); id and target columns are
    /// always retained.
    pub fn retain_columns(&self, keep: &[usize]) -> RawTable {
        let mut cols: Vec<usize> = keep.to_vec();
        cols.extend(self.id_columns);
        cols.push(self.target_column);
        cols.sort_unstable();
        cols.dedup();
        let remap = |old: usize| cols.iter().position(|&c| c == old).expect("retained");
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        RawTable {
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            data,
            id_columns: [remap(self.id_columns[0]), remap(self.id_columns[1])],
            target_column: remap(self.target_column),
        }
    }

    pub fn retain_rows(&self, keep: &[usize]) -> RawTable {
        let data = keep.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        RawTable {
            column_names: self.column_names.clone(),
            data,
            id_columns: self.id_columns,
            target_column: self.target_column,
        }
    }

    pub(crate) fn map_column(&mut self, j: usize, f: impl Fn(f64) -> f64) {
        let w = self.n_cols();
        for row in self.data.chunks_exact_mut(w) {
            row[j] = f(row[j]);
        }
    }
}

/// `m` windows of `l` timesteps by `n` features, plus one scalar target each.
///
/// Windows are stored contiguously, timestep-major: element `(i, t, f)` lives
/// at `i * l * n + t * n + f`. `target_feature` names the feature column that
/// carries past values of the target series, when there is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    windows: Vec<f64>,
    targets: Vec<f64>,
    l: usize,
    n: usize,
    target_feature: Option<usize>,
}

impl WindowedDataset {
    pub fn new(
        windows: Vec<f64>,
        targets: Vec<f64>,
        l: usize,
        n: usize,
        target_feature: Option<usize>,
    ) -> Result<Self> {
        if l < 2 || n < 1 {
            return Err(Error::invalid(format!(
                "window shape {l}x{n} invalid (need l >= 2, n >= 1)"
            )));
        }
        if windows.len() != targets.len() * l * n {
            return Err(Error::invalid(format!(
                "{} window values for {} targets of shape {l}x{n}",
                windows.len(),
                targets.len()
            )));
        }
        if let Some(tf) = target_feature {
            if tf >= n {
                return Err(Error::invalid("target feature index out of range"));
            }
        }
        Ok(Self {
            windows,
            targets,
            l,
            n,
            target_feature,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.l
    }

    pub fn n_features(&self) -> usize {
        self.n
    }

    pub fn target_feature(&self) -> Option<usize> {
        self.target_feature
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    /// All windows, flat and timestep-major.
    pub fn window_data(&self) -> &[f64] {
        &self.windows
    }

    pub fn window(&self, i: usize) -> &[f64] {
        let size = self.l * self.n;
        &self.windows[i * size..(i + 1) * size]
    }

    pub fn view(&self, i: usize) -> WindowView<'_> {
        WindowView {
            data: self.window(i),
            l: self.l,
            n: self.n,
        }
    }

    pub fn views(&self) -> impl Iterator<Item = WindowView<'_>> {
        (0..self.len()).map(|i| self.view(i))
    }

    /// Values of the target-feature column of window `i` (length `l`).
    pub fn target_history(&self, i: usize) -> Option<Vec<f64>> {
        let tf = self.target_feature?;
        Some(self.view(i).column(tf))
    }

    /// Sub-dataset made of the given windows, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        let mut windows = Vec::with_capacity(indices.len() * self.l * self.n);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            windows.extend_from_slice(self.window(i));
            targets.push(self.targets[i]);
        }
        WindowedDataset {
            windows,
            targets,
            l: self.l,
            n: self.n,
            target_feature: self.target_feature,
        }
    }

    /// Keep only the last `width` timesteps of every window.
    pub fn tail(&self, width: usize) -> Result<WindowedDataset> {
        if width < 2 || width > self.l {
            return Err(Error::invalid(format!(
                "cannot trim width-{} windows to {width}",
                self.l
            )));
        }
        let skip = (self.l - width) * self.n;
        let mut windows = Vec::with_capacity(self.len() * width * self.n);
        for i in 0..self.len() {
            windows.extend_from_slice(&self.window(i)[skip..]);
        }
        Ok(WindowedDataset {
            windows,
            targets: self.targets.clone(),
            l: width,
            n: self.n,
            target_feature: self.target_feature,
        })
    }
}

/// Borrowed `l × n` window.
#[derive(Debug, Clone, Copy)]
pub struct WindowView<'a> {
    pub data: &'a [f64],
    pub l: usize,
    pub n: usize,
}

impl<'a> WindowView<'a> {
    pub fn new(data: &'a [f64], l: usize, n: usize) -> Result<Self> {
        if data.len() != l * n {
            return Err(Error::invalid(format!(
                "window has {} values, expected {l}x{n}",
                data.len()
            )));
        }
        Ok(Self { data, l, n })
    }

    pub fn step(&self, t: usize) -> &'a [f64] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    pub fn last_step(&self) -> &'a [f64] {
        self.step(self.l - 1)
    }

    pub fn column(&self, f: usize) -> Vec<f64> {
        (0..self.l).map(|t| self.data[t * self.n + f]).collect()
    }
}

/// Train/test/validation partition of a windowed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    pub val: WindowedDataset,
    /// (train, test, val)
    pub fractions: (f64, f64, f64),
}

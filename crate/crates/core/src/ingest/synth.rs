//! Seeded synthetic track data shaped like a railway inspection table.
//!
//! Height model: a slow undulation (two sinusoids over hundreds of metres)
//! plus an AR(2) roughness process `a_t = 0.6 a_{t-1} + 0.35 a_{t-2} + 0.05 e_t`
//! plus rare "uneven" bursts of white noise. Outliers replace both heights with
//! values more than eight clean standard deviations from the mean.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{cell_rng, derive_seed, seeded};
use crate::types::RawTable;

pub const ROWS_PER_MILEAGE: usize = 4000;
pub const SAMPLE_SPACING: f64 = 0.25;
/// Rows covered by one uneven burst.
pub const BURST_LENGTH: usize = 24;

const AR_COEFFS: [f64; 2] = [0.6, 0.35];
const AR_SIGMA: f64 = 0.05;
const BURST_SIGMA: f64 = 0.9;
const FIRST_MILEAGE: f64 = 100.0;

// keyed-stream column codes for latent processes
const KEY_AR_LEFT: u64 = 1 << 20;
const KEY_AR_RIGHT: u64 = KEY_AR_LEFT + 1;
const KEY_BURST_START: u64 = KEY_AR_LEFT + 2;
const KEY_BURST_NOISE: u64 = KEY_AR_LEFT + 3;
const KEY_OUTLIER: u64 = KEY_AR_LEFT + 4;
const KEY_FEATURE_PARAMS: u64 = KEY_AR_LEFT + 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_features: usize,
    pub outlier_rate: f64,
    pub constant_feature_count: usize,
    pub irrelevant_feature_count: usize,
    pub uneven_segment_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 24_000,
            n_features: 34,
            outlier_rate: 0.001,
            constant_feature_count: 8,
            irrelevant_feature_count: 10,
            uneven_segment_rate: 0.01,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::invalid("n_rows must be positive"));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::invalid("outlier_rate must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.uneven_segment_rate) {
            return Err(Error::invalid("uneven_segment_rate must lie in [0, 1]"));
        }
        if self.constant_feature_count + self.irrelevant_feature_count + 4 > self.n_features {
            return Err(Error::invalid(format!(
                "{} constant + {} irrelevant + 4 reserved columns exceed n_features = {}",
                self.constant_feature_count, self.irrelevant_feature_count, self.n_features
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Constant(f64),
    Noise { offset: f64, scale: f64 },
    Correlated { offset: f64, scale: f64, slope: f64, noise: f64, right: bool },
}

fn normal(seed: u64, row: usize, key: u64) -> f64 {
    cell_rng(seed, row as u64, key).sample(StandardNormal)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn ar2(seed: u64, key: u64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let (mut a1, mut a2) = (0.0, 0.0);
    for i in 0..n {
        let a = AR_COEFFS[0] * a1 + AR_COEFFS[1] * a2 + AR_SIGMA * normal(seed, i, key);
        out.push(a);
        a2 = a1;
        a1 = a;
    }
    out
}

/// Generate a synthetic table. Column layout:
/// `mileage, meters, f1, f2, left_height, right_height, f3, ...`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<RawTable> {
    cfg.validate()?;
    let n = cfg.n_rows;
    let seed = cfg.seed;

    let mut phase_rng = seeded(derive_seed(seed, 0));
    let phase1 = phase_rng.random::<f64>() * 2.0 * PI;
    let phase2 = phase_rng.random::<f64>() * 2.0 * PI;

    // burst starts are independent per row; a row is uneven if a burst began
    // within the previous BURST_LENGTH rows
    let start_p = (cfg.uneven_segment_rate / BURST_LENGTH as f64).min(1.0);
    let starts: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| cell_rng(seed, i as u64, KEY_BURST_START).random::<f64>() < start_p)
        .collect();
    let mut burst = vec![0.0; n];
    let mut since_start = usize::MAX;
    for i in 0..n {
        since_start = if starts[i] { 0 } else { since_start.saturating_add(1) };
        if since_start < BURST_LENGTH {
            burst[i] = BURST_SIGMA * normal(seed, i, KEY_BURST_NOISE);
        }
    }

    let ar_left = ar2(seed, KEY_AR_LEFT, n);
    let ar_right = ar2(seed, KEY_AR_RIGHT, n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64;
        let swell = 1.5 * (2.0 * PI * x / 1000.0 + phase1).sin()
            + 0.7 * (2.0 * PI * x / 2600.0 + phase2).sin();
        left.push(swell + ar_left[i] + burst[i]);
        right.push(0.9 * swell + 0.5 * ar_left[i] + 0.5 * ar_right[i] + 0.9 * burst[i]);
    }
    let clean_left = left.clone();
    let clean_right = right.clone();
    let (ml, sl) = mean_std(&clean_left);
    let (mr, sr) = mean_std(&clean_right);
    for i in 0..n {
        let mut rng = cell_rng(seed, i as u64, KEY_OUTLIER);
        if rng.random::<f64>() < cfg.outlier_rate {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let k = 10.0 + 4.0 * rng.random::<f64>();
            left[i] = ml + sign * k * sl;
            right[i] = mr + sign * k * sr;
        }
    }

    let n_slots = cfg.n_features - 4;
    let mut roles = Vec::with_capacity(n_slots);
    let mut prng = seeded(derive_seed(seed, KEY_FEATURE_PARAMS));
    for k in 0..n_slots {
        let scale = 10f64.powf(prng.random_range(-4.0..2.0));
        let offset = scale * prng.random_range(-5.0..5.0);
        let role = if k < cfg.constant_feature_count {
            Role::Constant((prng.random_range(0.0..100.0) * 100.0f64).round() / 100.0)
        } else if k < cfg.constant_feature_count + cfg.irrelevant_feature_count {
            Role::Noise { offset, scale }
        } else {
            let right = prng.random::<bool>();
            let sd = if right { sr } else { sl };
            Role::Correlated {
                offset,
                scale,
                slope: if prng.random::<bool>() { 1.0 } else { -1.0 } / sd.max(1e-12),
                noise: prng.random_range(0.1..0.6),
                right,
            }
        };
        roles.push(role);
    }
    roles.shuffle(&mut prng);

    let mut names = vec!["mileage".to_string(), "meters".to_string()];
    let mut slot_columns = Vec::with_capacity(n_slots);
    let mut next_feature = 1;
    for c in 2..cfg.n_features {
        match c {
            4 => names.push("left_height".into()),
            5 => names.push("right_height".into()),
            _ => {
                names.push(format!("f{next_feature}"));
                next_feature += 1;
                slot_columns.push(c);
            }
        }
    }
    let width = cfg.n_features;
    let mut data = vec![0.0; n * width];
    data.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
        row[0] = FIRST_MILEAGE + (i / ROWS_PER_MILEAGE) as f64;
        row[1] = (i % ROWS_PER_MILEAGE) as f64 * SAMPLE_SPACING;
        row[4] = left[i];
        row[5] = right[i];
        for (&c, role) in slot_columns.iter().zip(&roles) {
            row[c] = match *role {
                Role::Constant(v) => v,
                Role::Noise { offset, scale } => offset + scale * normal(seed, i, c as u64),
                Role::Correlated {
                    offset,
                    scale,
                    slope,
                    noise,
                    right,
                } => {
                    let h = if right { clean_right[i] } else { clean_left[i] };
                    offset + scale * (slope * h + noise * normal(seed, i, c as u64))
                }
            };
        }
    });
    RawTable::from_flat(names, data, [0, 1], 4)
}

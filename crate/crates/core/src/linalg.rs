//! Small dense least-squares helpers (normal equations + Cholesky).

use crate::error::{Error, Result};

/// Relative pivot below which a Gram matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-10;
pub const RIDGE: f64 = 1e-8;

/// Cholesky solve of a symmetric positive definite `k × k` system.
/// Returns `None` when a pivot collapses relative to its diagonal entry.
pub fn solve_spd(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    cholesky_solve(a, b, k, PIVOT_TOL)
}

fn cholesky_solve(a: &[f64], b: &[f64], k: usize, tol: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), k * k);
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= l[j * k + p] * l[j * k + p];
        }
        let scale = a[j * k + j].abs().max(f64::MIN_POSITIVE);
        if d.is_nan() || d <= tol * scale {
            return None;
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= l[i * k + p] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= l[p * k + i] * y[p];
        }
        y[i] /= l[i * k + i];
    }
    Some(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqFit {
    pub coef: Vec<f64>,
    /// Whether the ridge term had to be added to regularize a singular Gram matrix.
    pub ridge: bool,
}

/// Accumulates `XᵀX` and `Xᵀy` row by row.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    k: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl NormalEquations {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            gram: vec![0.0; k * k],
            rhs: vec![0.0; k],
        }
    }

    pub fn add_row(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.k);
        for i in 0..self.k {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            self.rhs[i] += xi * y;
            let row = &mut self.gram[i * self.k..(i + 1) * self.k];
            for (g, &xj) in row[i..].iter_mut().zip(&x[i..]) {
                *g += xi * xj;
            }
        }
    }

    /// Plain solve; `None` if the Gram matrix is singular.
    pub fn solve_exact(&self) -> Option<Vec<f64>> {
        solve_spd(&self.symmetric(0.0), &self.rhs, self.k)
    }

    /// Solve, falling back to `XᵀX + 1e-8 I` when the Gram matrix is singular.
    pub fn solve(&self) -> Result<LstsqFit> {
        if let Some(coef) = self.solve_exact() {
            return Ok(LstsqFit { coef, ridge: false });
        }
        // the ridge keeps every pivot positive, so only reject outright collapse
        cholesky_solve(&self.symmetric(RIDGE), &self.rhs, self.k, 0.0)
            .filter(|c| c.iter().all(|v| v.is_finite()))
            .map(|coef| LstsqFit { coef, ridge: true })
            .ok_or_else(|| Error::Numeric("least-squares system singular even with ridge".into()))
    }

    fn symmetric(&self, ridge: f64) -> Vec<f64> {
        let k = self.k;
        let mut a = self.gram.clone();
        for i in 0..k {
            for j in 0..i {
                a[i * k + j] = a[j * k + i];
            }
            a[i * k + i] += ridge;
        }
        a
    }
}

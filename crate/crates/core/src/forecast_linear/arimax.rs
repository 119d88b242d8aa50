//! ARIMAX(p, d, q) with exogenous regressors.
//!
//! On the `d`-times differenced target `w`, the one-step forecast for
//! position `s` of a window is
//!
//! ```text
//! ŵ_s = c + Σ φ_i w_{s-i} + Σ θ_j ε_{s-j} + Σ β_k x_{s-1,k}
//! ```
//!
//! where `x_{s-1}` is the most recent exogenous row available before `s`.
//! Residuals are recovered recursively inside the window, starting from zero
//! before the first position that has all `p` lags. Each window contributes
//! one squared error: that of its target (position `l`). Fitting is
//! Hannan–Rissanen least squares followed by gradient refinement of that
//! conditional sum of squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::NormalEquations;
use crate::types::{WindowView, WindowedDataset};

use super::diff::{difference, undifference};
use super::exogenous_features;

const REFINE_LR: f64 = 1e-3;
const REFINE_ITERS: usize = 200;
const MAX_HALVINGS: usize = 20;
const MAX_REJECTED: usize = 10;
const GRAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaxOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaxOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    /// Window width needed for a full Hannan–Rissanen initialization.
    pub fn preferred_width(&self) -> usize {
        let hr = if self.q > 0 {
            self.d + self.p + 2 * self.q + 2
        } else {
            0
        };
        hr.max(self.p + self.d + 1).max(self.q + 1).max(2)
    }
}

impl std::fmt::Display for ArimaxOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "arima({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// q = 0: the model is linear in its parameters.
    LeastSquares,
    /// Long autoregression of the given order supplies residual estimates.
    HannanRissanen { long_order: usize },
    /// Windows too short for a long autoregression; θ starts at zero.
    ArOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStatus {
    Converged,
    MaxIterations,
    /// Refinement kept failing to decrease the objective; stage-1 estimate kept.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaxModel {
    pub order: ArimaxOrder,
    pub constant: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub target_feature: usize,
    pub exog_features: Vec<usize>,
    pub init: InitMethod,
    pub ridge_fallback: bool,
    /// Mean conditional squared error after stage 1 and after refinement.
    pub stage1_css: f64,
    pub css: f64,
    pub refine_steps: usize,
    pub refine_status: RefineStatus,
    pub warning: Option<String>,
}

impl ArimaxModel {
    fn param_vec(&self) -> Vec<f64> {
        let mut v = vec![self.constant];
        v.extend(&self.phi);
        v.extend(&self.theta);
        v.extend(&self.beta);
        v
    }
}

/// Borrowed parameter vector `[c, φ.., θ.., β..]`.
#[derive(Clone, Copy)]
struct Params<'a> {
    v: &'a [f64],
    order: ArimaxOrder,
}

impl<'a> Params<'a> {
    fn c(&self) -> f64 {
        self.v[0]
    }
    fn phi(&self) -> &'a [f64] {
        &self.v[1..1 + self.order.p]
    }
    fn theta(&self) -> &'a [f64] {
        let s = 1 + self.order.p;
        &self.v[s..s + self.order.q]
    }
    fn beta(&self) -> &'a [f64] {
        &self.v[1 + self.order.p + self.order.q..]
    }
}

/// One window prepared for the recursion: differenced history, exogenous
/// rows, and window width.
struct Prepared<'a> {
    /// `w_s` for `s = d..l`, stored at `s - d`.
    w: &'a [f64],
    /// `l × nx` exogenous rows.
    exog: &'a [f64],
    nx: usize,
    l: usize,
}

impl Prepared<'_> {
    fn w_at(&self, s: usize, d: usize) -> f64 {
        self.w[s - d]
    }
    fn exog_row(&self, s: usize) -> &[f64] {
        &self.exog[s * self.nx..(s + 1) * self.nx]
    }
}

fn first_position(order: ArimaxOrder) -> usize {
    (order.d + order.p).max(1)
}

/// Forecast of `w_l`. With `grad` supplied, also writes `∂ŵ_l/∂params`.
fn forecast(params: Params<'_>, win: &Prepared<'_>, grad: Option<&mut [f64]>) -> f64 {
    let ArimaxOrder { p, d, q } = params.order;
    let l = win.l;
    let s0 = first_position(params.order);
    let n_params = params.v.len();
    let track = grad.is_some();
    let mut eps = vec![0.0; l + 1];
    // ∂ε_s/∂params for s in [s0, l), only needed when q > 0
    let mut deps = if track && q > 0 {
        vec![0.0; (l + 1) * n_params]
    } else {
        Vec::new()
    };
    let mut dpred = vec![0.0; if track { n_params } else { 0 }];

    let predict_at = |s: usize, eps: &[f64], deps: &[f64], dpred: &mut [f64]| -> f64 {
        let mut pred = params.c();
        for (i, phi) in params.phi().iter().enumerate() {
            pred += phi * win.w_at(s - i - 1, d);
        }
        for (j, theta) in params.theta().iter().enumerate() {
            if s > j {
                pred += theta * eps[s - j - 1];
            }
        }
        let x = win.exog_row(s - 1);
        for (b, x) in params.beta().iter().zip(x) {
            pred += b * x;
        }
        if track {
            dpred.fill(0.0);
            dpred[0] = 1.0;
            for i in 0..p {
                dpred[1 + i] = win.w_at(s - i - 1, d);
            }
            for j in 0..q.min(s) {
                dpred[1 + p + j] = eps[s - j - 1];
            }
            dpred[1 + p + q..].copy_from_slice(x);
            for j in 0..q {
                if s > j {
                    let prev = &deps[(s - j - 1) * n_params..(s - j) * n_params];
                    let theta = params.theta()[j];
                    for (g, dp) in dpred.iter_mut().zip(prev) {
                        *g += theta * dp;
                    }
                }
            }
        }
        pred
    };

    if q > 0 {
        for s in s0..l {
            let pred = predict_at(s, &eps, &deps, &mut dpred);
            eps[s] = win.w_at(s, d) - pred;
            if track {
                for (k, g) in dpred.iter().enumerate() {
                    deps[s * n_params + k] = -g;
                }
            }
        }
    }
    let pred = predict_at(l, &eps, &deps, &mut dpred);
    if let Some(grad) = grad {
        grad.copy_from_slice(&dpred);
    }
    pred
}

/// Training windows reshaped for the recursion.
struct Design {
    order: ArimaxOrder,
    l: usize,
    nx: usize,
    /// `N × (l + 1 - d)` differenced series including the target position.
    w: Vec<f64>,
    exog: Vec<f64>,
    n: usize,
}

impl Design {
    fn build(ds: &WindowedDataset, order: ArimaxOrder, tf: usize, exog: &[usize]) -> Result<Self> {
        let l = ds.width();
        let nx = exog.len();
        let mut w = Vec::with_capacity(ds.len() * (l + 1 - order.d));
        let mut xs = Vec::with_capacity(ds.len() * l * nx);
        let mut z = Vec::with_capacity(l + 1);
        for (i, view) in ds.views().enumerate() {
            z.clear();
            z.extend((0..l).map(|t| view.step(t)[tf]));
            z.push(ds.target(i));
            w.extend(difference(&z, order.d)?);
            for t in 0..l {
                let row = view.step(t);
                xs.extend(exog.iter().map(|&f| row[f]));
            }
        }
        Ok(Self {
            order,
            l,
            nx,
            w,
            exog: xs,
            n: ds.len(),
        })
    }

    fn window(&self, i: usize) -> Prepared<'_> {
        let wl = self.l + 1 - self.order.d;
        let xl = self.l * self.nx;
        Prepared {
            w: &self.w[i * wl..(i + 1) * wl],
            exog: &self.exog[i * xl..(i + 1) * xl],
            nx: self.nx,
            l: self.l,
        }
    }

    fn target(&self, i: usize) -> f64 {
        self.window(i).w_at(self.l, self.order.d)
    }

    fn n_params(&self) -> usize {
        1 + self.order.p + self.order.q + self.nx
    }

    /// Mean squared one-step error.
    fn css(&self, v: &[f64]) -> f64 {
        let params = Params { v, order: self.order };
        let sse: f64 = (0..self.n)
            .into_par_iter()
            .with_min_len(512)
            .map(|i| {
                let r = self.target(i) - forecast(params, &self.window(i), None);
                r * r
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        sse / self.n as f64
    }

    fn css_grad(&self, v: &[f64]) -> (f64, Vec<f64>) {
        let params = Params { v, order: self.order };
        let k = self.n_params();
        let chunk = 512;
        let partials: Vec<(f64, Vec<f64>)> = (0..self.n.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut sse = 0.0;
                let mut g = vec![0.0; k];
                let mut dp = vec![0.0; k];
                for i in c * chunk..((c + 1) * chunk).min(self.n) {
                    let r = self.target(i) - forecast(params, &self.window(i), Some(&mut dp));
                    sse += r * r;
                    for (g, d) in g.iter_mut().zip(&dp) {
                        *g -= 2.0 * r * d;
                    }
                }
                (sse, g)
            })
            .collect();
        let mut sse = 0.0;
        let mut grad = vec![0.0; k];
        for (s, g) in partials {
            sse += s;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        let n = self.n as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (sse / n, grad)
    }
}

struct Stage1 {
    params: Vec<f64>,
    init: InitMethod,
    ridge: bool,
}

fn stage_one(design: &Design) -> Result<Stage1> {
    let ArimaxOrder { p, d, q } = design.order;
    let l = design.l;
    let nx = design.nx;

    // long autoregression for residual estimates when q > 0
    let long_order = if q > 0 {
        let max_h = l.saturating_sub(q + d);
        Some((p + q + 2).min(max_h)).filter(|&h| h >= 1)
    } else {
        None
    };
    let long_ar = match long_order {
        Some(h) => {
            let mut ne = NormalEquations::new(1 + h + nx);
            let mut row = vec![0.0; 1 + h + nx];
            for i in 0..design.n {
                let win = design.window(i);
                fill_row(&mut row, &win, l, d, h, &[], nx);
                ne.add_row(&row, design.target(i));
            }
            Some((h, ne.solve()?))
        }
        None => None,
    };

    let use_theta = long_ar.is_some();
    let k = 1 + p + if use_theta { q } else { 0 } + nx;
    let mut ne = NormalEquations::new(k);
    let mut row = vec![0.0; k];
    let mut resid = vec![0.0; q];
    let mut long_row = Vec::new();
    for i in 0..design.n {
        let win = design.window(i);
        if let Some((h, fit)) = &long_ar {
            long_row.resize(1 + h + nx, 0.0);
            for (j, r) in resid.iter_mut().enumerate() {
                let s = l - j - 1;
                fill_row(&mut long_row, &win, s, d, *h, &[], nx);
                let pred: f64 = long_row.iter().zip(&fit.coef).map(|(a, b)| a * b).sum();
                *r = win.w_at(s, d) - pred;
            }
        }
        let lagged: &[f64] = if use_theta { &resid } else { &[] };
        fill_row(&mut row, &win, l, d, p, lagged, nx);
        ne.add_row(&row, design.target(i));
    }
    let fit = ne.solve()?;
    let mut params = vec![0.0; design.n_params()];
    params[..1 + p].copy_from_slice(&fit.coef[..1 + p]);
    if use_theta {
        params[1 + p..1 + p + q].copy_from_slice(&fit.coef[1 + p..1 + p + q]);
    }
    params[1 + p + q..].copy_from_slice(&fit.coef[k - nx..]);
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("ARIMAX stage-1 estimate is not finite".into()));
    }
    let init = match (q, long_ar) {
        (0, _) => InitMethod::LeastSquares,
        (_, Some((h, _))) => InitMethod::HannanRissanen { long_order: h },
        (_, None) => InitMethod::ArOnly,
    };
    Ok(Stage1 {
        params,
        init,
        ridge: fit.ridge,
    })
}

/// `[1, w_{s-1}..w_{s-lags}, extra.., x_{s-1}]`
fn fill_row(row: &mut [f64], win: &Prepared<'_>, s: usize, d: usize, lags: usize, extra: &[f64], nx: usize) {
    row[0] = 1.0;
    for i in 0..lags {
        row[1 + i] = win.w_at(s - i - 1, d);
    }
    row[1 + lags..1 + lags + extra.len()].copy_from_slice(extra);
    row[1 + lags + extra.len()..1 + lags + extra.len() + nx].copy_from_slice(win.exog_row(s - 1));
}

/// Fit one ARIMAX model over all windows of `ds` (each window supplies its
/// target as one conditional one-step error).
pub fn fit_arimax(ds: &WindowedDataset, order: ArimaxOrder) -> Result<ArimaxModel> {
    let tf = ds
        .target_feature()
        .ok_or_else(|| Error::invalid("ARIMAX needs a target-history column"))?;
    let l = ds.width();
    if l <= order.p + order.d || l <= order.q {
        return Err(Error::invalid(format!(
            "window width {l} too short for {order} (need l > p + d and l > q)"
        )));
    }
    if ds.is_empty() {
        return Err(Error::invalid("ARIMAX fit on an empty dataset"));
    }
    let exog = exogenous_features(ds);
    let design = Design::build(ds, order, tf, &exog)?;
    let stage1 = stage_one(&design)?;

    let stage1_css = design.css(&stage1.params);
    let mut params = stage1.params.clone();
    let mut css = stage1_css;
    let mut status = RefineStatus::MaxIterations;
    let mut rejected = 0;
    let mut steps = 0;
    for _ in 0..REFINE_ITERS {
        let (_, grad) = design.css_grad(&params);
        if grad.iter().all(|g| g.abs() < GRAD_TOL) {
            status = RefineStatus::Converged;
            break;
        }
        steps += 1;
        let mut lr = REFINE_LR;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
            let trial_css = design.css(&trial);
            if trial_css < css {
                params = trial;
                css = trial_css;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if accepted {
            rejected = 0;
        } else {
            rejected += 1;
            if rejected >= MAX_REJECTED {
                status = RefineStatus::Stalled;
                break;
            }
        }
    }
    let mut warning = None;
    if status == RefineStatus::Stalled {
        warning = Some(format!(
            "CSS refinement stalled after {steps} steps; returning the stage-1 estimate"
        ));
        params = stage1.params;
        css = stage1_css;
    }
    if !css.is_finite() {
        return Err(Error::Numeric(format!("{order} objective is not finite")));
    }

    let p = Params { v: &params, order };
    Ok(ArimaxModel {
        order,
        constant: p.c(),
        phi: p.phi().to_vec(),
        theta: p.theta().to_vec(),
        beta: p.beta().to_vec(),
        target_feature: tf,
        exog_features: exog,
        init: stage1.init,
        ridge_fallback: stage1.ridge,
        stage1_css,
        css,
        refine_steps: steps,
        refine_status: status,
        warning,
    })
}

/// One-step forecast of the value following `window`, on the original scale.
pub fn predict_arimax(model: &ArimaxModel, window: WindowView<'_>) -> Result<f64> {
    let order = model.order;
    let l = window.l;
    if l < order.p + order.d || l <= order.d {
        return Err(Error::invalid(format!(
            "window of {l} steps is too short for {order}"
        )));
    }
    let max_feature = model
        .exog_features
        .iter()
        .copied()
        .chain([model.target_feature])
        .max()
        .unwrap_or(0);
    if max_feature >= window.n {
        return Err(Error::invalid(format!(
            "model reads feature {max_feature} but window has {}",
            window.n
        )));
    }
    let z = window.column(model.target_feature);
    let mut w = difference(&z, order.d)?;
    // placeholder for the unknown target position
    w.push(0.0);
    let exog: Vec<f64> = (0..l)
        .flat_map(|t| {
            let row = window.step(t);
            model.exog_features.iter().map(move |&f| row[f])
        })
        .collect();
    let prepared = Prepared {
        w: &w,
        exog: &exog,
        nx: model.exog_features.len(),
        l,
    };
    let v = model.param_vec();
    let dw = forecast(Params { v: &v, order }, &prepared, None);
    undifference(&z[l - order.d..], dw, order.d)
}

//! GRU cell, gate blocks stacked as r, z, h̃.
//!
//! ```text
//! r = σ(W_r x + U_r h + b_r)    z = σ(W_z x + U_z h + b_z)
//! h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use crate::types::WindowView;

use super::ops::{dot, gemv_add, gemv_t_add, outer_add, sigmoid};
use super::params::NetworkParams;

#[derive(Debug, Clone)]
pub struct Cache {
    /// Activated r, z, h̃ per step, `l × 3H`.
    gates: Vec<f64>,
    /// Hidden states, `(l + 1) × H` with the zero state first.
    h: Vec<f64>,
}

pub(super) fn forward(p: &NetworkParams, x: &WindowView<'_>) -> (f64, Cache) {
    let hs = p.hidden;
    let n = p.n;
    let lay = p.layout();
    let v = &p.values;
    let (w, u, b) = (&v[lay.input], &v[lay.recurrent], &v[lay.bias]);
    let mut cache = Cache {
        gates: vec![0.0; x.l * 3 * hs],
        h: vec![0.0; (x.l + 1) * hs],
    };
    let mut rh = vec![0.0; hs];
    for t in 0..x.l {
        let (hist, next) = cache.h.split_at_mut((t + 1) * hs);
        let h = &hist[t * hs..];
        let a = &mut cache.gates[t * 3 * hs..(t + 1) * 3 * hs];
        a.copy_from_slice(b);
        gemv_add(a, w, x.step(t));
        gemv_add(&mut a[..2 * hs], &u[..2 * hs * hs], h);
        for a in &mut a[..2 * hs] {
            *a = sigmoid(*a);
        }
        for j in 0..hs {
            rh[j] = a[j] * h[j];
        }
        let cand = &mut a[2 * hs..];
        gemv_add(cand, &u[2 * hs * hs..], &rh);
        for c in cand.iter_mut() {
            *c = c.tanh();
        }
        for j in 0..hs {
            let z = a[hs + j];
            next[j] = (1.0 - z) * h[j] + z * a[2 * hs + j];
        }
    }
    debug_assert_eq!(w.len(), 3 * hs * n);
    let y = dot(&v[lay.head_w], &cache.h[x.l * hs..]) + v[lay.head_b];
    (y, cache)
}

pub(super) fn backward(
    p: &NetworkParams,
    x: &WindowView<'_>,
    cache: &Cache,
    dy: f64,
    grad: &mut [f64],
) {
    let hs = p.hidden;
    let lay = p.layout();
    let v = &p.values;
    let u = &v[lay.recurrent.clone()];
    let n_in = lay.input.start;
    let n_rec = lay.recurrent.start;
    let n_b = lay.bias.start;
    for (g, h) in grad[lay.head_w.clone()].iter_mut().zip(&cache.h[x.l * hs..]) {
        *g += dy * h;
    }
    grad[lay.head_b] += dy;

    let mut dh: Vec<f64> = v[lay.head_w.clone()].iter().map(|w| dy * w).collect();
    let mut dh_prev = vec![0.0; hs];
    let mut da = vec![0.0; 3 * hs];
    let mut rh = vec![0.0; hs];
    let mut drh = vec![0.0; hs];
    for t in (0..x.l).rev() {
        let a = &cache.gates[t * 3 * hs..(t + 1) * 3 * hs];
        let h = &cache.h[t * hs..(t + 1) * hs];
        for j in 0..hs {
            let (z, c) = (a[hs + j], a[2 * hs + j]);
            da[2 * hs + j] = dh[j] * z * (1.0 - c * c);
            da[hs + j] = dh[j] * (c - h[j]) * z * (1.0 - z);
            dh_prev[j] = dh[j] * (1.0 - z);
            rh[j] = a[j] * h[j];
        }
        // candidate path through U_h (r ⊙ h)
        let dcand = &da[2 * hs..];
        outer_add(&mut grad[n_rec + 2 * hs * hs..n_rec + 3 * hs * hs], dcand, &rh);
        drh.fill(0.0);
        gemv_t_add(&mut drh, &u[2 * hs * hs..], dcand);
        for j in 0..hs {
            let r = a[j];
            da[j] = drh[j] * h[j] * r * (1.0 - r);
            dh_prev[j] += drh[j] * r;
        }
        // r and z paths through U_r h and U_z h
        outer_add(&mut grad[n_rec..n_rec + 2 * hs * hs], &da[..2 * hs], h);
        gemv_t_add(&mut dh_prev, &u[..2 * hs * hs], &da[..2 * hs]);
        outer_add(&mut grad[n_in..lay.input.end], &da, x.step(t));
        for (g, d) in grad[n_b..lay.bias.end].iter_mut().zip(&da) {
            *g += d;
        }
        std::mem::swap(&mut dh, &mut dh_prev);
    }
}

//! LSTM cell with forget gate, gate blocks stacked as i, f, g, o.
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! g = tanh(W_g x + U_g h + b_g) o = σ(W_o x + U_o h + b_o)
//! c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
//! ```

use crate::types::WindowView;

use super::ops::{dot, gemv_add, gemv_t_add, outer_add, sigmoid};
use super::params::NetworkParams;

#[derive(Debug, Clone)]
pub struct Cache {
    /// Activated gates per step, `l × 4H`.
    gates: Vec<f64>,
    /// Cell and hidden states, `(l + 1) × H` with the zero state first.
    c: Vec<f64>,
    h: Vec<f64>,
}

pub(super) fn forward(p: &NetworkParams, x: &WindowView<'_>) -> (f64, Cache) {
    let hs = p.hidden;
    let lay = p.layout();
    let v = &p.values;
    let (w, u, b) = (&v[lay.input], &v[lay.recurrent], &v[lay.bias]);
    let mut cache = Cache {
        gates: vec![0.0; x.l * 4 * hs],
        c: vec![0.0; (x.l + 1) * hs],
        h: vec![0.0; (x.l + 1) * hs],
    };
    for t in 0..x.l {
        let a = &mut cache.gates[t * 4 * hs..(t + 1) * 4 * hs];
        a.copy_from_slice(b);
        gemv_add(a, w, x.step(t));
        gemv_add(a, u, &cache.h[t * hs..(t + 1) * hs]);
        for (k, a) in a.iter_mut().enumerate() {
            *a = if k / hs == 2 { a.tanh() } else { sigmoid(*a) };
        }
        let (prev, next) = cache.c.split_at_mut((t + 1) * hs);
        let c_prev = &prev[t * hs..];
        for j in 0..hs {
            let (i, f, g) = (a[j], a[hs + j], a[2 * hs + j]);
            next[j] = f * c_prev[j] + i * g;
            cache.h[(t + 1) * hs + j] = a[3 * hs + j] * next[j].tanh();
        }
    }
    let h_last = &cache.h[x.l * hs..];
    let y = dot(&v[lay.head_w], h_last) + v[lay.head_b];
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
    let h_last = &cache.h[x.l * hs..];
    for (g, h) in grad[lay.head_w.clone()].iter_mut().zip(h_last) {
        *g += dy * h;
    }
    grad[lay.head_b] += dy;

    let mut dh: Vec<f64> = v[lay.head_w.clone()].iter().map(|w| dy * w).collect();
    let mut dc = vec![0.0; hs];
    let mut da = vec![0.0; 4 * hs];
    for t in (0..x.l).rev() {
        let a = &cache.gates[t * 4 * hs..(t + 1) * 4 * hs];
        let c = &cache.c[(t + 1) * hs..(t + 2) * hs];
        let c_prev = &cache.c[t * hs..(t + 1) * hs];
        for j in 0..hs {
            let (i, f, g, o) = (a[j], a[hs + j], a[2 * hs + j], a[3 * hs + j]);
            let tc = c[j].tanh();
            dc[j] += dh[j] * o * (1.0 - tc * tc);
            da[j] = dc[j] * g * i * (1.0 - i);
            da[hs + j] = dc[j] * c_prev[j] * f * (1.0 - f);
            da[2 * hs + j] = dc[j] * i * (1.0 - g * g);
            da[3 * hs + j] = dh[j] * tc * o * (1.0 - o);
            dc[j] *= f;
        }
        outer_add(&mut grad[lay.input.clone()], &da, x.step(t));
        outer_add(&mut grad[lay.recurrent.clone()], &da, &cache.h[t * hs..(t + 1) * hs]);
        for (g, d) in grad[lay.bias.clone()].iter_mut().zip(&da) {
            *g += d;
        }
        dh.fill(0.0);
        gemv_t_add(&mut dh, u, &da);
    }
}

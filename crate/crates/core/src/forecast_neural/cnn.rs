//! Temporal convolution: `K` kernels of `k × n` slide along the window, each
//! producing `l − k + 1` ReLU outputs; all outputs feed one dense neuron.

use crate::types::WindowView;

use super::ops::dot;
use super::params::NetworkParams;

#[derive(Debug, Clone)]
pub struct Cache {
    /// Post-ReLU conv outputs, `K × (l − k + 1)`, kernel-major.
    act: Vec<f64>,
}

pub(super) fn forward(p: &NetworkParams, x: &WindowView<'_>) -> (f64, Cache) {
    let lay = p.layout();
    let v = &p.values;
    let kw = p.kernel_width;
    let span = kw * p.n;
    let t_out = p.conv_len();
    let mut act = vec![0.0; p.kernels * t_out];
    for kk in 0..p.kernels {
        let kernel = &v[kk * span..(kk + 1) * span];
        let bias = v[lay.bias.start + kk];
        for t in 0..t_out {
            // rows t..t+k of the window are contiguous in timestep-major layout
            let patch = &x.data[t * p.n..t * p.n + span];
            act[kk * t_out + t] = (bias + dot(kernel, patch)).max(0.0);
        }
    }
    let y = dot(&v[lay.head_w], &act) + v[lay.head_b];
    (y, Cache { act })
}

pub(super) fn backward(
    p: &NetworkParams,
    x: &WindowView<'_>,
    cache: &Cache,
    dy: f64,
    grad: &mut [f64],
) {
    let lay = p.layout();
    let v = &p.values;
    let span = p.kernel_width * p.n;
    let t_out = p.conv_len();
    for (g, a) in grad[lay.head_w.clone()].iter_mut().zip(&cache.act) {
        *g += dy * a;
    }
    grad[lay.head_b] += dy;
    let head = &v[lay.head_w.clone()];
    for kk in 0..p.kernels {
        for t in 0..t_out {
            let idx = kk * t_out + t;
            if cache.act[idx] <= 0.0 {
                continue;
            }
            let d = dy * head[idx];
            grad[lay.bias.start + kk] += d;
            let patch = &x.data[t * p.n..t * p.n + span];
            for (g, xv) in grad[kk * span..(kk + 1) * span].iter_mut().zip(patch) {
                *g += d * xv;
            }
        }
    }
}

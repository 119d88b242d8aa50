//! Dense kernels over row-major flat slices.

#[inline]
pub(super) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += M x` for `M` with `x.len()` columns.
pub(super) fn gemv_add(out: &mut [f64], m: &[f64], x: &[f64]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(x.len())) {
        *o += dot(row, x);
    }
}

/// `out += Mᵀ v` for `M` with `out.len()` columns.
pub(super) fn gemv_t_add(out: &mut [f64], m: &[f64], v: &[f64]) {
    for (&vi, row) in v.iter().zip(m.chunks_exact(out.len())) {
        if vi == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row) {
            *o += vi * r;
        }
    }
}

/// `g += v xᵀ`
pub(super) fn outer_add(g: &mut [f64], v: &[f64], x: &[f64]) {
    for (&vi, row) in v.iter().zip(g.chunks_exact_mut(x.len())) {
        if vi == 0.0 {
            continue;
        }
        for (gg, xx) in row.iter_mut().zip(x) {
            *gg += vi * xx;
        }
    }
}

#[inline]
pub(super) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

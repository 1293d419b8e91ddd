//! Row-major dense helpers. Matrices are `rows × cols` slices.

/// `out += m · x`
pub(crate) fn matvec_acc(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(m.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += mᵀ · y`
pub(crate) fn matvec_t_acc(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    debug_assert_eq!(m.len(), y.len() * cols);
    for (&yi, row) in y.iter().zip(m.chunks_exact(cols)) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
    }
}

/// `m += a · bᵀ`
pub(crate) fn outer_acc(m: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    debug_assert_eq!(m.len(), a.len() * cols);
    for (&ai, row) in a.iter().zip(m.chunks_exact_mut(cols)) {
        if ai != 0.0 {
            for (mij, bj) in row.iter_mut().zip(b) {
                *mij += ai * bj;
            }
        }
    }
}

pub(crate) fn add_assign(out: &mut [f64], x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += v;
    }
}

//! Scalar helpers that route through `libm` so the crate builds without `std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `C (m×n) += A (m×k) · B (k×n)` with explicit row/column strides.
///
/// Strides are in elements, so transposed operands are passed by swapping them.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn gemm_acc(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: callers pass slices whose extents cover every strided index
    // touched by an m×k, k×n and m×n traversal; the debug asserts check the
    // last element of each operand.
    debug_assert!(m == 0 || k == 0 || last_index(m, k, rsa, csa) < a.len());
    debug_assert!(m == 0 || k == 0 || last_index(k, n, rsb, csb) < b.len());
    debug_assert!(last_index(m, n, rsc, csc) < c.len());
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

fn last_index(rows: usize, cols: usize, rs: isize, cs: isize) -> usize {
    ((rows as isize - 1) * rs + (cols as isize - 1) * cs) as usize
}


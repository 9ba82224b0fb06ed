//! Slow, independent reference computations used to check the fast paths.
//!
//! Nothing here is used by training or graph construction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::math;

/// Longest combined length accepted by [`dtw_oracle`].
pub const DTW_ORACLE_MAX_LEN: usize = 14;

/// Minimum summed point distance over every monotone warping path, found by
/// exhaustive depth-first enumeration (no dynamic programming).
pub fn dtw_oracle(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Data("DTW needs two non-empty series".into()));
    }
    if x.len() + y.len() > DTW_ORACLE_MAX_LEN {
        return Err(Error::Data(format!(
            "exhaustive DTW limited to combined length {DTW_ORACLE_MAX_LEN}, got {}",
            x.len() + y.len()
        )));
    }
    fn walk(x: &[f64], y: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (x[i] - y[j]).abs();
        if i + 1 == x.len() && j + 1 == y.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc, best);
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, 0.0, &mut best);
    Ok(best)
}

/// Dense `I − D^{-1/2} W D^{-1/2}` (row-major), isolated nodes with `D_ii = 1`.
pub fn dense_laplacian(w: &Adjacency) -> Vec<f64> {
    let n = w.n();
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dense[i * n + j] = w.weight(i, j);
        }
    }
    let deg: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = dense[i * n..(i + 1) * n].iter().sum();
            if d > 0.0 {
                d
            } else {
                1.0
            }
        })
        .collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            l[i * n + j] = id - dense[i * n + j] / (math::sqrt(deg[i]) * math::sqrt(deg[j]));
        }
    }
    l
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as the
/// columns of a row-major `n × n` matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::Data("matrix is not n × n".into()));
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= 1e-30 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Data("Jacobi eigen-solver did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a * n + a].total_cmp(&m[b * n + b]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    Ok((values, vectors))
}

/// Largest eigenvalue of the normalized Laplacian from a dense solve.
pub fn dense_lambda_max(w: &Adjacency) -> Result<f64> {
    let n = w.n();
    let (lambda, _) = symmetric_eigen(&dense_laplacian(w), n)?;
    Ok(lambda[n - 1])
}

/// Largest graph accepted by [`spectral_filter_oracle`].
pub const SPECTRAL_ORACLE_MAX_N: usize = 64;

/// Filters `x` in the graph Fourier domain:
/// `U · diag(Σ_k θ_k T_k(λ̃_i)) · Uᵀ x` with `λ̃ = 2λ/λ_max − 1`.
///
/// `lambda_max` fixes the rescaling, e.g. to the value a [`ScaledLaplacian`]
/// settled on; `None` takes the largest eigenvalue from the decomposition.
///
/// [`ScaledLaplacian`]: crate::graph::ScaledLaplacian
pub fn spectral_filter_oracle(
    w: &Adjacency,
    lambda_max: Option<f64>,
    theta: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    let n = w.n();
    if n > SPECTRAL_ORACLE_MAX_N {
        return Err(Error::Data(format!(
            "spectral oracle limited to {SPECTRAL_ORACLE_MAX_N} nodes"
        )));
    }
    if x.len() != n {
        return Err(Error::Data("signal length differs from node count".into()));
    }
    let (lambda, u) = symmetric_eigen(&dense_laplacian(w), n)?;
    let lambda_max = lambda_max.unwrap_or(lambda[n - 1]);
    let response: Vec<f64> = lambda
        .iter()
        .map(|&l| {
            let s = 2.0 * l / lambda_max - 1.0;
            // scalar Chebyshev polynomials T_k(s)
            let (mut t0, mut t1) = (1.0, s);
            let mut acc = 0.0;
            for (k, &th) in theta.iter().enumerate() {
                let tk = match k {
                    0 => 1.0,
                    1 => s,
                    _ => {
                        let t2 = 2.0 * s * t1 - t0;
                        t0 = t1;
                        t1 = t2;
                        t2
                    }
                };
                acc += th * tk;
            }
            acc
        })
        .collect();
    let mut coeff = vec![0.0; n];
    for (i, c) in coeff.iter_mut().enumerate() {
        let proj: f64 = (0..n).map(|r| u[r * n + i] * x[r]).sum();
        *c = response[i] * proj;
    }
    Ok((0..n)
        .map(|r| (0..n).map(|i| u[r * n + i] * coeff[i]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = [4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0];
        let (vals, vecs) = symmetric_eigen(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let rec: f64 = (0..3).map(|k| vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k]).sum();
                assert!((rec - a[i * 3 + j]).abs() < 1e-10);
                let gram: f64 = (0..3).map(|k| vecs[k * 3 + i] * vecs[k * 3 + j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((gram - id).abs() < 1e-10);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_filter_returns_signal() {
        let w = Adjacency::from_edges(3, GraphKind::Temporal, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let x = [1.0, -2.0, 0.5];
        let y = spectral_filter_oracle(&w, None, &[1.0, 0.0, 0.0], &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_on_two_nodes() {
        let w = Adjacency::from_edges(2, GraphKind::Temporal, &[(0, 1, 1.0)]).unwrap();
        let y = spectral_filter_oracle(&w, None, &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(y[0].abs() < 1e-12 && (y[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_long_series() {
        assert!(dtw_oracle(&[0.0; 8], &[0.0; 7]).is_err());
        assert!(dtw_oracle(&[0.0; 7], &[0.0; 7]).is_ok());
    }
}

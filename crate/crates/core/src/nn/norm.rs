use alloc::vec;
use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{shape_check, Error, Result};
use crate::math::sqrt;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Normalized values and inverse standard deviation of each time step.
#[derive(Debug, Clone)]
pub struct NormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Per-sample layer normalization over the node and channel axes of every
/// time step. `x` is `T × (n·C)`, `gamma`/`beta` are `n·C`.
pub(crate) fn layer_norm_sample(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, NormCache) {
    let width = gamma.len();
    let steps = x.len() / width;
    let mut out = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; steps];
    for t in 0..steps {
        let slice = &x[t * width..(t + 1) * width];
        let mean = slice.iter().sum::<f64>() / width as f64;
        let var = slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
        let is = 1.0 / sqrt(var + LAYER_NORM_EPS);
        inv_std[t] = is;
        for j in 0..width {
            let h = (slice[j] - mean) * is;
            xhat[t * width + j] = h;
            out[t * width + j] = gamma[j] * h + beta[j];
        }
    }
    (out, NormCache { xhat, inv_std })
}

/// Backward of [`layer_norm_sample`]; adds parameter gradients and returns
/// the input gradient.
pub(crate) fn layer_norm_backward_sample(
    cache: &NormCache,
    gamma: &[f64],
    dy: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let width = gamma.len();
    let steps = cache.inv_std.len();
    let mut dx = vec![0.0; dy.len()];
    let nf = width as f64;
    for t in 0..steps {
        let xh = &cache.xhat[t * width..(t + 1) * width];
        let g = &dy[t * width..(t + 1) * width];
        let mut sum_d = 0.0;
        let mut sum_dx = 0.0;
        for j in 0..width {
            dgamma[j] += g[j] * xh[j];
            dbeta[j] += g[j];
            let d = g[j] * gamma[j];
            sum_d += d;
            sum_dx += d * xh[j];
        }
        let is = cache.inv_std[t];
        for j in 0..width {
            let d = g[j] * gamma[j];
            dx[t * width + j] = is * (d - sum_d / nf - xh[j] * sum_dx / nf);
        }
    }
    dx
}

/// Layer normalization of `B × T × n × C` with `n × C` scale and shift.
pub fn layer_norm(x: &DenseArray, gamma: &DenseArray, beta: &DenseArray) -> Result<DenseArray> {
    if x.ndim() != 4 {
        return Err(Error::Data("layer norm input must be B × T × n × C".into()));
    }
    let width = x.dim(2) * x.dim(3);
    if width < 2 {
        return Err(Error::Data("layer norm needs at least two values per time step".into()));
    }
    shape_check("gamma", "node·channel", width, gamma.len())?;
    shape_check("beta", "node·channel", width, beta.len())?;
    let mut out = DenseArray::zeros(x.shape());
    for b in 0..x.dim(0) {
        let (y, _) = layer_norm_sample(x.outer(b), gamma.data(), beta.data());
        out.outer_mut(b).copy_from_slice(&y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_slice_maps_to_beta() {
        let x = DenseArray::filled(&[1, 1, 2, 2], 3.0);
        let gamma = DenseArray::filled(&[2, 2], 2.0);
        let beta = DenseArray::from_vec(&[2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let y = layer_norm(&x, &gamma, &beta).unwrap();
        assert_eq!(y.data(), beta.data());
    }

    #[test]
    fn unit_scale_gives_zero_mean_unit_variance() {
        let x = DenseArray::from_vec(&[1, 2, 2, 2], vec![1.0, 5.0, -2.0, 8.0, 0.0, 0.5, 0.25, 3.0])
            .unwrap();
        let y = layer_norm(&x, &DenseArray::filled(&[2, 2], 1.0), &DenseArray::zeros(&[2, 2])).unwrap();
        for t in 0..2 {
            let s = &y.data()[t * 4..(t + 1) * 4];
            let mean = s.iter().sum::<f64>() / 4.0;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            let raw = &x.data()[t * 4..(t + 1) * 4];
            let rm = raw.iter().sum::<f64>() / 4.0;
            let rv = raw.iter().map(|v| (v - rm) * (v - rm)).sum::<f64>() / 4.0;
            assert!((var - rv / (rv + LAYER_NORM_EPS)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_two_pass_reference() {
        let vals: Vec<f64> = (0..24).map(|i| libm::sin(1.3 * i as f64) * 4.0).collect();
        let x = DenseArray::from_vec(&[2, 2, 3, 2], vals).unwrap();
        let gamma = DenseArray::from_vec(&[3, 2], vec![0.5, 1.0, 1.5, -1.0, 2.0, 0.1]).unwrap();
        let beta = DenseArray::from_vec(&[3, 2], vec![0.0, 0.1, -0.2, 0.3, 0.4, -0.5]).unwrap();
        let y = layer_norm(&x, &gamma, &beta).unwrap();
        for bt in 0..4 {
            let s = &x.data()[bt * 6..(bt + 1) * 6];
            let mut mean = 0.0;
            for v in s {
                mean += v;
            }
            mean /= 6.0;
            let mut var = 0.0;
            for v in s {
                var += (v - mean) * (v - mean);
            }
            var /= 6.0;
            for j in 0..6 {
                let expect = gamma.data()[j] * (s[j] - mean) / libm::sqrt(var + 1e-5) + beta.data()[j];
                assert!((y.data()[bt * 6 + j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mismatched_scale() {
        let x = DenseArray::zeros(&[1, 1, 2, 2]);
        assert!(layer_norm(&x, &DenseArray::zeros(&[3]), &DenseArray::zeros(&[4])).is_err());
        let single = DenseArray::zeros(&[1, 1, 1, 1]);
        assert!(layer_norm(&single, &DenseArray::zeros(&[1]), &DenseArray::zeros(&[1])).is_err());
    }
}

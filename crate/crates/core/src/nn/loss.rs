use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{shape_check, Result};
use crate::math::sign;

/// `½‖e‖² + ‖e‖₁` for one sample and its gradient `e + sign(e)`.
pub fn sample_loss(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let e = p - t;
            loss += 0.5 * e * e + e.abs();
            e + sign(e)
        })
        .collect();
    (loss, grad)
}

/// Batch mean of the combined L2/L1 loss over `B × n` predictions.
///
/// Returns the loss and its gradient with respect to `pred` (already scaled
/// by `1/B`, with `sign(0) = 0`).
pub fn combined_loss(pred: &DenseArray, target: &DenseArray) -> Result<(f64, DenseArray)> {
    shape_check("prediction", "batch", target.dim(0), pred.dim(0))?;
    shape_check("prediction", "node", target.len(), pred.len())?;
    let b = pred.dim(0).max(1) as f64;
    let (loss, mut grad) = sample_loss(pred.data(), target.data());
    grad.iter_mut().for_each(|g| *g /= b);
    Ok((loss / b, DenseArray::from_vec(pred.shape(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_residual() {
        let p = DenseArray::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let (l, g) = combined_loss(&p, &p).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_residual_of_two() {
        let p = DenseArray::from_vec(&[1, 1], vec![3.0]).unwrap();
        let t = DenseArray::from_vec(&[1, 1], vec![1.0]).unwrap();
        let (l, g) = combined_loss(&p, &t).unwrap();
        assert_eq!(l, 4.0);
        assert_eq!(g.data(), &[3.0]);
    }

    #[test]
    fn batch_mean() {
        let p = DenseArray::from_vec(&[2, 1], vec![3.0, 1.0]).unwrap();
        let t = DenseArray::from_vec(&[2, 1], vec![1.0, 1.0]).unwrap();
        let (l, g) = combined_loss(&p, &t).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g.data(), &[1.5, 0.0]);
    }
}

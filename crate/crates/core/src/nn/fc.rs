use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{shape_check, Error, Result};

/// One linear map shared by every node: `out[b,i] = Σ_c w[c]·x[b,i,c] + bias`.
pub fn shared_fc(x: &DenseArray, w: &[f64], bias: f64) -> Result<DenseArray> {
    if x.ndim() != 3 {
        return Err(Error::Data("shared FC input must be B × n × C".into()));
    }
    shape_check("fc weight", "channel", x.dim(2), w.len())?;
    let (b, n) = (x.dim(0), x.dim(1));
    let out: Vec<f64> = x.data().chunks(w.len()).map(|row| fc_row(row, w, bias)).collect();
    DenseArray::from_vec(&[b, n], out)
}

#[inline]
pub(crate) fn fc_row(row: &[f64], w: &[f64], bias: f64) -> f64 {
    row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + bias
}

/// Per-sample backward for `x` of shape `n × C`: adds into `dw`/`dbias` and
/// returns `dx`.
pub fn shared_fc_backward(x: &[f64], w: &[f64], dy: &[f64], dw: &mut [f64], dbias: &mut f64) -> Vec<f64> {
    let c = w.len();
    let mut dx = Vec::with_capacity(x.len());
    for (i, &g) in dy.iter().enumerate() {
        *dbias += g;
        for k in 0..c {
            dw[k] += g * x[i * c + k];
            dx.push(g * w[k]);
        }
    }
    dx
}

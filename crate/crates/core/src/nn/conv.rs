use alloc::vec;
use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{shape_check, Error, Result};
use crate::graph::{filter_stack_adjoint, filter_stack_into, Basis, CsrMatrix, ScaledLaplacian};
use crate::math::{gemm_acc, sigmoid};

/// Output non-linearity of a convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Gated linear unit `G ⊙ σ(H)`; the pre-activation has `2·C_o` channels,
    /// the first half is `G`, the second `H`.
    Glu,
    /// Element-wise logistic sigmoid over `C_o` channels.
    Sigmoid,
}

/// Parameters of a 3D graph convolution.
///
/// `theta` has shape `C_i × W × K_t × K` and `bias` shape `W`, with `W = 2·C_o`
/// under a GLU and `W = C_o` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3DWeights {
    pub theta: DenseArray,
    pub bias: DenseArray,
}

/// Static description of one 3D graph convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayer {
    pub c_in: usize,
    pub c_out: usize,
    /// Temporal kernel size `K_t`.
    pub kt: usize,
    /// Number of graph polynomial terms `K`.
    pub order: usize,
    pub activation: Activation,
    pub basis: Basis,
}

/// Values recorded by a per-sample forward pass.
#[derive(Debug, Clone)]
pub struct ConvCache {
    t_in: usize,
    /// Filtered inputs laid out as `T × n × K × C_i`.
    filtered: Vec<f64>,
    /// Pre-activation, `T_out × n × W`.
    pre: Vec<f64>,
}

impl ConvLayer {
    /// Channels of the pre-activation.
    pub fn width(&self) -> usize {
        match self.activation {
            Activation::Glu => 2 * self.c_out,
            Activation::Sigmoid => self.c_out,
        }
    }

    pub fn theta_shape(&self) -> [usize; 4] {
        [self.c_in, self.width(), self.kt, self.order]
    }

    /// Output time length of a valid (unpadded) convolution.
    pub fn out_len(&self, t_in: usize) -> Option<usize> {
        (t_in >= self.kt).then(|| t_in - self.kt + 1)
    }

    /// Rearranges `theta` into `K_t` matrices of shape `(K·C_i) × W`.
    pub fn pack(&self, theta: &[f64]) -> Vec<f64> {
        let (ci, w, kt, order) = (self.c_in, self.width(), self.kt, self.order);
        let kc = order * ci;
        let mut packed = vec![0.0; kt * kc * w];
        for i in 0..ci {
            for c in 0..w {
                for tp in 0..kt {
                    for k in 0..order {
                        packed[(tp * kc + k * ci + i) * w + c] =
                            theta[((i * w + c) * kt + tp) * order + k];
                    }
                }
            }
        }
        packed
    }

    fn unpack_add(&self, packed: &[f64], theta: &mut [f64]) {
        let (ci, w, kt, order) = (self.c_in, self.width(), self.kt, self.order);
        let kc = order * ci;
        for i in 0..ci {
            for c in 0..w {
                for tp in 0..kt {
                    for k in 0..order {
                        theta[((i * w + c) * kt + tp) * order + k] +=
                            packed[(tp * kc + k * ci + i) * w + c];
                    }
                }
            }
        }
    }

    fn check(&self, lt: Option<&CsrMatrix>, t_in: usize, n: usize) -> Result<usize> {
        if self.order > 1 {
            match lt {
                Some(l) => shape_check("graph convolution input", "node", l.n(), n)?,
                None => {
                    return Err(Error::Config(
                        "graph convolution with K > 1 needs a Laplacian".into(),
                    ))
                }
            }
        }
        self.out_len(t_in).ok_or(Error::Shape {
            what: "graph convolution input",
            axis: "time",
            expected: self.kt,
            found: t_in,
        })
    }

    /// Forward pass for one sample `x` (`T × n × C_i`); returns the
    /// `T_out × n × C_o` output and the cache for [`ConvLayer::backward_sample`].
    pub fn forward_sample(
        &self,
        lt: Option<&CsrMatrix>,
        packed: &[f64],
        bias: &[f64],
        x: &[f64],
        t_in: usize,
        n: usize,
    ) -> Result<(Vec<f64>, ConvCache)> {
        shape_check("graph convolution input", "channel", self.c_in * n * t_in, x.len())?;
        let t_out = self.check(lt, t_in, n)?;
        let (ci, order, w) = (self.c_in, self.order, self.width());
        let kc = order * ci;

        let mut filtered = vec![0.0; t_in * n * kc];
        if order == 1 {
            filtered.copy_from_slice(x);
        } else {
            let lt = lt.expect("checked above");
            let mut stack = vec![0.0; order * n * ci];
            for tau in 0..t_in {
                filter_stack_into(lt, &x[tau * n * ci..(tau + 1) * n * ci], ci, order, self.basis, &mut stack);
                for k in 0..order {
                    for v in 0..n {
                        let dst = ((tau * n + v) * order + k) * ci;
                        let src = (k * n + v) * ci;
                        filtered[dst..dst + ci].copy_from_slice(&stack[src..src + ci]);
                    }
                }
            }
        }

        let rows = t_out * n;
        let mut pre = Vec::with_capacity(rows * w);
        for _ in 0..rows {
            pre.extend_from_slice(bias);
        }
        for tp in 0..self.kt {
            // Output step t reads input step t + K_t − 1 − t'.
            let tau0 = self.kt - 1 - tp;
            gemm_acc(
                rows,
                kc,
                w,
                &filtered[tau0 * n * kc..],
                kc as isize,
                1,
                &packed[tp * kc * w..(tp + 1) * kc * w],
                w as isize,
                1,
                &mut pre,
                w as isize,
                1,
            );
        }

        let co = self.c_out;
        let mut out = vec![0.0; rows * co];
        for r in 0..rows {
            let z = &pre[r * w..(r + 1) * w];
            let y = &mut out[r * co..(r + 1) * co];
            match self.activation {
                Activation::Glu => {
                    for c in 0..co {
                        y[c] = z[c] * sigmoid(z[co + c]);
                    }
                }
                Activation::Sigmoid => {
                    for c in 0..co {
                        y[c] = sigmoid(z[c]);
                    }
                }
            }
        }
        Ok((
            out,
            ConvCache {
                t_in,
                filtered,
                pre,
            },
        ))
    }

    /// Backward pass for one sample. Adds into `dtheta` (theta layout) and
    /// `dbias`, and returns the input gradient when `need_dx` is set.
    #[allow(clippy::too_many_arguments)]
    pub fn backward_sample(
        &self,
        lt: Option<&CsrMatrix>,
        packed: &[f64],
        cache: &ConvCache,
        dy: &[f64],
        n: usize,
        dtheta: &mut [f64],
        dbias: &mut [f64],
        need_dx: bool,
    ) -> Option<Vec<f64>> {
        let (ci, order, w, co) = (self.c_in, self.order, self.width(), self.c_out);
        let kc = order * ci;
        let t_in = cache.t_in;
        let t_out = t_in - self.kt + 1;
        let rows = t_out * n;
        debug_assert_eq!(dy.len(), rows * co);

        let mut dz = vec![0.0; rows * w];
        for r in 0..rows {
            let z = &cache.pre[r * w..(r + 1) * w];
            let g = &dy[r * co..(r + 1) * co];
            let d = &mut dz[r * w..(r + 1) * w];
            match self.activation {
                Activation::Glu => {
                    for c in 0..co {
                        let s = sigmoid(z[co + c]);
                        d[c] = g[c] * s;
                        d[co + c] = g[c] * z[c] * s * (1.0 - s);
                    }
                }
                Activation::Sigmoid => {
                    for c in 0..co {
                        let s = sigmoid(z[c]);
                        d[c] = g[c] * s * (1.0 - s);
                    }
                }
            }
        }
        for r in 0..rows {
            for (b, d) in dbias.iter_mut().zip(&dz[r * w..(r + 1) * w]) {
                *b += d;
            }
        }

        let mut dpacked = vec![0.0; self.kt * kc * w];
        for tp in 0..self.kt {
            let tau0 = self.kt - 1 - tp;
            gemm_acc(
                kc,
                rows,
                w,
                &cache.filtered[tau0 * n * kc..],
                1,
                kc as isize,
                &dz,
                w as isize,
                1,
                &mut dpacked[tp * kc * w..(tp + 1) * kc * w],
                w as isize,
                1,
            );
        }
        self.unpack_add(&dpacked, dtheta);

        if !need_dx {
            return None;
        }
        let mut dfiltered = vec![0.0; t_in * n * kc];
        for tp in 0..self.kt {
            let tau0 = self.kt - 1 - tp;
            gemm_acc(
                rows,
                w,
                kc,
                &dz,
                w as isize,
                1,
                &packed[tp * kc * w..(tp + 1) * kc * w],
                1,
                w as isize,
                &mut dfiltered[tau0 * n * kc..],
                kc as isize,
                1,
            );
        }
        if order == 1 {
            return Some(dfiltered);
        }
        let lt = lt.expect("order > 1 implies a Laplacian");
        let mut dx = vec![0.0; t_in * n * ci];
        let mut stack = vec![0.0; order * n * ci];
        for tau in 0..t_in {
            for k in 0..order {
                for v in 0..n {
                    let src = ((tau * n + v) * order + k) * ci;
                    let dst = (k * n + v) * ci;
                    stack[dst..dst + ci].copy_from_slice(&dfiltered[src..src + ci]);
                }
            }
            filter_stack_adjoint(
                lt,
                &stack,
                ci,
                order,
                self.basis,
                &mut dx[tau * n * ci..(tau + 1) * n * ci],
            );
        }
        Some(dx)
    }

    /// Batched forward over `B × T × n × C_i`.
    pub fn forward(
        &self,
        x: &DenseArray,
        lt: Option<&ScaledLaplacian>,
        weights: &Conv3DWeights,
    ) -> Result<DenseArray> {
        if x.ndim() != 4 {
            return Err(Error::Data("convolution input must be B × T × n × C".into()));
        }
        let (b, t, n, ci) = (x.dim(0), x.dim(1), x.dim(2), x.dim(3));
        shape_check("graph convolution input", "channel", self.c_in, ci)?;
        let ts = self.theta_shape();
        for (axis, (&e, &f)) in ["c_in", "width", "k_t", "k"]
            .iter()
            .zip(ts.iter().zip(weights.theta.shape()))
        {
            shape_check("theta", axis, e, f)?;
        }
        shape_check("bias", "width", self.width(), weights.bias.len())?;
        let t_out = self.check(lt.map(|l| l.matrix()), t, n)?;
        let packed = self.pack(weights.theta.data());
        let mut out = DenseArray::zeros(&[b, t_out, n, self.c_out]);
        for s in 0..b {
            let (y, _) = self.forward_sample(
                lt.map(|l| l.matrix()),
                &packed,
                weights.bias.data(),
                x.outer(s),
                t,
                n,
            )?;
            out.outer_mut(s).copy_from_slice(&y);
        }
        out.debug_check_finite("graph convolution");
        Ok(out)
    }
}

/// 3D graph convolution with a GLU: `B × T × n × C_i → B × (T−K_t+1) × n × C_o`.
///
/// `C_o` is half the second axis of `theta`, `K_t` and `K` its last two axes.
pub fn gconv3d_forward(
    x: &DenseArray,
    lt: &ScaledLaplacian,
    weights: &Conv3DWeights,
    basis: Basis,
) -> Result<DenseArray> {
    let layer = glu_layer_for(&weights.theta, basis)?;
    layer.forward(x, Some(lt), weights)
}

/// Purely temporal GLU convolution; `theta` is `C_i × 2C_o × K_t`.
///
/// Identical to [`gconv3d_forward`] with `K = 1`.
pub fn temporal_conv1d_forward(x: &DenseArray, theta: &DenseArray, bias: &DenseArray) -> Result<DenseArray> {
    if theta.ndim() != 3 {
        return Err(Error::Data("temporal kernel must be C_i × 2C_o × K_t".into()));
    }
    let s = theta.shape();
    let weights = Conv3DWeights {
        theta: theta.clone().reshape(&[s[0], s[1], s[2], 1])?,
        bias: bias.clone(),
    };
    let layer = glu_layer_for(&weights.theta, Basis::Chebyshev)?;
    layer.forward(x, None, &weights)
}

fn glu_layer_for(theta: &DenseArray, basis: Basis) -> Result<ConvLayer> {
    if theta.ndim() != 4 {
        return Err(Error::Data("theta must be C_i × 2C_o × K_t × K".into()));
    }
    let s = theta.shape();
    if s[1] % 2 != 0 || s[1] == 0 || s[2] == 0 || s[3] == 0 {
        return Err(Error::Data(alloc::format!(
            "theta shape {s:?} needs an even, non-zero output axis and K_t, K ≥ 1"
        )));
    }
    Ok(ConvLayer {
        c_in: s[0],
        c_out: s[1] / 2,
        kt: s[2],
        order: s[3],
        activation: Activation::Glu,
        basis,
    })
}

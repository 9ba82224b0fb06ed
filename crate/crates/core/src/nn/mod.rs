//! Differentiable building blocks of the forecaster.
//!
//! Every layer exposes a batched forward over `B × T × n × C` arrays for
//! direct use, and a per-sample forward that records what its backward pass
//! needs. Gradients are accumulated per sample so that batch reductions can
//! happen in a fixed order.

pub(crate) mod adam;
pub(crate) mod conv;
pub(crate) mod fc;
pub(crate) mod loss;
pub(crate) mod norm;

use alloc::string::String;
use core::fmt;

pub use adam::{adam_update, AdamConfig};
pub use conv::{
    gconv3d_forward, temporal_conv1d_forward, Activation, Conv3DWeights, ConvCache, ConvLayer,
};
pub use fc::{shared_fc, shared_fc_backward};
pub use loss::{combined_loss, sample_loss};
pub use norm::{layer_norm, NormCache, LAYER_NORM_EPS};

use crate::array::DenseArray;

/// Trainable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub class: ParamClass,
    pub value: DenseArray,
    pub grad: DenseArray,
    pub m: DenseArray,
    pub v: DenseArray,
}

impl Param {
    pub fn new(name: impl Into<String>, class: ParamClass, value: DenseArray) -> Self {
        let zeros = DenseArray::zeros(value.shape());
        Self {
            name: name.into(),
            class,
            grad: zeros.clone(),
            m: zeros.clone(),
            v: zeros,
            value,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Kinds of parameters, used to group gradient-check reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamClass {
    Theta,
    Bias,
    Gamma,
    Beta,
    FcWeight,
    FcBias,
}

impl ParamClass {
    pub const ALL: [ParamClass; 6] = [
        ParamClass::Theta,
        ParamClass::Bias,
        ParamClass::Gamma,
        ParamClass::Beta,
        ParamClass::FcWeight,
        ParamClass::FcBias,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamClass::Theta => "theta",
            ParamClass::Bias => "bias",
            ParamClass::Gamma => "gamma",
            ParamClass::Beta => "beta",
            ParamClass::FcWeight => "fc_weight",
            ParamClass::FcBias => "fc_bias",
        }
    }
}

impl fmt::Display for ParamClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for ParamClass {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        ParamClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| crate::Error::Config(alloc::format!("unknown parameter class `{s}`")))
    }
}

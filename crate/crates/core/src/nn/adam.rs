use super::Param;
use crate::math::sqrt;

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam step (`step` is 1-based) using each parameter's
/// stored gradient.
pub fn adam_update(params: &mut [Param], step: u64, lr: f64, cfg: AdamConfig) {
    assert!(step >= 1, "Adam steps are 1-based");
    let bc1 = 1.0 - libm::pow(cfg.beta1, step as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, step as f64);
    for p in params.iter_mut() {
        let g = p.grad.data();
        let m = p.m.data_mut();
        for (mi, gi) in m.iter_mut().zip(g) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
        }
        let v = p.v.data_mut();
        for (vi, gi) in v.iter_mut().zip(g) {
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
        }
        let (m, v) = (p.m.data(), p.v.data());
        let value = p.value.data_mut();
        for i in 0..value.len() {
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            value[i] -= lr * mhat / (sqrt(vhat) + cfg.eps);
        }
    }
}

//! Synthetic traffic with planted road clusters.
//!
//! Road `i` belongs to cluster `i % clusters`. Its speed is the cluster's
//! daily sinusoid plus a per-road offset plus stationary AR(1) Gaussian noise
//! whose marginal standard deviation is `noise_frac · amplitude`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use tgcn_core::rng;
use tgcn_core::series::SpeedMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_roads: usize,
    pub clusters: usize,
    pub days: usize,
    pub steps_per_day: usize,
    pub base: f64,
    pub amplitude: f64,
    /// Per-road offsets are uniform in `±offset_frac · amplitude`.
    pub offset_frac: f64,
    pub noise_frac: f64,
    /// Lag-one autocorrelation of the noise; 0 gives white noise.
    pub noise_ar: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_roads: 30,
            clusters: 2,
            days: 20,
            steps_per_day: 288,
            base: 60.0,
            amplitude: 10.0,
            offset_frac: 0.1,
            noise_frac: 0.1,
            noise_ar: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub speeds: SpeedMatrix,
    pub cluster_of: Vec<usize>,
}

/// Noise-free daily shape of cluster `c` at time-of-day fraction `u`.
fn cluster_shape(c: usize, u: f64) -> f64 {
    // One cycle per day; clusters differ in phase and in level, and warping
    // cannot hide a level shift.
    let phase = c as f64 * TAU / 4.0;
    let level = -0.6 * c as f64;
    level + (TAU * u + phase).sin()
}

pub fn generate(cfg: &SynthConfig) -> CliResult<SynthData> {
    if cfg.n_roads == 0 || cfg.clusters == 0 || cfg.days == 0 || cfg.steps_per_day == 0 {
        return Err(CliError::Config("synthetic data needs roads, clusters, days and steps".into()));
    }
    if !(0.0..1.0).contains(&cfg.noise_ar) {
        return Err(CliError::Config(format!("noise_ar {} must lie in [0, 1)", cfg.noise_ar)));
    }
    let mut rng = rng::stream(cfg.seed, rng::DATA_STREAM);
    let sigma = cfg.noise_frac * cfg.amplitude;
    let cluster_of: Vec<usize> = (0..cfg.n_roads).map(|i| i % cfg.clusters).collect();
    let offsets: Vec<f64> = (0..cfg.n_roads)
        .map(|_| cfg.offset_frac * cfg.amplitude * rng.random_range(-1.0..1.0))
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let innovation = (1.0 - cfg.noise_ar * cfg.noise_ar).sqrt();
    let mut noise: Vec<f64> = (0..cfg.n_roads).map(|_| sigma * unit.sample(&mut rng)).collect();

    let t_total = cfg.days * cfg.steps_per_day;
    let mut values = Vec::with_capacity(t_total * cfg.n_roads);
    for t in 0..t_total {
        let u = (t % cfg.steps_per_day) as f64 / cfg.steps_per_day as f64;
        for road in 0..cfg.n_roads {
            if t > 0 {
                noise[road] = cfg.noise_ar * noise[road] + innovation * sigma * unit.sample(&mut rng);
            }
            let clean = cfg.base + cfg.amplitude * cluster_shape(cluster_of[road], u) + offsets[road];
            values.push(clean + noise[road]);
        }
    }
    Ok(SynthData {
        speeds: SpeedMatrix::new(values, cfg.n_roads, cfg.steps_per_day)?,
        cluster_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let cfg = SynthConfig {
            days: 3,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a.speeds.n_steps(), 3 * 288);
        assert_eq!(a.speeds.n_roads(), 30);
        assert_eq!(a.cluster_of.iter().filter(|&&c| c == 1).count(), 15);
        let b = generate(&cfg).unwrap();
        assert_eq!(a.speeds.values(), b.speeds.values());
    }

    #[test]
    fn noise_has_the_requested_spread_and_memory() {
        let cfg = SynthConfig {
            n_roads: 4,
            days: 200,
            offset_frac: 0.0,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let s = &d.speeds;
        let resid: Vec<f64> = (0..s.n_steps())
            .map(|t| {
                let u = s.slot(t) as f64 / 288.0;
                s.get(t, 0) - cfg.base - cfg.amplitude * cluster_shape(0, u)
            })
            .collect();
        let var = resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64;
        assert!((var.sqrt() - 1.0).abs() < 0.1, "std {}", var.sqrt());
        let lag1 = resid.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (resid.len() - 1) as f64 / var;
        assert!((lag1 - 0.95).abs() < 0.02, "lag-1 correlation {lag1}");
    }
}

//! Central finite-difference check of the analytic gradients of a full model.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::array::DenseArray;
use crate::exec::Sequential;
use crate::graph::{scaled_laplacian, Adjacency, GraphKind};
use crate::model::{ModelState, TGCNConfig};
use crate::nn::ParamClass;
use crate::rng;
use crate::series::WindowSet;
use crate::Result;

pub const STEP: f64 = 1e-5;
pub const THRESHOLD: f64 = 1e-4;
/// Denominator floor so that gradients that vanish analytically are compared
/// on an absolute scale instead of dividing round-off by round-off.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub config: TGCNConfig,
    pub n: usize,
    pub batch: usize,
    pub seed: u64,
    pub step: f64,
    pub threshold: f64,
    /// Perturbs the analytic gradient of one parameter class before the
    /// comparison, to show the check can fail.
    pub corrupt: Option<ParamClass>,
}

impl GradcheckOptions {
    /// The small end-to-end model: 4 roads, 6 input steps, one block of
    /// width 4.
    pub fn toy(seed: u64) -> Self {
        Self {
            config: TGCNConfig {
                n_blocks: 1,
                layers_per_block: 2,
                channels: 4,
                cheb_k: 3,
                kt: 2,
                input_len: 6,
                horizon: 1,
                ..TGCNConfig::default()
            },
            n: 4,
            batch: 2,
            seed,
            step: STEP,
            threshold: THRESHOLD,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub class: ParamClass,
    pub entries: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub params: Vec<ParamCheck>,
    pub threshold: f64,
}

impl GradcheckReport {
    /// Largest relative error per class, for the classes present.
    pub fn by_class(&self) -> Vec<(ParamClass, f64)> {
        ParamClass::ALL
            .iter()
            .filter_map(|&c| {
                self.params
                    .iter()
                    .filter(|p| p.class == c)
                    .map(|p| p.max_rel_error)
                    .reduce(f64::max)
                    .map(|e| (c, e))
            })
            .collect()
    }

    pub fn failing_classes(&self) -> Vec<ParamClass> {
        self.by_class()
            .into_iter()
            .filter(|&(_, e)| !(e < self.threshold))
            .map(|(c, _)| c)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failing_classes().is_empty()
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (class, err) in self.by_class() {
            let verdict = if err < self.threshold { "ok" } else { "FAIL" };
            writeln!(f, "{:<10} max rel error {:.3e}  {verdict}", class.as_str(), err)?;
        }
        write!(
            f,
            "gradcheck {} (threshold {:.0e})",
            if self.passed() { "passed" } else { "failed" },
            self.threshold
        )
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// A ring over the roads with one chord, so every node has neighbours and
/// the spectrum is not degenerate.
fn toy_graph(n: usize) -> Result<Adjacency> {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    if n > 1 {
        for i in 0..n - 1 {
            edges.push((i, i + 1, 1.0));
        }
    }
    if n > 2 {
        edges.push((0, n - 1, 1.0));
    }
    if n > 3 {
        edges.push((0, 2, 1.0));
    }
    Adjacency::from_edges(n, GraphKind::Temporal, &edges)
}

fn toy_windows(opts: &GradcheckOptions) -> Result<WindowSet> {
    let (b, m, n) = (opts.batch, opts.config.input_len, opts.n);
    let h = opts.config.horizon;
    let mut rng = rng::stream(opts.seed, rng::DATA_STREAM);
    let mut draw = |len| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.5..1.5)).collect() };
    let inputs = DenseArray::from_vec(&[b, m, n], draw(b * m * n))?;
    let targets_seq = DenseArray::from_vec(&[b, h, n], draw(b * h * n))?;
    let mut direct = Vec::with_capacity(b * n);
    for s in 0..b {
        direct.extend_from_slice(&targets_seq.outer(s)[(h - 1) * n..]);
    }
    Ok(WindowSet {
        inputs,
        targets_direct: DenseArray::from_vec(&[b, n], direct)?,
        targets_seq,
        input_len: m,
        horizon: h,
        steps_per_day: 288,
        offset: 0,
    })
}

/// Compares every analytic gradient entry with a central difference of the
/// mean combined loss.
pub fn gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let adj = toy_graph(opts.n)?;
    let lt = scaled_laplacian(&adj)?;
    let mut state = ModelState::build(opts.config, lt, opts.n, opts.seed)?;
    let data = toy_windows(opts)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let exec = Sequential;

    state.batch_gradient(&data, &all, &exec)?;
    let analytic: Vec<Vec<f64>> = state
        .params()
        .iter()
        .map(|p| {
            let mut g = p.grad.data().to_vec();
            if opts.corrupt == Some(p.class) {
                for v in &mut g {
                    *v = *v * 1.01 + 1e-3;
                }
            }
            g
        })
        .collect();

    let mut flat = state.flat_values();
    let mut params = Vec::with_capacity(analytic.len());
    let mut base = 0;
    for (pi, grads) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for (e, &a) in grads.iter().enumerate() {
            let idx = base + e;
            let orig = flat[idx];
            flat[idx] = orig + opts.step;
            state.load_flat(&flat)?;
            let up = state.batch_gradient(&data, &all, &exec)?;
            flat[idx] = orig - opts.step;
            state.load_flat(&flat)?;
            let down = state.batch_gradient(&data, &all, &exec)?;
            flat[idx] = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            worst = worst.max(relative_error(a, numeric));
        }
        let p = &state.params()[pi];
        params.push(ParamCheck {
            name: p.name.clone(),
            class: p.class,
            entries: grads.len(),
            max_rel_error: worst,
        });
        base += grads.len();
    }
    state.load_flat(&flat)?;
    Ok(GradcheckReport {
        params,
        threshold: opts.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OutputBlock;

    #[test]
    fn toy_model_passes() {
        let report = gradcheck(&GradcheckOptions::toy(7)).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.by_class().len(), ParamClass::ALL.len());
    }

    #[test]
    fn two_block_model_passes() {
        let mut opts = GradcheckOptions::toy(3);
        opts.config.n_blocks = 2;
        opts.config.horizon = 3;
        let report = gradcheck(&opts).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn temporal_output_block_passes() {
        let mut opts = GradcheckOptions::toy(5);
        opts.config.output_block = OutputBlock::Temporal;
        assert!(gradcheck(&opts).unwrap().passed());
    }

    #[test]
    fn corruption_is_reported_for_its_class() {
        for class in ParamClass::ALL {
            let mut opts = GradcheckOptions::toy(11);
            opts.corrupt = Some(class);
            let report = gradcheck(&opts).unwrap();
            assert_eq!(report.failing_classes(), [class], "{report}");
        }
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(relative_error(1e-12, 0.0) < 1e-5);
    }
}

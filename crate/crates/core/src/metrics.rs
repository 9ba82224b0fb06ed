//! Error metrics, the historical-average baseline and model evaluation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::array::DenseArray;
use crate::error::{shape_check, Error, Result};
use crate::exec::Executor;
use crate::math::sqrt;
use crate::model::{predict_recursive, ModelState};
use crate::series::{NormStats, SpeedMatrix, WindowSet};

/// Targets with `|truth|` at or below this are left out of MAPE.
pub const MAPE_MASK: f64 = 1e-6;

/// MAE / MAPE / RMSE over all samples and roads jointly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    /// Percent; `None` when every target was masked.
    pub mape: Option<f64>,
    pub rmse: f64,
    pub horizon_minutes: usize,
    pub n_samples: usize,
    /// Number of targets excluded from MAPE.
    pub masked: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "horizon_minutes,mae,mape,rmse,n_samples,masked";

    /// One CSV line matching [`MetricReport::CSV_HEADER`]; undefined MAPE is `NA`.
    pub fn csv_row(&self) -> alloc::string::String {
        let mape = self.mape.map_or_else(|| "NA".into(), |m| format!("{m}"));
        format!(
            "{},{},{},{},{},{}",
            self.horizon_minutes, self.mae, mape, self.rmse, self.n_samples, self.masked
        )
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mape = self.mape.map_or_else(|| "     n/a".into(), |m| format!("{m:8.3}"));
        write!(
            f,
            "{:>6} min  MAE {:8.4}  MAPE(%) {}  RMSE {:8.4}  samples {}",
            self.horizon_minutes, self.mae, mape, self.rmse, self.n_samples
        )
    }
}

/// Metrics of `pred` against `truth` (same shape, original units).
pub fn compute_metrics(pred: &DenseArray, truth: &DenseArray) -> Result<MetricReport> {
    if pred.shape() != truth.shape() {
        return Err(Error::Data(format!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Data("no predictions to score".into()));
    }
    let (mut abs, mut sq, mut pct) = (0.0, 0.0, 0.0);
    let mut masked = 0;
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        let e = p - t;
        abs += e.abs();
        sq += e * e;
        if t.abs() > MAPE_MASK {
            pct += e.abs() / t.abs();
        } else {
            masked += 1;
        }
    }
    let count = pred.len() as f64;
    let kept = pred.len() - masked;
    Ok(MetricReport {
        mae: abs / count,
        mape: (kept > 0).then(|| 100.0 * pct / kept as f64),
        rmse: sqrt(sq / count),
        horizon_minutes: 0,
        n_samples: pred.dim(0),
        masked,
    })
}

/// Minutes per step for a given sampling rate.
pub fn minutes_per_step(steps_per_day: usize) -> usize {
    1440 / steps_per_day.max(1)
}

/// Seasonal mean of every road at every time-of-day slot over the training data.
///
/// Returns `steps_per_day × n`.
pub fn slot_means(train: &SpeedMatrix) -> Result<DenseArray> {
    let spd = train.steps_per_day();
    let n = train.n_roads();
    if train.n_steps() < spd {
        return Err(Error::Data(format!(
            "historical average needs a full day ({spd} steps), training data has {}",
            train.n_steps()
        )));
    }
    let mut sums = vec![0.0; spd * n];
    let mut counts = vec![0usize; spd];
    for t in 0..train.n_steps() {
        let slot = train.slot(t);
        counts[slot] += 1;
        for (s, v) in sums[slot * n..(slot + 1) * n].iter_mut().zip(train.row(t)) {
            *s += v;
        }
    }
    for slot in 0..spd {
        for s in &mut sums[slot * n..(slot + 1) * n] {
            *s /= counts[slot] as f64;
        }
    }
    DenseArray::from_vec(&[spd, n], sums)
}

/// Historical-average predictions for the direct targets of every window of
/// `test` (`B × n`), where windows use `input_len` inputs and `horizon`.
pub fn historical_average(
    train: &SpeedMatrix,
    test: &SpeedMatrix,
    input_len: usize,
    horizon: usize,
) -> Result<DenseArray> {
    shape_check("test segment", "road", train.n_roads(), test.n_roads())?;
    if train.steps_per_day() != test.steps_per_day() {
        return Err(Error::Data("train and test use different steps per day".into()));
    }
    let means = slot_means(train)?;
    let t = test.n_steps();
    if t < input_len + horizon {
        return Err(Error::Data(format!(
            "test segment of {t} steps holds no window of {input_len} + {horizon}"
        )));
    }
    let count = t - input_len - horizon + 1;
    let n = test.n_roads();
    let mut out = Vec::with_capacity(count * n);
    for b in 0..count {
        out.extend_from_slice(means.outer(test.slot(b + input_len + horizon - 1)));
    }
    DenseArray::from_vec(&[count, n], out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// One forward pass of a model trained for the window horizon.
    Direct,
    /// Roll a one-step model forward to the window horizon.
    Recursive,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Direct => "direct",
            EvalMode::Recursive => "recursive",
        })
    }
}

impl core::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(EvalMode::Direct),
            "recursive" => Ok(EvalMode::Recursive),
            other => Err(Error::Config(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

fn denormalize(a: &DenseArray, stats: &NormStats) -> DenseArray {
    let n = *a.shape().last().expect("non-scalar");
    let data = a
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| stats.denormalize(i % n, v))
        .collect();
    DenseArray::from_vec(a.shape(), data).expect("same shape")
}

/// Denormalized predictions for every window, `B × steps × n`: a single step
/// (the window horizon) in direct mode, every step `1..=H` in recursive mode.
pub fn predict_windows<E: Executor>(
    state: &ModelState,
    windows: &WindowSet,
    stats: &NormStats,
    mode: EvalMode,
    exec: &E,
) -> Result<DenseArray> {
    let h = windows.horizon;
    let pred = match mode {
        EvalMode::Direct => {
            if state.config().horizon != h {
                return Err(Error::Horizon {
                    model: state.config().horizon,
                    requested: h,
                });
            }
            let p = state.forward_with(&windows.inputs, exec)?;
            let (b, n) = (p.dim(0), p.dim(1));
            p.reshape(&[b, 1, n])?
        }
        EvalMode::Recursive => predict_recursive(state, &windows.inputs, h)?,
    };
    Ok(denormalize(&pred, stats))
}

/// Scores a model on normalized `test` windows in original units.
///
/// Direct mode needs a model trained for `test.horizon`; recursive mode needs
/// a one-step model and scores its `H`-th rollout step.
pub fn evaluate<E: Executor>(
    state: &ModelState,
    test: &WindowSet,
    stats: &NormStats,
    mode: EvalMode,
    exec: &E,
) -> Result<MetricReport> {
    let steps = evaluate_steps(state, test, stats, mode, exec)?;
    Ok(*steps.last().expect("at least one step"))
}

/// Like [`evaluate`], returning one report per predicted step (a single
/// report in direct mode).
pub fn evaluate_steps<E: Executor>(
    state: &ModelState,
    test: &WindowSet,
    stats: &NormStats,
    mode: EvalMode,
    exec: &E,
) -> Result<Vec<MetricReport>> {
    let pred = predict_windows(state, test, stats, mode, exec)?;
    let (b, steps, n) = (pred.dim(0), pred.dim(1), pred.dim(2));
    let truth_seq = denormalize(&test.targets_seq, stats);
    let first_h = test.horizon + 1 - steps;
    let mpm = minutes_per_step(test.steps_per_day);
    (0..steps)
        .map(|s| {
            let h = first_h + s;
            let mut p = Vec::with_capacity(b * n);
            let mut t = Vec::with_capacity(b * n);
            for k in 0..b {
                p.extend_from_slice(&pred.outer(k)[s * n..(s + 1) * n]);
                t.extend_from_slice(&truth_seq.outer(k)[(h - 1) * n..h * n]);
            }
            let mut r = compute_metrics(
                &DenseArray::from_vec(&[b, n], p)?,
                &DenseArray::from_vec(&[b, n], t)?,
            )?;
            r.horizon_minutes = h * mpm;
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arr(shape: &[usize], v: &[f64]) -> DenseArray {
        DenseArray::from_vec(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let t = arr(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let r = compute_metrics(&t, &t).unwrap();
        assert_eq!((r.mae, r.mape, r.rmse), (0.0, Some(0.0), 0.0));
    }

    #[test]
    fn worked_example() {
        let r = compute_metrics(&arr(&[1, 2], &[2.0, 4.0]), &arr(&[1, 2], &[1.0, 2.0])).unwrap();
        assert_eq!(r.mae, 1.5);
        // 100 * mean(1/1, 2/2)
        assert_eq!(r.mape, Some(100.0));
        assert!((r.rmse - libm::sqrt(2.5)).abs() < 1e-15);
        assert!((r.rmse - 1.5811).abs() < 1e-4);
    }

    #[test]
    fn zero_targets_are_masked() {
        let r = compute_metrics(&arr(&[1, 2], &[1.0, 3.0]), &arr(&[1, 2], &[0.0, 2.0])).unwrap();
        assert_eq!(r.masked, 1);
        assert_eq!(r.mape, Some(50.0));
        assert_eq!(r.mae, 1.0);
        let all = compute_metrics(&arr(&[1, 1], &[1.0]), &arr(&[1, 1], &[0.0])).unwrap();
        assert_eq!(all.mape, None);
        assert_eq!(all.mae, 1.0);
        assert!(all.csv_row().contains("NA"));
    }

    #[test]
    fn historical_average_of_identical_days() {
        let day = [1.0, 2.0, 3.0, 4.0];
        let train: Vec<f64> = day.iter().chain(&day).chain(&day).copied().collect();
        let full = SpeedMatrix::new(train.iter().chain(&day).copied().collect(), 1, 4).unwrap();
        let tr = full.slice_rows(0, 12).unwrap();
        let te = full.slice_rows(12, 16).unwrap();
        let pred = historical_average(&tr, &te, 2, 1).unwrap();
        // windows target rows 2 and 3 of the test day
        assert_eq!(pred.data(), &[3.0, 4.0]);
        let truth = arr(&[2, 1], &[3.0, 4.0]);
        assert_eq!(compute_metrics(&pred, &truth).unwrap().mae, 0.0);
    }

    #[test]
    fn historical_average_mixes_days() {
        let s = SpeedMatrix::new(vec![1.0, 10.0, 3.0, 20.0, 0.0, 0.0, 0.0, 0.0], 1, 2).unwrap();
        let means = slot_means(&s.slice_rows(0, 4).unwrap()).unwrap();
        assert_eq!(means.data(), &[2.0, 15.0]);
        assert!(slot_means(&s.slice_rows(0, 1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae_and_order_does_not_matter(
            vals in proptest::collection::vec((-50.0f64..50.0, 1.0f64..80.0), 2..40)
        ) {
            let p: Vec<f64> = vals.iter().map(|v| v.0 + v.1).collect();
            let t: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let r = compute_metrics(&arr(&[p.len(), 1], &p), &arr(&[t.len(), 1], &t)).unwrap();
            prop_assert!(r.rmse + 1e-12 >= r.mae);
            let pr: Vec<f64> = p.iter().rev().copied().collect();
            let tr: Vec<f64> = t.iter().rev().copied().collect();
            let r2 = compute_metrics(&arr(&[p.len(), 1], &pr), &arr(&[t.len(), 1], &tr)).unwrap();
            prop_assert!((r.mae - r2.mae).abs() < 1e-12);
            prop_assert!((r.rmse - r2.rmse).abs() < 1e-12);
        }
    }
}

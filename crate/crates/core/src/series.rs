//! Speed matrices, chronological splits, z-score scaling and sliding windows.

use alloc::format;
use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{Error, Result};
use crate::math;

/// Floor applied to the standard deviation of degenerate (constant) data.
pub const STD_EPSILON: f64 = 1e-8;

/// `T × n` observed speeds, rows are time steps and columns are roads.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedMatrix {
    values: Vec<f64>,
    n_roads: usize,
    steps_per_day: usize,
    /// Absolute index of the first row within the series it was cut from.
    offset: usize,
}

impl SpeedMatrix {
    /// Wraps row-major values. Every entry must be finite.
    pub fn new(values: Vec<f64>, n_roads: usize, steps_per_day: usize) -> Result<Self> {
        Self::with_offset(values, n_roads, steps_per_day, 0)
    }

    pub fn with_offset(
        values: Vec<f64>,
        n_roads: usize,
        steps_per_day: usize,
        offset: usize,
    ) -> Result<Self> {
        if n_roads == 0 {
            return Err(Error::Data("speed matrix needs at least one road".into()));
        }
        if steps_per_day == 0 {
            return Err(Error::Config("steps_per_day must be positive".into()));
        }
        if values.is_empty() || values.len() % n_roads != 0 {
            return Err(Error::Data(format!(
                "{} values do not form rows of {} roads",
                values.len(),
                n_roads
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite speed at row {}, column {}",
                pos / n_roads,
                pos % n_roads
            )));
        }
        Ok(Self {
            values,
            n_roads,
            steps_per_day,
            offset,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], steps_per_day: usize) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Data(format!(
                    "row {} has {} columns, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, n, steps_per_day)
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() / self.n_roads
    }

    pub fn n_roads(&self) -> usize {
        self.n_roads
    }

    pub fn steps_per_day(&self) -> usize {
        self.steps_per_day
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_roads..(t + 1) * self.n_roads]
    }

    pub fn get(&self, t: usize, road: usize) -> f64 {
        self.values[t * self.n_roads + road]
    }

    /// Time-of-day slot of row `t`.
    pub fn slot(&self, t: usize) -> usize {
        (self.offset + t) % self.steps_per_day
    }

    /// Contiguous rows `[start, end)`; the result remembers its absolute offset.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_steps() {
            return Err(Error::Data(format!(
                "row range {start}..{end} is empty or exceeds {} rows",
                self.n_steps()
            )));
        }
        Ok(Self {
            values: self.values[start * self.n_roads..end * self.n_roads].to_vec(),
            n_roads: self.n_roads,
            steps_per_day: self.steps_per_day,
            offset: self.offset + start,
        })
    }

    fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let n = self.n_roads;
        Self {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(i % n, v))
                .collect(),
            n_roads: self.n_roads,
            steps_per_day: self.steps_per_day,
            offset: self.offset,
        }
    }
}

/// Splits `s` into consecutive train / validation / test segments.
///
/// Boundaries are `floor(T·train_frac)` and that plus `floor(T·val_frac)`.
/// Every segment must hold at least `min_rows` steps (use `M + H` so each
/// segment can host one window).
pub fn chronological_split(
    s: &SpeedMatrix,
    train_frac: f64,
    val_frac: f64,
    min_rows: usize,
) -> Result<(SpeedMatrix, SpeedMatrix, SpeedMatrix)> {
    let in_unit = |f: f64| f > 0.0 && f < 1.0;
    if !in_unit(train_frac) || !in_unit(val_frac) || train_frac + val_frac >= 1.0 {
        return Err(Error::Config(format!(
            "split fractions {train_frac}/{val_frac} must lie in (0,1) and sum below 1"
        )));
    }
    let t = s.n_steps();
    // The nudge keeps exact products such as 10 × 0.7 from flooring to 6.
    let rows = |f: f64| libm::floor(t as f64 * f + 1e-9) as usize;
    let train_end = rows(train_frac);
    let val_end = train_end + rows(val_frac);
    let sizes = [train_end, val_end - train_end, t.saturating_sub(val_end)];
    for (name, size) in ["train", "validation", "test"].iter().zip(sizes) {
        if size < min_rows.max(1) {
            return Err(Error::Data(format!(
                "{name} segment has {size} rows but at least {} are needed",
                min_rows.max(1)
            )));
        }
    }
    Ok((
        s.slice_rows(0, train_end)?,
        s.slice_rows(train_end, val_end)?,
        s.slice_rows(val_end, t)?,
    ))
}

/// How z-score statistics are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// One mean and standard deviation over the whole training matrix.
    Global,
    /// Separate statistics for every road.
    PerRoad,
}

impl core::fmt::Display for Normalization {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Normalization::Global => "global",
            Normalization::PerRoad => "per_road",
        })
    }
}

impl core::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Normalization::Global),
            "per_road" => Ok(Normalization::PerRoad),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Mean and standard deviation used to scale speeds.
///
/// Holds a single entry for [`Normalization::Global`] and one entry per road
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn global(mean: f64, std: f64) -> Self {
        Self {
            mean: alloc::vec![mean],
            std: alloc::vec![std],
        }
    }

    pub fn is_global(&self) -> bool {
        self.mean.len() == 1
    }

    #[inline]
    pub fn mean_for(&self, road: usize) -> f64 {
        if self.is_global() {
            self.mean[0]
        } else {
            self.mean[road]
        }
    }

    #[inline]
    pub fn std_for(&self, road: usize) -> f64 {
        if self.is_global() {
            self.std[0]
        } else {
            self.std[road]
        }
    }

    pub fn normalize(&self, road: usize, v: f64) -> f64 {
        (v - self.mean_for(road)) / self.std_for(road)
    }

    pub fn denormalize(&self, road: usize, v: f64) -> f64 {
        v * self.std_for(road) + self.mean_for(road)
    }
}

fn mean_std<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> (f64, f64) {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    let mut std = math::sqrt(var);
    if std < STD_EPSILON {
        log::warn!("training data has (near) zero variance; std clamped to {STD_EPSILON}");
        std = STD_EPSILON;
    }
    (mean, std)
}

/// Fits z-score statistics (population standard deviation) on training data.
pub fn fit_zscore(train: &SpeedMatrix, mode: Normalization) -> NormStats {
    match mode {
        Normalization::Global => {
            let (mean, std) = mean_std(train.values.iter());
            NormStats::global(mean, std)
        }
        Normalization::PerRoad => {
            let n = train.n_roads;
            let (mean, std) = (0..n)
                .map(|r| mean_std(train.values.iter().skip(r).step_by(n)))
                .unzip();
            NormStats { mean, std }
        }
    }
}

pub fn apply_zscore(s: &SpeedMatrix, stats: &NormStats) -> SpeedMatrix {
    s.map_values(|road, v| stats.normalize(road, v))
}

pub fn invert_zscore(s: &SpeedMatrix, stats: &NormStats) -> SpeedMatrix {
    s.map_values(|road, v| stats.denormalize(road, v))
}

/// Supervised samples cut from one contiguous segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    /// `B × M × n`
    pub inputs: DenseArray,
    /// `B × n`, the value `H` steps after the last input step.
    pub targets_direct: DenseArray,
    /// `B × H × n`, every step from 1 to `H` after the input.
    pub targets_seq: DenseArray,
    pub input_len: usize,
    pub horizon: usize,
    pub steps_per_day: usize,
    /// Absolute time index of the first row of the source segment.
    pub offset: usize,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.inputs.dim(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_roads(&self) -> usize {
        self.inputs.dim(2)
    }

    /// Absolute time index of sample `b`'s direct target.
    pub fn target_step(&self, b: usize) -> usize {
        self.offset + b + self.input_len + self.horizon - 1
    }

    /// Copies the samples at `indices` into a `k × M × n × 1` batch and the
    /// matching `k × n` direct targets.
    pub fn batch(&self, indices: &[usize]) -> (DenseArray, DenseArray) {
        let n = self.n_roads();
        let m = self.input_len;
        let mut x = DenseArray::zeros(&[indices.len(), m, n, 1]);
        let mut y = DenseArray::zeros(&[indices.len(), n]);
        for (k, &b) in indices.iter().enumerate() {
            x.outer_mut(k).copy_from_slice(self.inputs.outer(b));
            y.outer_mut(k).copy_from_slice(self.targets_direct.outer(b));
        }
        (x, y)
    }
}

/// Slides a window of `input_len` inputs and `horizon` targets over `s`.
///
/// Sample `b` reads input rows `[b, b+M)`, its direct target is row
/// `b+M+H-1` and its sequence targets are rows `[b+M, b+M+H)`.
pub fn make_windows(s: &SpeedMatrix, input_len: usize, horizon: usize) -> Result<WindowSet> {
    if input_len == 0 || horizon == 0 {
        return Err(Error::Config(
            "input length and horizon must be at least 1".into(),
        ));
    }
    let t = s.n_steps();
    if t < input_len + horizon {
        return Err(Error::Data(format!(
            "segment of {t} steps cannot hold a window of {input_len} inputs and horizon {horizon}"
        )));
    }
    let n = s.n_roads;
    let count = t - input_len - horizon + 1;
    let mut inputs = Vec::with_capacity(count * input_len * n);
    let mut direct = Vec::with_capacity(count * n);
    let mut seq = Vec::with_capacity(count * horizon * n);
    for b in 0..count {
        inputs.extend_from_slice(&s.values[b * n..(b + input_len) * n]);
        direct.extend_from_slice(s.row(b + input_len + horizon - 1));
        seq.extend_from_slice(&s.values[(b + input_len) * n..(b + input_len + horizon) * n]);
    }
    Ok(WindowSet {
        inputs: DenseArray::from_vec(&[count, input_len, n], inputs)?,
        targets_direct: DenseArray::from_vec(&[count, n], direct)?,
        targets_seq: DenseArray::from_vec(&[count, horizon, n], seq)?,
        input_len,
        horizon,
        steps_per_day: s.steps_per_day,
        offset: s.offset,
    })
}

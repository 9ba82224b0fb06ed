//! Dynamic time warping between road series and the all-pairs distance matrix.
//!
//! Point cost is the absolute difference `|x_i - y_j|`; the accumulated cost is
//! `C(i,j) = |x_i - y_j| + min(C(i-1,j-1), C(i-1,j), C(i,j-1))` with
//! out-of-range (and out-of-band) cells treated as `+inf`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::array::DenseArray;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::series::SpeedMatrix;

/// Point-distance and accumulated-cost matrices, both `n_x × n_y` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub point_dist: Vec<f64>,
    pub accumulated: Vec<f64>,
}

impl CostMatrix {
    pub fn point(&self, i: usize, j: usize) -> f64 {
        self.point_dist[i * self.cols + j]
    }

    pub fn acc(&self, i: usize, j: usize) -> f64 {
        self.accumulated[i * self.cols + j]
    }
}

/// Ordered matchups `(i, j)`, zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpingPath {
    pub steps: Vec<(usize, usize)>,
}

impl WarpingPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Steps in the one-based convention, `(1,1) .. (n_x,n_y)`.
    pub fn one_based(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps.iter().map(|&(i, j)| (i + 1, j + 1))
    }

    /// Checks endpoints, unit monotone steps and the `max(n,m) ≤ K ≤ n+m` length bound.
    pub fn is_valid_for(&self, nx: usize, ny: usize) -> bool {
        let (Some(&first), Some(&last)) = (self.steps.first(), self.steps.last()) else {
            return false;
        };
        if first != (0, 0) || last != (nx - 1, ny - 1) {
            return false;
        }
        let monotone = self.steps.windows(2).all(|w| {
            let ((i, j), (a, b)) = (w[0], w[1]);
            a >= i && a <= i + 1 && b >= j && b <= j + 1 && (a, b) != (i, j)
        });
        let k = self.steps.len();
        monotone && k >= nx.max(ny) && k <= nx + ny
    }
}

fn check_inputs(x: &[f64], y: &[f64], band: Option<usize>) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Data("DTW needs two non-empty series".into()));
    }
    if let Some(w) = band {
        let gap = x.len().abs_diff(y.len());
        if w < gap {
            return Err(Error::Config(format!(
                "band {w} is narrower than the length difference {gap}; no warping path fits"
            )));
        }
    }
    Ok(())
}

#[inline]
fn in_band(i: usize, j: usize, band: Option<usize>) -> bool {
    band.is_none_or(|w| i.abs_diff(j) <= w)
}

/// Fills the full cost matrix.
pub fn cost_matrix(x: &[f64], y: &[f64], band: Option<usize>) -> Result<CostMatrix> {
    check_inputs(x, y, band)?;
    let (nx, ny) = (x.len(), y.len());
    let mut point = vec![0.0; nx * ny];
    let mut acc = vec![f64::INFINITY; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            point[i * ny + j] = (x[i] - y[j]).abs();
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            if !in_band(i, j, band) {
                continue;
            }
            let d = point[i * ny + j];
            acc[i * ny + j] = if i == 0 && j == 0 {
                d
            } else {
                let diag = if i > 0 && j > 0 { acc[(i - 1) * ny + j - 1] } else { f64::INFINITY };
                let up = if i > 0 { acc[(i - 1) * ny + j] } else { f64::INFINITY };
                let left = if j > 0 { acc[i * ny + j - 1] } else { f64::INFINITY };
                d + diag.min(up).min(left)
            };
        }
    }
    Ok(CostMatrix {
        rows: nx,
        cols: ny,
        point_dist: point,
        accumulated: acc,
    })
}

/// DTW distance and the optimal warping path.
///
/// Backtracking prefers the diagonal predecessor, then `(i-1, j)`, then
/// `(i, j-1)` when costs tie.
pub fn dtw_distance(x: &[f64], y: &[f64], band: Option<usize>) -> Result<(f64, WarpingPath)> {
    let cm = cost_matrix(x, y, band)?;
    let (mut i, mut j) = (cm.rows - 1, cm.cols - 1);
    let mut steps = vec![(i, j)];
    while (i, j) != (0, 0) {
        let diag = if i > 0 && j > 0 { cm.acc(i - 1, j - 1) } else { f64::INFINITY };
        let up = if i > 0 { cm.acc(i - 1, j) } else { f64::INFINITY };
        let left = if j > 0 { cm.acc(i, j - 1) } else { f64::INFINITY };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        steps.push((i, j));
    }
    steps.reverse();
    Ok((cm.acc(cm.rows - 1, cm.cols - 1), WarpingPath { steps }))
}

/// DTW distance only, using two rolling rows.
///
/// Performs the same floating-point operations in the same order as
/// [`cost_matrix`], so the result is bit-identical to [`dtw_distance`].
pub fn dtw_cost(x: &[f64], y: &[f64], band: Option<usize>) -> Result<f64> {
    check_inputs(x, y, band)?;
    let ny = y.len();
    let mut prev = vec![f64::INFINITY; ny];
    let mut cur = vec![f64::INFINITY; ny];
    for (i, &xi) in x.iter().enumerate() {
        let (lo, hi) = match band {
            Some(w) => (i.saturating_sub(w), (i + w + 1).min(ny)),
            None => (0, ny),
        };
        cur.iter_mut().for_each(|c| *c = f64::INFINITY);
        for j in lo..hi {
            let d = (xi - y[j]).abs();
            cur[j] = if i == 0 && j == 0 {
                d
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                d + diag.min(up).min(left)
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[ny - 1])
}

/// Symmetric `n × n` matrix of pairwise DTW distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, non-negativity and the zero diagonal.
    pub fn from_vec(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Data(format!(
                "{} values cannot form a {n}×{n} distance matrix",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Data(format!("distance diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0) {
                    return Err(Error::Data(format!("distance ({i}, {j}) = {v} is negative or NaN")));
                }
                if v != values[j * n + i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Element-wise mean over all complete days, one row per road (`n × steps_per_day`).
///
/// Days are aligned to the absolute clock of the matrix, so a leading or
/// trailing partial day is dropped (with a warning).
pub fn mean_daily_profile(s: &SpeedMatrix) -> Result<DenseArray> {
    let spd = s.steps_per_day();
    let n = s.n_roads();
    let t = s.n_steps();
    let start = (spd - s.offset() % spd) % spd;
    let days = t.saturating_sub(start) / spd;
    if days == 0 {
        return Err(Error::Data(format!(
            "need at least one complete day of {spd} steps, have {t} steps"
        )));
    }
    let used = days * spd;
    if used != t {
        log::warn!("mean daily profile: dropping {} rows of partial days", t - used);
    }
    let mut profile = DenseArray::zeros(&[n, spd]);
    for d in 0..days {
        for slot in 0..spd {
            let row = s.row(start + d * spd + slot);
            for (r, &v) in row.iter().enumerate() {
                profile.data_mut()[r * spd + slot] += v;
            }
        }
    }
    profile.scale(1.0 / days as f64);
    Ok(profile)
}

/// DTW distance between every pair of rows of `profiles` (`n × L`).
///
/// Each unordered pair is computed once and written to both `(i,j)` and
/// `(j,i)`; pairs are reduced in a fixed order so the result does not depend
/// on the executor.
pub fn all_pairs_dtw<E: Executor>(
    profiles: &DenseArray,
    band: Option<usize>,
    exec: &E,
) -> Result<DistanceMatrix> {
    if profiles.ndim() != 2 {
        return Err(Error::Data("profiles must be an n × L matrix".into()));
    }
    let n = profiles.dim(0);
    if n < 2 {
        return Err(Error::Data(format!("need at least two roads, have {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut values = vec![0.0; n * n];
    let mut first_err = None;
    exec.map_reduce(
        pairs.len(),
        |p| {
            let (i, j) = pairs[p];
            dtw_cost(profiles.outer(i), profiles.outer(j), band)
        },
        |p, res| match res {
            Ok(d) => {
                let (i, j) = pairs[p];
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        },
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(DistanceMatrix { n, values })
}

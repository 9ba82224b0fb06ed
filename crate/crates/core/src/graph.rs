//! Road graphs, the scaled normalized Laplacian and polynomial graph filters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::array::DenseArray;
use crate::dtw::DistanceMatrix;
use crate::error::{Error, Result};
use crate::math;

/// Compressed sparse row matrix, square.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicates are summed, columns sorted per row.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                match indices.last() {
                    Some(&last) if last == j && values.len() > *indptr.last().unwrap() => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        indices.push(j);
                        values.push(v);
                    }
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if self.get(j, i) != v {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// `out = self · x` for `x` laid out as `n × cols`.
    pub fn matmul_into(&self, x: &[f64], cols: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n * cols);
        debug_assert_eq!(out.len(), self.n * cols);
        for i in 0..self.n {
            let dst = &mut out[i * cols..(i + 1) * cols];
            dst.iter_mut().for_each(|d| *d = 0.0);
            for (j, w) in self.row(i) {
                for (d, s) in dst.iter_mut().zip(&x[j * cols..(j + 1) * cols]) {
                    *d += w * s;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Temporal,
    Spatial,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Temporal => "temporal",
            GraphKind::Spatial => "spatial",
        })
    }
}

impl core::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(GraphKind::Temporal),
            "spatial" => Ok(GraphKind::Spatial),
            other => Err(Error::Config(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Symmetric, zero-diagonal road graph with weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    weights: CsrMatrix,
    kind: GraphKind,
}

impl Adjacency {
    /// Builds from undirected edges `(i, j, w)`; both directions are stored.
    pub fn from_edges(n: usize, kind: GraphKind, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut triplets = Vec::with_capacity(edges.len() * 2);
        let mut seen = alloc::collections::BTreeSet::new();
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Data(format!("edge ({i}, {j}) outside a graph of {n} nodes")));
            }
            if i == j {
                return Err(Error::Data(format!("self loop on node {i}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Data(format!("edge ({i}, {j}) weight {w} outside [0, 1]")));
            }
            if kind == GraphKind::Temporal && w != 0.0 && w != 1.0 {
                return Err(Error::Data(format!(
                    "temporal edge ({i}, {j}) must have weight 0 or 1, got {w}"
                )));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::Data(format!("duplicate edge ({}, {})", key.0, key.1)));
            }
            if w != 0.0 {
                triplets.push((i, j, w));
                triplets.push((j, i, w));
            }
        }
        Ok(Self {
            weights: CsrMatrix::from_triplets(n, &triplets),
            kind,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    /// Undirected edges with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n())
            .flat_map(|i| {
                self.weights
                    .row(i)
                    .filter(move |&(j, _)| j > i)
                    .map(move |(j, w)| (i, j, w))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.nnz() / 2
    }

    /// Fraction of off-diagonal entries that are non-zero.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.weights.nnz() as f64 / (n * (n - 1)) as f64
    }
}

/// Neighbours per road for a given sparsity: `max(1, round(sparsity·(n−1)))`.
pub fn neighbors_per_road(n: usize, sparsity: f64) -> usize {
    let k = libm::round(sparsity * (n as f64 - 1.0)) as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// The `k` most similar roads of every road, before symmetrization.
///
/// Candidates are ordered by distance, then by road index.
pub fn nearest_roads(d: &DistanceMatrix, sparsity: f64) -> Result<Vec<Vec<usize>>> {
    let n = d.n();
    if n < 2 {
        return Err(Error::Data(format!("need at least two roads, have {n}")));
    }
    if !(sparsity > 0.0 && sparsity < 1.0) {
        return Err(Error::Config(format!("sparsity {sparsity} must lie in (0, 1)")));
    }
    let k = neighbors_per_road(n, sparsity);
    let mut tied_rows = 0usize;
    let picks = (0..n)
        .map(|i| {
            let row = d.row(i);
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            if k < order.len() && row[order[k - 1]] == row[order[k]] {
                tied_rows += 1;
            }
            order.truncate(k);
            order
        })
        .collect();
    if tied_rows > 0 {
        log::warn!(
            "{tied_rows} roads have tied distances at the top-{k} cut; ties broken by road index"
        );
    }
    Ok(picks)
}

/// Binary temporal graph: every road links to its `k` nearest roads by DTW
/// distance and the result is symmetrized.
pub fn temporal_adjacency(d: &DistanceMatrix, sparsity: f64) -> Result<Adjacency> {
    let n = d.n();
    let picks = nearest_roads(d, sparsity)?;
    let mut edges = alloc::collections::BTreeSet::new();
    for (i, row) in picks.iter().enumerate() {
        for &j in row {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let edges: Vec<_> = edges.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    Adjacency::from_edges(n, GraphKind::Temporal, &edges)
}

/// Thresholded Gaussian kernel over physical road distances (`n × n`).
///
/// `W_ij = exp(-d_ij² / sigma2)` when that is at least `epsilon`, else 0.
pub fn spatial_adjacency(dist: &DenseArray, sigma2: f64, epsilon: f64) -> Result<Adjacency> {
    if dist.ndim() != 2 || dist.dim(0) != dist.dim(1) {
        return Err(Error::Data(format!(
            "road distance matrix must be square, got shape {:?}",
            dist.shape()
        )));
    }
    if !(sigma2 > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Config(format!(
            "sigma2 must be positive and epsilon non-negative (got {sigma2}, {epsilon})"
        )));
    }
    let n = dist.dim(0);
    let d = dist.data();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = d[i * n + j];
            if !(v >= 0.0) {
                return Err(Error::Data(format!("road distance ({i}, {j}) = {v} is invalid")));
            }
            if v != d[j * n + i] {
                return Err(Error::Asymmetric { row: i, col: j });
            }
            if j > i {
                let w = math::exp(-v * v / sigma2);
                if w >= epsilon && w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
    }
    Adjacency::from_edges(n, GraphKind::Spatial, &edges)
}

pub const POWER_TOLERANCE: f64 = 1e-6;
pub const POWER_MAX_ITERS: usize = 1000;

/// `L̃ = 2L/λ_max − I` with `L = I − D^{-1/2} W D^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLaplacian {
    matrix: CsrMatrix,
    lambda_max: f64,
    converged: bool,
}

impl ScaledLaplacian {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// False when power iteration hit its cap and `λ_max = 2` was assumed.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Empty graph on `n` nodes: `L̃ = I`.
    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self {
            matrix: CsrMatrix::from_triplets(n, &triplets),
            lambda_max: 1.0,
            converged: true,
        }
    }
}

/// Normalized Laplacian `I − D^{-1/2} W D^{-1/2}`; isolated nodes use `D_ii = 1`.
pub fn normalized_laplacian(w: &Adjacency) -> Result<CsrMatrix> {
    if let Some((row, col)) = w.weights.is_symmetric() {
        return Err(Error::Asymmetric { row, col });
    }
    let n = w.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = w.weights.row(i).map(|(_, v)| v).sum();
            if deg > 0.0 {
                1.0 / math::sqrt(deg)
            } else {
                1.0
            }
        })
        .collect();
    let mut triplets = Vec::with_capacity(w.weights.nnz() + n);
    for i in 0..n {
        triplets.push((i, i, 1.0));
        for (j, v) in w.weights.row(i) {
            triplets.push((i, j, -inv_sqrt[i] * v * inv_sqrt[j]));
        }
    }
    Ok(CsrMatrix::from_triplets(n, &triplets))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Stops once the eigen-residual `‖Av − λv‖` drops below `tol·λ`. Returns
/// `None` if that does not happen within `max_iters`.
pub fn power_iteration(a: &CsrMatrix, tol: f64, max_iters: usize) -> Option<f64> {
    let n = a.n();
    // Fixed, non-degenerate start vector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * libm::sin(1.0 + 2.3 * i as f64))
        .collect();
    let norm = |x: &[f64]| math::sqrt(x.iter().map(|e| e * e).sum());
    let nv = norm(&v);
    v.iter_mut().for_each(|e| *e /= nv);
    let mut av = vec![0.0; n];
    for _ in 0..max_iters {
        a.matmul_into(&v, 1, &mut av);
        let lambda: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        let resid = math::sqrt(
            v.iter()
                .zip(&av)
                .map(|(x, y)| (y - lambda * x) * (y - lambda * x))
                .sum(),
        );
        if lambda > 0.0 && resid <= tol * lambda {
            return Some(lambda);
        }
        let na = norm(&av);
        if na == 0.0 {
            return None;
        }
        for (x, y) in v.iter_mut().zip(&av) {
            *x = y / na;
        }
    }
    None
}

pub fn scaled_laplacian(w: &Adjacency) -> Result<ScaledLaplacian> {
    let l = normalized_laplacian(w)?;
    let (lambda_max, converged) = match power_iteration(&l, POWER_TOLERANCE, POWER_MAX_ITERS) {
        Some(l) => (l.min(2.0), true),
        None => {
            log::warn!(
                "power iteration did not converge in {POWER_MAX_ITERS} iterations; using lambda_max = 2"
            );
            (2.0, false)
        }
    };
    let n = l.n();
    let mut triplets = Vec::with_capacity(l.nnz());
    for i in 0..n {
        for (j, v) in l.row(i) {
            let scaled = 2.0 * v / lambda_max - if i == j { 1.0 } else { 0.0 };
            triplets.push((i, j, scaled));
        }
    }
    Ok(ScaledLaplacian {
        matrix: CsrMatrix::from_triplets(n, &triplets),
        lambda_max,
        converged,
    })
}

/// Polynomial family used for graph filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    /// `T_0 = I, T_1 = L̃, T_k = 2L̃T_{k-1} − T_{k-2}`
    #[default]
    Chebyshev,
    /// Plain powers `L̃^k`.
    Power,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Chebyshev => "chebyshev",
            Basis::Power => "power",
        })
    }
}

impl core::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" => Ok(Basis::Chebyshev),
            "power" => Ok(Basis::Power),
            other => Err(Error::Config(format!("unknown filter basis `{other}`"))),
        }
    }
}

/// Writes `P_k(L̃) X` for `k < order` into `out` (`order × n × cols`).
pub(crate) fn filter_stack_into(
    lt: &CsrMatrix,
    x: &[f64],
    cols: usize,
    order: usize,
    basis: Basis,
    out: &mut [f64],
) {
    let block = lt.n() * cols;
    debug_assert_eq!(out.len(), order * block);
    out[..block].copy_from_slice(x);
    for k in 1..order {
        let (done, rest) = out.split_at_mut(k * block);
        let cur = &mut rest[..block];
        lt.matmul_into(&done[(k - 1) * block..], cols, cur);
        if basis == Basis::Chebyshev && k >= 2 {
            let prev2 = &done[(k - 2) * block..(k - 1) * block];
            for (c, p) in cur.iter_mut().zip(prev2) {
                *c = 2.0 * *c - p;
            }
        }
    }
}

/// `Σ_k P_k(L̃) Y_k` for a stack `Y` (`order × n × cols`), i.e. the adjoint of
/// [`filter_stack_into`] since `L̃` is symmetric.
pub(crate) fn filter_stack_adjoint(
    lt: &CsrMatrix,
    y: &[f64],
    cols: usize,
    order: usize,
    basis: Basis,
    out: &mut [f64],
) {
    let block = lt.n() * cols;
    let mut tmp = vec![0.0; block];
    match basis {
        Basis::Power => {
            // Horner: r = Y_{K-1}; r = Y_k + L̃ r
            out.copy_from_slice(&y[(order - 1) * block..order * block]);
            for k in (0..order - 1).rev() {
                lt.matmul_into(out, cols, &mut tmp);
                for ((o, t), yk) in out.iter_mut().zip(&tmp).zip(&y[k * block..(k + 1) * block]) {
                    *o = yk + t;
                }
            }
        }
        Basis::Chebyshev => {
            // Clenshaw: b_k = Y_k + 2L̃ b_{k+1} − b_{k+2}; result = Y_0 + L̃ b_1 − b_2
            let mut b1 = vec![0.0; block];
            let mut b2 = vec![0.0; block];
            for k in (1..order).rev() {
                lt.matmul_into(&b1, cols, &mut tmp);
                for i in 0..block {
                    let bk = y[k * block + i] + 2.0 * tmp[i] - b2[i];
                    b2[i] = b1[i];
                    b1[i] = bk;
                }
            }
            lt.matmul_into(&b1, cols, &mut tmp);
            for i in 0..block {
                out[i] = y[i] + tmp[i] - b2[i];
            }
        }
    }
}

/// Stack `[T_0(L̃)X, …, T_{K−1}(L̃)X]` for `X` of shape `n × C`.
pub fn cheb_apply(lt: &ScaledLaplacian, x: &DenseArray, order: usize) -> Result<DenseArray> {
    filter_stack(lt, x, order, Basis::Chebyshev)
}

/// Like [`cheb_apply`] for any [`Basis`].
pub fn filter_stack(
    lt: &ScaledLaplacian,
    x: &DenseArray,
    order: usize,
    basis: Basis,
) -> Result<DenseArray> {
    if order == 0 {
        return Err(Error::Config("filter order K must be at least 1".into()));
    }
    if x.ndim() != 2 {
        return Err(Error::Data("graph signal must be an n × C array".into()));
    }
    crate::error::shape_check("graph signal", "node", lt.n(), x.dim(0))?;
    let cols = x.dim(1);
    let mut out = DenseArray::zeros(&[order, lt.n(), cols]);
    filter_stack_into(lt.matrix(), x.data(), cols, order, basis, out.data_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_laplacian, symmetric_eigen};

    fn two_node() -> Adjacency {
        Adjacency::from_edges(2, GraphKind::Temporal, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn temporal_graph_small_example() {
        let d = DistanceMatrix::from_vec(
            3,
            vec![0.0, 1.0, 9.0, 1.0, 0.0, 9.0, 9.0, 9.0, 0.0],
        )
        .unwrap();
        // 0.25 · 2 = 0.5 rounds to 1 neighbour.
        let picks = nearest_roads(&d, 0.25).unwrap();
        assert_eq!(picks, vec![vec![1], vec![0], vec![0]]);
        let w = temporal_adjacency(&d, 0.25).unwrap();
        assert_eq!(w.edges(), vec![(0, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(w.weight(2, 0), 1.0);
        assert_eq!(w.weight(1, 2), 0.0);
    }

    #[test]
    fn ties_follow_road_index() {
        let n = 6;
        let mut v = vec![1.0; n * n];
        for i in 0..n {
            v[i * n + i] = 0.0;
        }
        let d = DistanceMatrix::from_vec(n, v).unwrap();
        let picks = nearest_roads(&d, 0.4).unwrap();
        assert_eq!(picks[0], vec![1, 2]);
        assert_eq!(picks[3], vec![0, 1]);
        assert_eq!(picks[5], vec![0, 1]);
    }

    #[test]
    fn neighbour_count_rule() {
        assert_eq!(neighbors_per_road(228, 0.05), 11);
        assert_eq!(neighbors_per_road(30, 0.05), 1);
        assert_eq!(neighbors_per_road(3, 0.01), 1);
        assert_eq!(neighbors_per_road(1026, 0.05), 51);
    }

    #[test]
    fn gaussian_kernel_edges() {
        let zero = DenseArray::zeros(&[2, 2]);
        assert_eq!(spatial_adjacency(&zero, 1.0, 0.0).unwrap().weight(0, 1), 1.0);

        let far = DenseArray::from_vec(&[2, 2], vec![0.0, 1e200, 1e200, 0.0]).unwrap();
        assert_eq!(spatial_adjacency(&far, 1.0, 0.0).unwrap().edge_count(), 0);

        // exp(-d²/σ²) = 0.4  ⇔  d² = -ln 0.4
        let d = libm::sqrt(-libm::log(0.4));
        let m = DenseArray::from_vec(&[2, 2], vec![0.0, d, d, 0.0]).unwrap();
        let w = spatial_adjacency(&m, 1.0, 0.5).unwrap();
        assert_eq!(w.edge_count(), 0);
        let w = spatial_adjacency(&m, 1.0, 0.3).unwrap();
        assert!((w.weight(0, 1) - 0.4).abs() < 1e-12);

        let skew = DenseArray::from_vec(&[2, 2], vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        assert!(matches!(
            spatial_adjacency(&skew, 1.0, 0.0),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn two_node_laplacian() {
        let lt = scaled_laplacian(&two_node()).unwrap();
        assert!((lt.lambda_max() - 2.0).abs() < 1e-9);
        let dense = lt.matrix().to_dense();
        let expect = [0.0, -1.0, -1.0, 0.0];
        for (a, b) in dense.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{dense:?}");
        }
        let ev = symmetric_eigen(&dense_laplacian(&two_node()), 2).unwrap().0;
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_uses_isolated_node_rule() {
        let w = Adjacency::from_edges(3, GraphKind::Temporal, &[]).unwrap();
        let lt = scaled_laplacian(&w).unwrap();
        assert!((lt.lambda_max() - 1.0).abs() < 1e-12);
        let eye = ScaledLaplacian::identity(3).matrix().to_dense();
        for (a, b) in lt.matrix().to_dense().iter().zip(&eye) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cheb_small_examples() {
        let lt = scaled_laplacian(&two_node()).unwrap();
        let x = DenseArray::from_vec(&[2, 1], vec![1.0, 0.0]).unwrap();
        let s = cheb_apply(&lt, &x, 1).unwrap();
        assert_eq!(s.data(), x.data());
        let s = cheb_apply(&lt, &x, 2).unwrap();
        assert_eq!(&s.data()[..2], &[1.0, 0.0]);
        assert!((s.data()[2] - 0.0).abs() < 1e-9 && (s.data()[3] + 1.0).abs() < 1e-9);
        assert!(cheb_apply(&lt, &x, 0).is_err());
        let bad = DenseArray::zeros(&[3, 1]);
        assert!(matches!(cheb_apply(&lt, &bad, 2), Err(Error::Shape { .. })));
    }

    #[test]
    fn adjoint_matches_transpose() {
        // <P(L)x, y> = <x, P(L)^T y> for both bases.
        let w = Adjacency::from_edges(
            4,
            GraphKind::Spatial,
            &[(0, 1, 0.5), (1, 2, 1.0), (2, 3, 0.25), (0, 3, 0.75)],
        )
        .unwrap();
        let lt = scaled_laplacian(&w).unwrap();
        let x: Vec<f64> = (0..8).map(|i| libm::sin(i as f64)).collect();
        let y: Vec<f64> = (0..24).map(|i| libm::cos(0.7 * i as f64)).collect();
        for basis in [Basis::Chebyshev, Basis::Power] {
            let mut px = vec![0.0; 24];
            filter_stack_into(lt.matrix(), &x, 2, 3, basis, &mut px);
            let mut aty = vec![0.0; 8];
            filter_stack_adjoint(lt.matrix(), &y, 2, 3, basis, &mut aty);
            let lhs: f64 = px.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12, "{basis}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Adjacency::from_edges(2, GraphKind::Temporal, &[(0, 0, 1.0)]).is_err());
        assert!(Adjacency::from_edges(2, GraphKind::Temporal, &[(0, 1, 0.5)]).is_err());
        assert!(Adjacency::from_edges(2, GraphKind::Spatial, &[(0, 1, 1.5)]).is_err());
        assert!(Adjacency::from_edges(2, GraphKind::Spatial, &[(0, 2, 0.5)]).is_err());
        assert!(
            Adjacency::from_edges(2, GraphKind::Spatial, &[(0, 1, 0.5), (1, 0, 0.5)]).is_err()
        );
    }
}

//! Real CSR matrices, adjacency normalizations and sparse-dense products.

use ndarray::Array2;
use rayon::prelude::*;

use super::DirectedGraph;
use crate::error::{Error, Result};
use crate::Matrix;

/// Rows below this count are multiplied serially.
const PAR_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; each list must be sorted by
    /// column.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in &rows {
            for &(c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols,
            offsets,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                rows[j].push((i, x));
            }
        }
        Self::from_rows(self.n_rows, rows)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut d = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d[[i, j]] += x;
            }
        }
        d
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    /// Product with a dense matrix. Each output row accumulates its terms in
    /// column order, so the result does not depend on how rows are split
    /// across threads.
    pub fn mul_dense(&self, dense: &Matrix) -> Result<Matrix> {
        if dense.nrows() != self.n_cols {
            return Err(Error::Shape(format!(
                "sparse {}x{} times dense {}x{}",
                self.n_rows,
                self.n_cols,
                dense.nrows(),
                dense.ncols()
            )));
        }
        let k = dense.ncols();
        let dense = dense.as_standard_layout();
        let src = dense.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.n_rows * k];
        let row_kernel = |i: usize, dst: &mut [f64]| {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                let s = &src[j * k..(j + 1) * k];
                for (d, &x) in dst.iter_mut().zip(s) {
                    *d += a * x;
                }
            }
        };
        if self.n_rows >= PAR_ROWS && k > 0 {
            out.par_chunks_mut(k)
                .enumerate()
                .for_each(|(i, dst)| row_kernel(i, dst));
        } else if k > 0 {
            out.chunks_mut(k)
                .enumerate()
                .for_each(|(i, dst)| row_kernel(i, dst));
        }
        Ok(Array2::from_shape_vec((self.n_rows, k), out).expect("sized above"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// `D^-1/2 (A + I) D^-1/2`.
    SymmetricGcn,
    /// Rows sum to one; empty rows receive a self-loop first.
    RowStochastic,
    /// `2 L / lambda_max - I` with `L` the symmetric normalized Laplacian.
    ScaledLaplacian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub matrix: CsrMatrix,
    pub kind: NormKind,
    /// Largest Laplacian eigenvalue, for the scaled-Laplacian kind.
    pub lambda_max: Option<f64>,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.matrix.n_rows
    }
}

pub fn normalize(g: &DirectedGraph, kind: NormKind) -> NormalizedAdjacency {
    match kind {
        NormKind::SymmetricGcn => symmetric_gcn(g),
        NormKind::RowStochastic => row_stochastic(g),
        NormKind::ScaledLaplacian => scaled_laplacian(g),
    }
}

/// `adj * dense`.
pub fn spmm(adj: &NormalizedAdjacency, dense: &Matrix) -> Result<Matrix> {
    adj.matrix.mul_dense(dense)
}

fn symmetric_gcn(g: &DirectedGraph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|u| {
            let mut row: Vec<(usize, f64)> = g
                .out_neighbors(u)
                .iter()
                .copied()
                .zip(g.out_weights(u).iter().copied())
                .collect();
            match row.binary_search_by_key(&u, |e| e.0) {
                Ok(k) => row[k].1 += 1.0,
                Err(k) => row.insert(k, (u, 1.0)),
            }
            row
        })
        .collect();
    let deg: Vec<f64> = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.into_iter()
                .map(|(j, w)| (j, w * inv_sqrt[i] * inv_sqrt[j]))
                .collect()
        })
        .collect();
    NormalizedAdjacency {
        matrix: CsrMatrix::from_rows(n, rows),
        kind: NormKind::SymmetricGcn,
        lambda_max: None,
    }
}

fn row_stochastic(g: &DirectedGraph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let rows = (0..n)
        .map(|u| {
            let total: f64 = g.out_weights(u).iter().sum();
            if total > 0.0 {
                g.out_neighbors(u)
                    .iter()
                    .zip(g.out_weights(u))
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(&v, &w)| (v, w / total))
                    .collect()
            } else {
                vec![(u, 1.0)]
            }
        })
        .collect();
    NormalizedAdjacency {
        matrix: CsrMatrix::from_rows(n, rows),
        kind: NormKind::RowStochastic,
        lambda_max: None,
    }
}

/// Symmetric normalized Laplacian `I - D^-1/2 A D^-1/2` over the graph
/// without self-loops. Isolated nodes get an all-zero row.
pub(crate) fn normalized_laplacian(g: &DirectedGraph) -> CsrMatrix {
    let n = g.num_nodes();
    let deg: Vec<f64> = (0..n)
        .map(|u| {
            g.out_neighbors(u)
                .iter()
                .zip(g.out_weights(u))
                .filter(|(&v, _)| v != u)
                .map(|(_, &w)| w)
                .sum()
        })
        .collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let rows = (0..n)
        .map(|u| {
            let mut row = Vec::new();
            let mut placed_diag = deg[u] == 0.0;
            for (&v, &w) in g.out_neighbors(u).iter().zip(g.out_weights(u)) {
                if v == u {
                    continue;
                }
                if !placed_diag && v > u {
                    row.push((u, 1.0));
                    placed_diag = true;
                }
                row.push((v, -w * inv_sqrt[u] * inv_sqrt[v]));
            }
            if !placed_diag {
                row.push((u, 1.0));
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(n, rows)
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration from a fixed start vector. Stops when the Rayleigh quotient moves
/// by less than `tol` relative, or after `max_iter` steps.
pub fn power_iteration(m: &CsrMatrix, tol: f64, max_iter: usize) -> f64 {
    let n = m.n_rows;
    if n == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|a| *a /= nx);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = m.matvec(&x);
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        x = y.into_iter().map(|a| a / ny).collect();
        let done = (rq - lambda).abs() <= tol * rq.abs().max(1e-300);
        lambda = rq;
        if done {
            break;
        }
    }
    lambda
}

fn scaled_laplacian(g: &DirectedGraph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let lap = normalized_laplacian(g);
    let lambda = power_iteration(&lap, 1e-12, 5000);
    let rows = (0..n)
        .map(|i| {
            let (c, v) = lap.row(i);
            let mut row: Vec<(usize, f64)> = if lambda > 1e-12 {
                c.iter().zip(v).map(|(&j, &x)| (j, 2.0 * x / lambda)).collect()
            } else {
                Vec::new()
            };
            match row.binary_search_by_key(&i, |e| e.0) {
                Ok(k) => row[k].1 -= 1.0,
                Err(k) => row.insert(k, (i, -1.0)),
            }
            row
        })
        .collect();
    NormalizedAdjacency {
        matrix: CsrMatrix::from_rows(n, rows),
        kind: NormKind::ScaledLaplacian,
        lambda_max: Some(lambda),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Dense reference for `D^-1/2 (A + I) D^-1/2`.
    fn dense_gcn(a: &Matrix) -> Matrix {
        let n = a.nrows();
        let mut at = a.clone();
        for i in 0..n {
            at[[i, i]] += 1.0;
        }
        let d: Vec<f64> = (0..n).map(|i| at.row(i).sum()).collect();
        Array2::from_shape_fn((n, n), |(i, j)| at[[i, j]] / (d[i] * d[j]).sqrt())
    }

    fn dense_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Array2::zeros((a.nrows(), b.ncols()));
        for i in 0..a.nrows() {
            for j in 0..b.ncols() {
                let mut s = 0.0;
                for k in 0..a.ncols() {
                    s += a[[i, k]] * b[[k, j]];
                }
                out[[i, j]] = s;
            }
        }
        out
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> DirectedGraph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.random::<f64>() < p {
                    e.push((u, v, rng.random_range(0.5..2.0)));
                }
            }
        }
        DirectedGraph::from_edges(n, &e).unwrap()
    }

    fn max_rel(a: &Matrix, b: &Matrix) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12))
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_edge_gcn_is_all_half() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap().symmetrize();
        let m = normalize(&g, NormKind::SymmetricGcn).matrix.to_dense();
        for x in m.iter() {
            assert!((x - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn edgeless_gcn_is_identity() {
        let g = DirectedGraph::from_edges(3, &[]).unwrap();
        let m = normalize(&g, NormKind::SymmetricGcn).matrix.to_dense();
        assert_eq!(m, Array2::<f64>::eye(3));
    }

    #[test]
    fn fan_out_row_stochastic_is_half_half() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let m = normalize(&g, NormKind::RowStochastic).matrix.to_dense();
        assert_eq!(m.row(0).to_vec(), vec![0.0, 0.5, 0.5]);
        // sinks get self-loops
        assert_eq!(m[[1, 1]], 1.0);
        assert_eq!(m[[2, 2]], 1.0);
    }

    #[test]
    fn identity_spmm_returns_input() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let adj = NormalizedAdjacency {
            matrix: CsrMatrix::identity(3),
            kind: NormKind::SymmetricGcn,
            lambda_max: None,
        };
        assert_eq!(spmm(&adj, &x).unwrap(), x);
    }

    #[test]
    fn half_matrix_spmm() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap().symmetrize();
        let adj = normalize(&g, NormKind::SymmetricGcn);
        let out = spmm(&adj, &Array2::eye(2)).unwrap();
        assert!(out.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn spmm_shape_mismatch() {
        let adj = normalize(&DirectedGraph::from_edges(3, &[]).unwrap(), NormKind::RowStochastic);
        assert!(matches!(spmm(&adj, &Array2::zeros((2, 2))), Err(Error::Shape(_))));
    }

    #[test]
    fn random_spmm_matches_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(8, 0.3, 11);
        let adj = normalize(&g.symmetrize(), NormKind::SymmetricGcn);
        let x = Array2::from_shape_fn((8, 3), |_| rng.random_range(-1.0..1.0));
        let fast = spmm(&adj, &x).unwrap();
        let slow = dense_matmul(&adj.matrix.to_dense(), &x);
        assert!(max_rel(&fast, &slow) < 1e-10);
    }

    #[test]
    fn parallel_spmm_is_bitwise_serial() {
        let g = random_graph(3000, 0.002, 5).symmetrize();
        let adj = normalize(&g, NormKind::SymmetricGcn);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((3000, 4), |_| rng.random_range(-1.0..1.0));
        let par = adj.matrix.mul_dense(&x).unwrap();
        let serial: Vec<f64> = (0..3000)
            .flat_map(|i| {
                let (c, v) = adj.matrix.row(i);
                let mut acc = vec![0.0; 4];
                for (&j, &a) in c.iter().zip(v) {
                    for k in 0..4 {
                        acc[k] += a * x[[j, k]];
                    }
                }
                acc
            })
            .collect();
        assert_eq!(par.as_slice().unwrap(), serial.as_slice());
    }

    #[test]
    fn edgeless_scaled_laplacian_is_minus_identity() {
        let g = DirectedGraph::from_edges(4, &[]).unwrap();
        let m = normalize(&g, NormKind::ScaledLaplacian).matrix.to_dense();
        assert_eq!(m, -Array2::<f64>::eye(4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gcn_matches_dense_and_is_symmetric(n in 1usize..24, p in 0.0f64..0.5, seed in any::<u64>()) {
            let g = random_graph(n, p, seed).symmetrize();
            let sparse = normalize(&g, NormKind::SymmetricGcn).matrix.to_dense();
            let dense = dense_gcn(&g_dense(&g));
            prop_assert!(max_rel(&sparse, &dense) < 1e-9);
            prop_assert!(max_rel(&sparse, &sparse.t().to_owned()) < 1e-12);
        }

        #[test]
        fn row_stochastic_rows_sum_to_one(n in 1usize..40, p in 0.0f64..0.4, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let m = normalize(&g, NormKind::RowStochastic).matrix;
            for i in 0..n {
                let s: f64 = m.row(i).1.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn scaled_laplacian_radius_at_most_one(n in 2usize..30, p in 0.05f64..0.5, seed in any::<u64>()) {
            let g = random_graph(n, p, seed).symmetrize();
            let m = normalize(&g, NormKind::ScaledLaplacian).matrix;
            // spectrum of L-hat lies in [-1, 1]; shift by +I to get a PSD matrix
            // whose top eigenvalue is 1 + lambda_max(L-hat) <= 2
            let shifted = CsrMatrix::from_rows(n, (0..n).map(|i| {
                let (c, v) = m.row(i);
                c.iter().zip(v).map(|(&j, &x)| (j, if i == j { x + 1.0 } else { x })).collect()
            }).collect());
            let top = power_iteration(&shifted, 1e-14, 20000);
            prop_assert!(top - 1.0 <= 1.0 + 1e-6);
            // smallest eigenvalue of L-hat is -1 (L has eigenvalue 0), so the
            // radius bound reduces to the top check above
        }

        #[test]
        fn spmm_matches_dense_oracle(n in 1usize..64, k in 1usize..5, p in 0.0f64..0.3, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let adj = normalize(&g, NormKind::RowStochastic);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1);
            let x = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
            let fast = spmm(&adj, &x).unwrap();
            let slow = dense_matmul(&adj.matrix.to_dense(), &x);
            prop_assert!(max_rel(&fast, &slow) < 1e-10);
        }
    }

    fn g_dense(g: &DirectedGraph) -> Matrix {
        let mut a = Array2::zeros((g.num_nodes(), g.num_nodes()));
        for (u, v, w) in g.edges() {
            a[[u, v]] = w;
        }
        a
    }
}

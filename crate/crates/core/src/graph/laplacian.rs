use ndarray::Array2;

use super::fuzzy::FuzzyGraph;
use crate::error::{Error, Result};

/// Absolute symmetry tolerance accepted by the eigensolvers.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `L = I - D^{-1/2} W D^{-1/2}` in CSR form.
///
/// Every row stores its diagonal entry (exactly 1) followed by the off-diagonal
/// entries in ascending column order.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    sqrt_degree: Vec<f64>,
}

pub fn normalized_laplacian(g: &FuzzyGraph) -> Result<LaplacianMatrix> {
    let n = g.n();
    if let Some(v) = g.degree().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IsolatedVertex { vertex: v });
    }
    let sqrt_degree: Vec<f64> = g.degree().iter().map(|d| d.sqrt()).collect();

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        // same operand order for (i, j) and (j, i) keeps L exactly symmetric
        let v = -e.w / (sqrt_degree[e.i] * sqrt_degree[e.j]);
        adj[e.i].push((e.j, v));
        adj[e.j].push((e.i, v));
    }
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(n + 2 * g.edges().len());
    let mut values = Vec::with_capacity(n + 2 * g.edges().len());
    indptr.push(0);
    for (i, row) in adj.iter_mut().enumerate() {
        row.sort_by_key(|&(j, _)| j);
        indices.push(i);
        values.push(1.0);
        for &(j, v) in row.iter() {
            indices.push(j);
            values.push(v);
        }
        indptr.push(indices.len());
    }
    Ok(LaplacianMatrix { n, indptr, indices, values, sqrt_degree })
}

impl LaplacianMatrix {
    /// Builds from a dense symmetric matrix; used for tests and small inputs.
    /// `sqrt_degree` identifies the trivial direction `D^{1/2} 1`.
    pub fn from_dense(dense: &Array2<f64>, sqrt_degree: Vec<f64>) -> Result<Self> {
        let n = dense.nrows();
        if dense.ncols() != n || sqrt_degree.len() != n {
            return Err(Error::ShapeMismatch("laplacian must be square and match degrees".into()));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            indices.push(i);
            values.push(dense[[i, i]]);
            for j in 0..n {
                if j != i && dense[[i, j]] != 0.0 {
                    indices.push(j);
                    values.push(dense[[i, j]]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { n, indptr, indices, values, sqrt_degree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `D^{1/2} 1`, the (unnormalized) null vector of a connected graph.
    pub fn sqrt_degree(&self) -> &[f64] {
        &self.sqrt_degree
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `y = L x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let r = self.indptr[i]..self.indptr[i + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.indices[r.clone()].iter().zip(&self.values[r]) {
                acc += v * x[c];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Checks `|L_ij - L_ji| <= tol` for every stored entry.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let gap = (v - self.get(j, i)).abs();
                if gap > tol || gap.is_nan() {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        Ok(())
    }

    /// `x^T L x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}

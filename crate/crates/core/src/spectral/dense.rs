use faer::{Mat, Side};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;

/// Full symmetric eigendecomposition; returns the `count` smallest pairs,
/// eigenvalues ascending and eigenvectors as columns.
pub(crate) fn smallest_eigenpairs(l: &LaplacianMatrix, count: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.n();
    let mut dense = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in l.row(i) {
            dense[(i, j)] = v;
        }
    }
    symmetric_eigen(dense.as_ref(), count)
}

pub(crate) fn symmetric_eigen(a: faer::MatRef<'_, f64>, count: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::ConvergenceFailure { converged: 0, requested: count })?;
    let vals = evd.S().column_vector();
    let vecs = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]).then(x.cmp(&y)));
    order.truncate(count);
    let values = order.iter().map(|&c| vals[c]).collect();
    let mut out = Array2::zeros((n, order.len()));
    for (dst, &c) in order.iter().enumerate() {
        for r in 0..n {
            out[[r, dst]] = vecs[(r, c)];
        }
    }
    Ok((values, out))
}

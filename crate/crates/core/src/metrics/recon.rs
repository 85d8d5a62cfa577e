//! Reconstruction error of a stage embedding against the final one.

use faer::Mat;
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Orthogonal `R` minimizing `||Y_s R - Y_full||_F` (polar factor of `Y_s^T Y_full`).
pub fn orthogonal_alignment(y_full: ArrayView2<'_, f64>, y_s: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let cross = y_s.t().dot(&y_full);
    let m = cross.nrows();
    let mat = Mat::from_fn(m, m, |i, j| cross[[i, j]]);
    let svd = mat.svd().map_err(|_| Error::ConvergenceFailure { converged: 0, requested: m })?;
    let r = svd.U() * svd.V().transpose();
    Ok(Array2::from_shape_fn((m, m), |(i, j)| r[(i, j)]))
}

/// `||Y_full - Y_s||_F / ||Y_full||_F`, optionally after aligning `Y_s`.
pub fn reconstruction_error(y_full: ArrayView2<'_, f64>, y_s: ArrayView2<'_, f64>, align: bool) -> Result<f64> {
    if y_full.dim() != y_s.dim() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", y_full.dim(), y_s.dim())));
    }
    let reference = y_full.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let aligned;
    let ys = if align {
        aligned = y_s.dot(&orthogonal_alignment(y_full, y_s)?);
        aligned.view()
    } else {
        y_s
    };
    let resid = y_full.iter().zip(ys.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(resid / reference)
}

/// `E(S) = ||Y_full - U[:, :S] P[:S]||_F / ||Y_full||_F` for every `S` in
/// `1..=P.rows()`, where `Y_full = U P`: the error of keeping only the
/// leading `S` terms of the modal expansion of a fixed projection.
pub fn prefix_reconstruction_curve(u: ArrayView2<'_, f64>, p: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if u.ncols() != p.nrows() {
        return Err(Error::ShapeMismatch(format!("basis has {} modes, P has {} rows", u.ncols(), p.nrows())));
    }
    let full = u.dot(&p);
    let reference = full.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let mut resid = full;
    let mut out = Vec::with_capacity(p.nrows());
    for s in 0..p.nrows() {
        let (col, row) = (u.column(s), p.row(s));
        for (mut r, &c) in resid.rows_mut().into_iter().zip(col.iter()) {
            r.scaled_add(-c, &row);
        }
        out.push(resid.iter().map(|v| v * v).sum::<f64>().sqrt() / reference);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn normalization_cases() {
        let y = array![[1.0, 2.0], [-0.5, 3.0], [4.0, 0.0]];
        assert_eq!(reconstruction_error(y.view(), y.view(), false).unwrap(), 0.0);
        let zero = Array2::zeros((3, 2));
        assert_eq!(reconstruction_error(y.view(), zero.view(), false).unwrap(), 1.0);
        let double = &y * 2.0;
        assert!((reconstruction_error(y.view(), double.view(), false).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(reconstruction_error(zero.view(), y.view(), false), Err(Error::ZeroReference)));
    }

    #[test]
    fn prefix_curve_ends_at_zero() {
        // orthonormal columns of a 4x3 basis
        let h = 0.5;
        let u = array![[h, h, h], [h, -h, h], [h, h, -h], [h, -h, -h]];
        let p = array![[1.0, 0.0], [0.0, 2.0], [0.5, 0.5]];
        let curve = prefix_reconstruction_curve(u.view(), p.view()).unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
        assert!(curve[2].abs() < 1e-15);
        // orthonormal modes: E(1)^2 = (|p_2|^2 + |p_3|^2) / |P|^2
        assert!((curve[0] - (4.5f64 / 5.5).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn alignment_undoes_rotation_and_reflection() {
        let y = array![[1.0, 2.0], [-0.5, 3.0], [4.0, 0.0], [0.1, -2.0]];
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = array![[c, -s], [s, c]];
        let flip = array![[1.0, 0.0], [0.0, -1.0]];
        let moved = y.dot(&rot).dot(&flip);
        assert!(reconstruction_error(y.view(), moved.view(), false).unwrap() > 0.1);
        assert!(reconstruction_error(y.view(), moved.view(), true).unwrap() < 1e-12);
    }
}

//! Ordered eigenbasis of the normalized Laplacian and its truncated subspaces.

mod dense;
pub mod lanczos;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use lanczos::LanczosOptions;

use crate::error::{invalid, Error, Result};
use crate::graph::{LaplacianMatrix, SYMMETRY_TOL};

/// Eigenvalues below this count as zero when looking for the trivial mode.
pub const ZERO_EIGENVALUE: f64 = 1e-9;
/// Required residual `||L u - lambda u||` for every returned mode.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Above this size the `auto` mode switches to the iterative solver.
pub const DENSE_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMode {
    #[default]
    Auto,
    Dense,
    Iterative,
}

impl std::str::FromStr for EigenMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(EigenMode::Auto),
            "dense" => Ok(EigenMode::Dense),
            "iterative" => Ok(EigenMode::Iterative),
            other => Err(format!("unknown eigen mode '{other}'")),
        }
    }
}

/// Non-trivial eigenpairs of the Laplacian in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `n x n_modes`, one eigenvector per column.
    pub modes: Array2<f64>,
    pub trivial_excluded: bool,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.modes.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }
}

/// The leading `s` modes of a spectrum, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct SpectralSubspace<'a> {
    pub basis: ArrayView2<'a, f64>,
    pub eigenvalues: &'a [f64],
}

impl SpectralSubspace<'_> {
    pub fn s(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }
}

/// Computes the `s_max` smallest non-trivial eigenpairs of `l`.
pub fn eigendecompose(l: &LaplacianMatrix, s_max: usize, mode: EigenMode) -> Result<Spectrum> {
    eigendecompose_with(l, s_max, mode, &LanczosOptions::default())
}

pub fn eigendecompose_with(
    l: &LaplacianMatrix,
    s_max: usize,
    mode: EigenMode,
    opts: &LanczosOptions,
) -> Result<Spectrum> {
    let n = l.n();
    if s_max == 0 || s_max + 1 > n {
        return Err(invalid(format!("s_max must satisfy 1 <= s_max <= n - 1 (s_max = {s_max}, n = {n})")));
    }
    l.check_symmetric(SYMMETRY_TOL)?;
    let nev = s_max + 1;
    let dense = match mode {
        EigenMode::Dense => true,
        EigenMode::Iterative => false,
        EigenMode::Auto => n <= DENSE_LIMIT || s_max > n / 2,
    };
    let (vals, vecs) = if dense {
        dense::smallest_eigenpairs(l, nev)?
    } else {
        lanczos::smallest_eigenpairs(l, nev, opts)?
    };
    let (mut eigenvalues, mut modes) = remove_trivial(l, vals, vecs)?;
    fix_signs(&mut modes);

    let residuals = residual_norms(l, &eigenvalues, &modes);
    let converged = residuals.iter().take_while(|&&r| r <= RESIDUAL_TOL).count();
    if converged < residuals.len() {
        return Err(Error::ConvergenceFailure { converged, requested: s_max });
    }
    // Rayleigh quotients of the rotated null block can land a hair below zero.
    for v in &mut eigenvalues {
        if v.abs() < ZERO_EIGENVALUE {
            *v = v.max(0.0);
        }
    }
    Ok(Spectrum { eigenvalues, modes, trivial_excluded: true, residuals })
}

/// Drops exactly one direction, the normalized `D^{1/2} 1`, from the
/// near-zero block. Remaining null vectors (one per extra component) are kept,
/// rotated to be orthogonal to the trivial direction.
fn remove_trivial(l: &LaplacianMatrix, vals: Vec<f64>, vecs: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.n();
    let sd = l.sqrt_degree();
    let sd_norm = sd.iter().map(|x| x * x).sum::<f64>().sqrt();
    let trivial: Vec<f64> = sd.iter().map(|x| x / sd_norm).collect();

    let zero: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < ZERO_EIGENVALUE).collect();
    if zero.is_empty() {
        return Err(Error::TrivialModeNotFound);
    }
    // overlaps of the null block with the trivial direction
    let c: Vec<f64> = zero
        .iter()
        .map(|&col| (0..n).map(|r| vecs[[r, col]] * trivial[r]).sum::<f64>())
        .collect();
    let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if c_norm < 1.0 - 1e-6 {
        return Err(Error::TrivialModeNotFound);
    }
    let rest: Vec<usize> = (0..vals.len()).filter(|i| vals[*i] >= ZERO_EIGENVALUE).collect();
    let z = zero.len();
    let mut out_vals = Vec::with_capacity(vals.len() - 1);
    let mut out = Array2::zeros((n, vals.len() - 1));
    let mut col = 0;

    if z > 1 {
        // Householder H maps c/|c| onto e_1; columns 2.. of B H span the
        // complement of the trivial direction inside the null block.
        let mut h: Vec<f64> = c.iter().map(|x| x / c_norm).collect();
        let sign = if h[0] >= 0.0 { 1.0 } else { -1.0 };
        h[0] += sign;
        let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        h.iter_mut().for_each(|x| *x /= hn);
        for q in 1..z {
            // column q of H = e_q - 2 h h_q
            let hq: Vec<f64> = (0..z).map(|p| f64::from(u8::from(p == q)) - 2.0 * h[p] * h[q]).collect();
            for r in 0..n {
                out[[r, col]] = zero.iter().zip(&hq).map(|(&zc, &w)| vecs[[r, zc]] * w).sum();
            }
            let u: Vec<f64> = out.column(col).to_vec();
            out_vals.push(l.quadratic_form(&u));
            col += 1;
        }
    }
    for &i in &rest {
        out.column_mut(col).assign(&vecs.column(i));
        out_vals.push(vals[i]);
        col += 1;
    }
    // keep ascending order after inserting Rayleigh quotients
    let mut order: Vec<usize> = (0..out_vals.len()).collect();
    order.sort_by(|&a, &b| out_vals[a].total_cmp(&out_vals[b]).then(a.cmp(&b)));
    let sorted_vals = order.iter().map(|&i| out_vals[i]).collect();
    let mut sorted = Array2::zeros(out.dim());
    for (dst, &src) in order.iter().enumerate() {
        sorted.column_mut(dst).assign(&out.column(src));
    }
    Ok((sorted_vals, sorted))
}

/// Makes the largest-magnitude entry of each column positive (lowest index on ties).
pub fn fix_signs(modes: &mut Array2<f64>) {
    for mut col in modes.columns_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

fn residual_norms(l: &LaplacianMatrix, vals: &[f64], modes: &Array2<f64>) -> Vec<f64> {
    let n = l.n();
    let mut y = vec![0.0; n];
    vals.iter()
        .enumerate()
        .map(|(c, &lam)| {
            let u = modes.column(c).to_vec();
            l.matvec(&u, &mut y);
            y.iter().zip(&u).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Leading `s` modes.
pub fn subspace(spec: &Spectrum, s: usize) -> Result<SpectralSubspace<'_>> {
    if s == 0 || s > spec.n_modes() {
        return Err(Error::SubspaceTooLarge { requested: s, available: spec.n_modes() });
    }
    Ok(SpectralSubspace { basis: spec.modes.slice(s![.., ..s]), eigenvalues: &spec.eigenvalues[..s] })
}

/// Least-squares coefficients `U^T Y` of `y` in the orthonormal basis `u`.
pub fn project_exact(u: &SpectralSubspace<'_>, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if y.nrows() != u.n() {
        return Err(Error::ShapeMismatch(format!("target has {} rows, basis has {}", y.nrows(), u.n())));
    }
    Ok(u.basis.t().dot(&y))
}

//! Thick-restart Lanczos for the smallest eigenpairs of a sparse symmetric
//! operator, with full reorthogonalization and locking.
//!
//! Thick restarting keeps the wanted Ritz vectors plus the residual direction,
//! which is equivalent to implicit restarting with exact shifts.

use faer::Mat;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::symmetric_eigen;
use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov basis size; `None` picks `max(2 nev + 1, nev + 30)`.
    pub ncv: Option<usize>,
    /// Convergence threshold on the Ritz residual estimate.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { ncv: None, tol: 1e-11, max_restarts: 20_000, seed: 0x5eed_1a2c }
    }
}

struct Basis {
    n: usize,
    /// Row `r` holds basis vector `r`.
    rows: Vec<f64>,
}

impl Basis {
    fn new(n: usize, cap: usize) -> Self {
        Self { n, rows: vec![0.0; n * cap] }
    }
    fn get(&self, r: usize) -> &[f64] {
        &self.rows[r * self.n..(r + 1) * self.n]
    }
    fn get_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.rows[r * self.n..(r + 1) * self.n]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against `locked` and the first `count`
/// basis rows. Returns the accumulated coefficient on basis row `diag`, if any.
fn orthogonalize(w: &mut [f64], locked: &[Vec<f64>], basis: &Basis, count: usize, diag: Option<usize>) -> f64 {
    let mut diag_coef = 0.0;
    for _ in 0..2 {
        for q in locked {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
        let coefs: Vec<f64> = (0..count).map(|r| dot(basis.get(r), w)).collect();
        for (r, &c) in coefs.iter().enumerate() {
            axpy(-c, basis.get(r), w);
            if Some(r) == diag {
                diag_coef += c;
            }
        }
    }
    diag_coef
}

fn random_unit_orthogonal(
    rng: &mut ChaCha8Rng,
    locked: &[Vec<f64>],
    basis: &Basis,
    count: usize,
) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..basis.n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, locked, basis, count, None);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// Smallest `nev` eigenpairs of `l` restricted to the orthogonal complement
/// of `locked` (which must be orthonormal).
fn lanczos_block(
    l: &LaplacianMatrix,
    nev: usize,
    locked: &[Vec<f64>],
    opts: &LanczosOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = l.n();
    let avail = n - locked.len();
    let nev = nev.min(avail);
    if nev == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let m = opts.ncv.unwrap_or((2 * nev + 1).max(nev + 30)).max(nev + 1).min(avail);

    let mut basis = Basis::new(n, m + 1);
    let mut t = vec![0.0; m * m];
    let start = random_unit_orthogonal(rng, locked, &basis, 0).ok_or(Error::ConvergenceFailure {
        converged: 0,
        requested: nev,
    })?;
    basis.get_mut(0).copy_from_slice(&start);

    let mut kept = 0usize;
    let mut w = vec![0.0; n];
    let mut converged = 0usize;

    for _restart in 0..=opts.max_restarts {
        let mut last_beta = 0.0;
        for j in kept..m {
            l.matvec(basis.get(j), &mut w);
            let alpha = orthogonalize(&mut w, locked, &basis, j + 1, Some(j));
            t[j * m + j] = alpha;
            let mut beta = norm(&w);
            let next_ok = if beta > 1e-12 {
                true
            } else if j + 1 < avail {
                // invariant subspace: continue with a fresh direction, no coupling
                beta = 0.0;
                match random_unit_orthogonal(rng, locked, &basis, j + 1) {
                    Some(v) => {
                        w.copy_from_slice(&v);
                        true
                    }
                    None => false,
                }
            } else {
                beta = 0.0;
                false
            };
            if next_ok {
                let inv = if beta > 0.0 { 1.0 / beta } else { 1.0 };
                let dst = basis.get_mut(j + 1);
                for (d, x) in dst.iter_mut().zip(&w) {
                    *d = x * inv;
                }
            } else {
                basis.get_mut(j + 1).iter_mut().for_each(|x| *x = 0.0);
            }
            if j + 1 < m {
                t[(j + 1) * m + j] = beta;
                t[j * m + j + 1] = beta;
            }
            last_beta = beta;
        }

        let tm = Mat::<f64>::from_fn(m, m, |r, c| t[r * m + c]);
        let (theta, s) = symmetric_eigen(tm.as_ref(), m)?;
        let resid: Vec<f64> = (0..m).map(|i| (last_beta * s[[m - 1, i]]).abs()).collect();
        converged = resid.iter().take(nev).take_while(|&&r| r <= opts.tol).count();
        let done = converged == nev || m == avail && last_beta == 0.0;

        let keep = if done { nev } else { (nev + (m - nev) / 2).min(m - 1).max(nev) };
        // new basis rows: V S[:, ..keep]
        let mut fresh = vec![0.0; keep * n];
        for c in 0..keep {
            let out = &mut fresh[c * n..(c + 1) * n];
            for r in 0..m {
                axpy(s[[r, c]], basis.get(r), out);
            }
        }

        if done {
            let vecs: Vec<Vec<f64>> = (0..nev).map(|c| fresh[c * n..(c + 1) * n].to_vec()).collect();
            return Ok((theta[..nev].to_vec(), vecs));
        }

        let residual_dir = basis.get(m).to_vec();
        basis.rows[..keep * n].copy_from_slice(&fresh);
        basis.get_mut(keep).copy_from_slice(&residual_dir);
        t.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..keep {
            t[c * m + c] = theta[c];
            let coupling = last_beta * s[[m - 1, c]];
            if keep < m {
                t[keep * m + c] = coupling;
                t[c * m + keep] = coupling;
            }
        }
        kept = keep;
    }
    Err(Error::ConvergenceFailure { converged, requested: nev })
}

/// The `nev` smallest eigenpairs of `l`, ascending, as columns.
///
/// After the main solve, deflated verification passes look for eigenvalues
/// the Krylov space missed (repeated eigenvalues, e.g. one null vector per
/// connected component) and merge them in.
pub fn smallest_eigenpairs(l: &LaplacianMatrix, nev: usize, opts: &LanczosOptions) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.n();
    let nev = nev.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut vals, mut vecs) = lanczos_block(l, nev, &[], opts, &mut rng)?;

    while vecs.len() < n {
        let probe = nev.min(8).min(n - vecs.len());
        let (pv, pvec) = lanczos_block(l, probe, &vecs, opts, &mut rng)?;
        let threshold = vals[nev - 1] - opts.tol.max(1e-12) * 10.0;
        let mut added = false;
        for (v, x) in pv.into_iter().zip(pvec) {
            if v < threshold {
                vals.push(v);
                vecs.push(x);
                added = true;
            }
        }
        if !added {
            break;
        }
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        order.truncate(nev);
        vals = order.iter().map(|&i| vals[i]).collect();
        vecs = order.iter().map(|&i| vecs[i].clone()).collect();
    }

    let mut out = Array2::zeros((n, nev));
    for (c, v) in vecs.iter().enumerate() {
        for r in 0..n {
            out[[r, c]] = v[r];
        }
    }
    Ok((vals, out))
}

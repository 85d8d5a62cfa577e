//! Similarity kernel, per-pair gradients and the full-sum reference loss.

use ndarray::{Array2, ArrayView2};

use super::curve::CurveParams;
use super::ProjectionMatrix;
use crate::error::{Error, Result};
use crate::graph::FuzzyGraph;
use crate::spectral::SpectralSubspace;

/// Quadratic-cost guard for [`dense_loss`].
pub const DENSE_LIMIT: usize = 2000;
const Q_CLAMP: f64 = 1e-12;

#[inline]
fn sq_dist(yi: &[f64], yj: &[f64]) -> f64 {
    yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `q = (1 + a ||yi - yj||^{2b})^{-1}`.
pub fn q_similarity(yi: &[f64], yj: &[f64], c: &CurveParams) -> f64 {
    c.q_from_sq(sq_dist(yi, yj))
}

/// Coefficient `k` with `d(-log q)/d yi = k (yi - yj)`; zero at coincidence.
#[inline]
pub(crate) fn attractive_coef(d2: f64, a: f64, b: f64) -> f64 {
    if d2 > 0.0 {
        2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b))
    } else {
        0.0
    }
}

/// Coefficient `k` with `d(-log(1 - q))/d yi = k (yi - yj)`, `eps` guarding `d -> 0`.
#[inline]
pub(crate) fn repulsive_coef(d2: f64, a: f64, b: f64, eps: f64) -> f64 {
    -2.0 * b / ((eps + d2) * (1.0 + a * d2.powf(b)))
}

/// Returns `(d(-log q)/d yi, d(-log(1 - q))/d yi)`, unclipped.
pub fn pair_gradients(yi: &[f64], yj: &[f64], c: &CurveParams, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let d2 = sq_dist(yi, yj);
    let ka = attractive_coef(d2, c.a, c.b);
    let kr = repulsive_coef(d2, c.a, c.b, eps);
    let diff: Vec<f64> = yi.iter().zip(yj).map(|(a, b)| a - b).collect();
    (diff.iter().map(|d| ka * d).collect(), diff.iter().map(|d| kr * d).collect())
}

fn check_shapes(p: &ProjectionMatrix, u: &SpectralSubspace<'_>, g: &FuzzyGraph) -> Result<()> {
    if p.rows() != u.s() {
        return Err(Error::ShapeMismatch(format!("P has {} rows, subspace has {} modes", p.rows(), u.s())));
    }
    if g.n() != u.n() {
        return Err(Error::ShapeMismatch(format!("graph has {} points, subspace {}", g.n(), u.n())));
    }
    if u.n() > DENSE_LIMIT {
        return Err(Error::TooLargeForDense { n: u.n(), limit: DENSE_LIMIT });
    }
    Ok(())
}

/// Full cross-entropy: `-sum_edges w log q - gamma sum_{i<j} log(1 - q)`,
/// with `q` clamped to `[1e-12, 1 - 1e-12]`.
pub fn dense_loss(p: &ProjectionMatrix, u: &SpectralSubspace<'_>, g: &FuzzyGraph, c: &CurveParams, gamma: f64) -> Result<f64> {
    check_shapes(p, u, g)?;
    let y = p.embed(u);
    Ok(dense_loss_of_embedding(y.view(), g, c, gamma))
}

pub fn dense_loss_of_embedding(y: ArrayView2<'_, f64>, g: &FuzzyGraph, c: &CurveParams, gamma: f64) -> f64 {
    let n = y.nrows();
    let clamp = |q: f64| q.clamp(Q_CLAMP, 1.0 - Q_CLAMP);
    let row = |i: usize| y.row(i).to_vec();
    let rows: Vec<Vec<f64>> = (0..n).map(row).collect();
    let mut attract = 0.0;
    for e in g.edges() {
        let q = clamp(q_similarity(&rows[e.i], &rows[e.j], c));
        attract -= e.w * q.ln();
    }
    let mut repel = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let q = clamp(q_similarity(&rows[i], &rows[j], c));
            repel -= (1.0 - q).ln();
        }
    }
    attract + gamma * repel
}

/// Analytic gradient of [`dense_loss`] with respect to `P`.
pub fn dense_loss_gradient(
    p: &ProjectionMatrix,
    u: &SpectralSubspace<'_>,
    g: &FuzzyGraph,
    c: &CurveParams,
    gamma: f64,
) -> Result<Array2<f64>> {
    check_shapes(p, u, g)?;
    let y = p.embed(u);
    let (n, m) = y.dim();
    let mut gy = Array2::<f64>::zeros((n, m));
    let active = |d2: f64| {
        let q = c.q_from_sq(d2);
        q > Q_CLAMP && q < 1.0 - Q_CLAMP
    };
    for e in g.edges() {
        let d2: f64 = (0..m).map(|k| (y[[e.i, k]] - y[[e.j, k]]).powi(2)).sum();
        if !active(d2) {
            continue;
        }
        let k = e.w * attractive_coef(d2, c.a, c.b);
        for col in 0..m {
            let diff = y[[e.i, col]] - y[[e.j, col]];
            gy[[e.i, col]] += k * diff;
            gy[[e.j, col]] -= k * diff;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = (0..m).map(|k| (y[[i, k]] - y[[j, k]]).powi(2)).sum();
            if !active(d2) {
                continue;
            }
            let k = gamma * repulsive_coef(d2, c.a, c.b, 0.0);
            for col in 0..m {
                let diff = y[[i, col]] - y[[j, col]];
                gy[[i, col]] += k * diff;
                gy[[j, col]] -= k * diff;
            }
        }
    }
    Ok(u.basis.t().dot(&gy))
}

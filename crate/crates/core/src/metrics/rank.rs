//! Neighborhood rank metrics: continuity and MRRE for missing neighbors.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{by_distance_then_index, euclidean};

/// Data-space neighborhoods shared by every stage evaluated against `X`.
#[derive(Debug, Clone)]
pub struct RankReference {
    n: usize,
    k: usize,
    /// `n x k`, nearest first.
    neighbors: Vec<usize>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    // 1 <= k < (N - 1) / 2, compared without rounding
    if k == 0 || 2 * k >= n.saturating_sub(1) {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(())
}

fn rows_of(x: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Full rank (1-based) of every point among distances from `i`, self excluded.
fn ranks_from(rows: &[Vec<f64>], i: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> =
        (0..rows.len()).filter(|&j| j != i).map(|j| (euclidean(&rows[i], &rows[j]), j)).collect();
    order.sort_unstable_by(by_distance_then_index);
    let mut rank = vec![0usize; rows.len()];
    for (r, &(_, j)) in order.iter().enumerate() {
        rank[j] = r + 1;
    }
    rank
}

impl RankReference {
    pub fn new(x: ArrayView2<'_, f64>, k: usize) -> Result<Self> {
        let n = x.nrows();
        check_k(n, k)?;
        let rows = rows_of(x);
        let per_row: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut order: Vec<(f64, usize)> =
                    (0..n).filter(|&j| j != i).map(|j| (euclidean(&rows[i], &rows[j]), j)).collect();
                order.select_nth_unstable_by(k - 1, by_distance_then_index);
                order.truncate(k);
                order.sort_unstable_by(by_distance_then_index);
                order.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        Ok(RankReference { n, k, neighbors: per_row.concat() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(continuity, mrre)` of embedding `y`.
    pub fn score(&self, y: ArrayView2<'_, f64>) -> Result<(f64, f64)> {
        if y.nrows() != self.n {
            return Err(Error::ShapeMismatch(format!("embedding has {} rows, data {}", y.nrows(), self.n)));
        }
        let (n, k) = (self.n, self.k);
        let rows = rows_of(y);
        let per_row: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let rank = ranks_from(&rows, i);
                let mut cont = 0.0;
                let mut mrre = 0.0;
                for (r, &j) in self.neighbors[i * k..(i + 1) * k].iter().enumerate() {
                    let rx = (r + 1) as f64;
                    let ry = rank[j] as f64;
                    if rank[j] > k {
                        cont += ry - k as f64;
                    }
                    mrre += (rx - ry).abs() / rx;
                }
                (cont, mrre)
            })
            .collect();
        let (cont, mrre) = per_row.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
        let (nf, kf) = (n as f64, k as f64);
        let continuity = 1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * cont;
        Ok((continuity, 1.0 - mrre / mrre_normalizer(n, k)))
    }
}

/// `C = N sum_{l=1..k} |N - 2l + 1| / l`.
pub fn mrre_normalizer(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    nf * (1..=k).map(|l| (nf - 2.0 * l as f64 + 1.0).abs() / l as f64).sum::<f64>()
}

/// Penalizes data-space neighbors pushed out of the embedding neighborhood.
pub fn continuity(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    RankReference::new(x, k)?.score(y).map(|(c, _)| c)
}

/// Mean relative rank error over data-space neighbors, reported as `1 - error`.
pub fn mrre_missing(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    RankReference::new(x, k)?.score(y).map(|(_, m)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_scores_one() {
        let x = array![[0.0, 0.0], [1.0, 0.2], [2.5, 1.0], [0.3, 4.0], [5.0, 5.0], [3.0, -1.0], [-2.0, 1.0]];
        let (c, m) = RankReference::new(x.view(), 2).unwrap().score(x.view()).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(m, 1.0);
    }

    #[test]
    fn k_bounds() {
        let x = ndarray::Array2::<f64>::zeros((7, 1));
        assert!(matches!(continuity(x.view(), x.view(), 3), Err(Error::KTooLarge { .. })));
        assert!(matches!(continuity(x.view(), x.view(), 0), Err(Error::KTooLarge { .. })));
        assert!(continuity(x.view(), x.view(), 2).is_ok());
    }

    #[test]
    fn reversed_line_is_penalized() {
        let x = ndarray::Array2::from_shape_fn((9, 1), |(i, _)| (i * i) as f64);
        let y = ndarray::Array2::from_shape_fn((9, 1), |(i, _)| -((i * i * i) as f64).sqrt());
        let z = ndarray::Array2::from_shape_fn((9, 1), |(i, _)| ((i * 7) % 9) as f64);
        let ident = mrre_missing(x.view(), x.view(), 2).unwrap();
        assert_eq!(ident, 1.0);
        assert!(mrre_missing(x.view(), z.view(), 2).unwrap() < ident);
        assert!(mrre_missing(x.view(), y.view(), 2).unwrap() <= ident);
    }
}

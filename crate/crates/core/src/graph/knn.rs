use std::cmp::Ordering;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean(a, b),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                (1.0 - dot / (na * nb)).max(0.0)
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric '{other}' (expected euclidean or cosine)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` nearest neighbors of every point, self excluded, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists {
    pub indices: Array2<usize>,
    pub distances: Array2<f64>,
}

impl NeighborLists {
    pub fn n(&self) -> usize {
        self.indices.nrows()
    }

    pub fn k(&self) -> usize {
        self.indices.ncols()
    }
}

/// Orders candidates by distance, then by index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Exact kNN by brute force. Ties are broken by the lower index.
pub fn build_knn(data: &DataMatrix, k: usize, metric: Metric) -> Result<NeighborLists> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(invalid(format!("k must satisfy 1 <= k < N (k = {k}, N = {n})")));
    }
    let points = data.points();
    if metric == Metric::Cosine {
        if let Some(i) = points.outer_iter().position(|r| r.dot(&r) == 0.0) {
            return Err(invalid(format!("cosine distance undefined for zero vector at row {i}")));
        }
    }
    let owned;
    let flat: &[f64] = match points.as_slice() {
        Some(s) => s,
        None => {
            owned = points.to_owned().into_raw_vec_and_offset().0;
            &owned
        }
    };
    let m = data.m();
    let norms: Vec<f64> = (0..n)
        .map(|i| flat[i * m..(i + 1) * m].iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let rows: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &flat[i * m..(i + 1) * m];
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let xj = &flat[j * m..(j + 1) * m];
                    let d = match metric {
                        Metric::Euclidean => euclidean(xi, xj),
                        Metric::Cosine => {
                            let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
                            (1.0 - dot / (norms[i] * norms[j])).max(0.0)
                        }
                    };
                    (d, j)
                })
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_distance_then_index);
            cand
        })
        .collect();

    let mut indices = Array2::zeros((n, k));
    let mut distances = Array2::zeros((n, k));
    for (i, row) in rows.into_iter().enumerate() {
        for (c, (d, j)) in row.into_iter().enumerate() {
            indices[[i, c]] = j;
            distances[[i, c]] = d;
        }
    }
    Ok(NeighborLists { indices, distances })
}

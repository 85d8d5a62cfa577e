//! DEMaP: rank agreement between kNN-graph geodesics and embedding distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::spearman_rho;
use super::distance::{DistanceSummary, PairSet};
use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::graph::{build_knn, Metric};

/// Smallest accepted largest-component fraction.
pub const MIN_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemapScore {
    pub rho: f64,
    /// Fraction of points in the largest connected component.
    pub coverage: f64,
    pub pairs: usize,
}

/// Geodesic distances on the largest component of the data kNN graph.
#[derive(Debug, Clone)]
pub struct GeodesicReference {
    component: Vec<usize>,
    coverage: f64,
    pairs: PairSet,
    geodesic: Vec<f64>,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist
}

/// Undirected kNN adjacency with Euclidean edge lengths.
fn knn_adjacency(x: ArrayView2<'_, f64>, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let data = DataMatrix::new(x.to_owned())?;
    let nbrs = build_knn(&data, k, Metric::Euclidean)?;
    let n = data.n();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (&j, &d) in nbrs.indices.row(i).iter().zip(nbrs.distances.row(i)) {
            adj[i].push((j, d));
            adj[j].push((i, d));
        }
    }
    for list in &mut adj {
        list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        list.dedup_by_key(|e| e.0);
    }
    Ok(adj)
}

/// Largest connected component, ascending; ties go to the lowest member.
fn largest_component(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        label[start] = start;
        let mut head = 0;
        while head < members.len() {
            let v = members[head];
            head += 1;
            for &(w, _) in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = start;
                    members.push(w);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

impl GeodesicReference {
    pub fn new(x: ArrayView2<'_, f64>, k_geo: usize, pair_seed: u64) -> Result<Self> {
        if k_geo < 2 {
            return Err(invalid(format!("DEMaP graph needs k >= 2, got {k_geo}")));
        }
        let n = x.nrows();
        let adj = knn_adjacency(x, k_geo)?;
        let component = largest_component(&adj);
        let coverage = component.len() as f64 / n as f64;
        if coverage < MIN_COVERAGE {
            return Err(Error::GraphTooFragmented { coverage });
        }
        let pairs = PairSet::for_points(component.len(), pair_seed);
        let geodesic = match &pairs {
            PairSet::Exact { n: c } => {
                let rows: Vec<Vec<f64>> = (0..*c)
                    .into_par_iter()
                    .map(|a| {
                        let dist = dijkstra(&adj, component[a]);
                        (a + 1..*c).map(|b| dist[component[b]]).collect()
                    })
                    .collect();
                rows.concat()
            }
            PairSet::Sampled { pairs: list, .. } => {
                let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); component.len()];
                for (idx, &(a, _)) in list.iter().enumerate() {
                    by_source[a as usize].push(idx);
                }
                let mut out = vec![0.0; list.len()];
                let filled: Vec<Vec<(usize, f64)>> = by_source
                    .par_iter()
                    .enumerate()
                    .filter(|(_, idxs)| !idxs.is_empty())
                    .map(|(a, idxs)| {
                        let dist = dijkstra(&adj, component[a]);
                        idxs.iter().map(|&idx| (idx, dist[component[list[idx].1 as usize]])).collect()
                    })
                    .collect();
                for (idx, d) in filled.into_iter().flatten() {
                    out[idx] = d;
                }
                out
            }
        };
        Ok(GeodesicReference { component, coverage, pairs, geodesic })
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn geodesics(&self) -> &[f64] {
        &self.geodesic
    }

    pub fn score(&self, y: ArrayView2<'_, f64>) -> Result<DemapScore> {
        let sub = Array2::from_shape_fn((self.component.len(), y.ncols()), |(a, c)| y[[self.component[a], c]]);
        let dy = DistanceSummary::euclidean(sub.view(), &self.pairs)?;
        let rho = spearman_rho(&self.geodesic, &dy.values)?;
        Ok(DemapScore { rho, coverage: self.coverage, pairs: self.pairs.len() })
    }
}

pub fn demap(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k_geo: usize) -> Result<DemapScore> {
    if x.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch(format!("data has {} rows, embedding {}", x.nrows(), y.nrows())));
    }
    GeodesicReference::new(x, k_geo, 0)?.score(y)
}

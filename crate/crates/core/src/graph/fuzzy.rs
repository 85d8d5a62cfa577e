use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::knn::NeighborLists;
use crate::error::{invalid, Error, Result};

/// Union weights below this are dropped from the edge list.
pub const EDGE_DROP_THRESHOLD: f64 = 1e-12;

const SIGMA_TOL: f64 = 1e-5;
const SIGMA_MAX_ITER: usize = 64;
const SIGMA_LO: f64 = 1e-12;

/// Directed membership strengths `w_{i->j}` aligned with the neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedWeights {
    pub indices: Array2<usize>,
    pub weights: Array2<f64>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Set when `k = 1`: every weight is 1 and sigma carries no information.
    pub degenerate_k1: bool,
}

/// Computes per-point `rho`, `sigma` and `w_{i->j} = exp(-max(0, d_ij - rho_i) / sigma_i)`.
///
/// `sigma_i` is found by bisection so that the weights of each point sum to
/// `log2(k)`.
pub fn fuzzy_weights(nbrs: &NeighborLists) -> Result<DirectedWeights> {
    let (n, k) = nbrs.indices.dim();
    if k == 0 {
        return Err(invalid("neighbor lists are empty"));
    }
    let mut weights = Array2::zeros((n, k));
    let mut rho = vec![0.0; n];
    let mut sigma = vec![1.0; n];

    if k == 1 {
        log::warn!("k = 1: all fuzzy weights are 1 and sigma is unused");
        weights.fill(1.0);
        for i in 0..n {
            rho[i] = nbrs.distances[[i, 0]];
        }
        return Ok(DirectedWeights {
            indices: nbrs.indices.clone(),
            weights,
            rho,
            sigma,
            degenerate_k1: true,
        });
    }

    let target = (k as f64).log2();
    for i in 0..n {
        let d = nbrs.distances.row(i);
        let r = d[0];
        let d_max = d[k - 1];
        let offsets: Vec<f64> = d.iter().map(|&x| (x - r).max(0.0)).collect();
        let s = solve_sigma(&offsets, target, d_max).ok_or(Error::SigmaSearchFailed { point: i })?;
        rho[i] = r;
        sigma[i] = s;
        for (c, off) in offsets.iter().enumerate() {
            weights[[i, c]] = (-off / s).exp();
        }
    }
    Ok(DirectedWeights {
        indices: nbrs.indices.clone(),
        weights,
        rho,
        sigma,
        degenerate_k1: false,
    })
}

fn membership_sum(offsets: &[f64], sigma: f64) -> f64 {
    offsets.iter().map(|o| (-o / sigma).exp()).sum()
}

fn solve_sigma(offsets: &[f64], target: f64, d_max: f64) -> Option<f64> {
    let mut lo = SIGMA_LO;
    let mut hi = (d_max * 1024.0).max(SIGMA_LO);
    let f_lo = membership_sum(offsets, lo);
    if f_lo >= target - SIGMA_TOL {
        // Enough zero-offset neighbors already reach the target.
        return Some(lo);
    }
    if membership_sum(offsets, hi) < target - SIGMA_TOL {
        return None;
    }
    for _ in 0..SIGMA_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = membership_sum(offsets, mid);
        if (f - target).abs() <= SIGMA_TOL {
            return Some(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    ((membership_sum(offsets, mid) - target).abs() <= SIGMA_TOL).then_some(mid)
}

/// One undirected weighted edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Symmetric weighted adjacency stored as an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    n: usize,
    edges: Vec<Edge>,
    degree: Vec<f64>,
}

impl FuzzyGraph {
    /// Builds a graph from undirected edges, validating weights and endpoints.
    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut edges = edges;
        for e in &mut edges {
            if e.i == e.j || e.i >= n || e.j >= n {
                return Err(invalid(format!("invalid edge ({}, {}) for n = {n}", e.i, e.j)));
            }
            if !(e.w > 0.0 && e.w <= 1.0) {
                return Err(invalid(format!("edge weight {} outside (0, 1]", e.w)));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
        }
        edges.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        if edges.windows(2).any(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(invalid("duplicate edge"));
        }
        let mut degree = vec![0.0; n];
        for e in &edges {
            degree[e.i] += e.w;
            degree[e.j] += e.w;
        }
        Ok(Self { n, edges, degree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    /// Dense `n x n` weight matrix; intended for small graphs and tests.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut w = Array2::zeros((self.n, self.n));
        for e in &self.edges {
            w[[e.i, e.j]] = e.w;
            w[[e.j, e.i]] = e.w;
        }
        w
    }
}

/// Probabilistic union `a + b - a*b` of the two directed weights of each pair.
pub fn symmetrize(directed: &DirectedWeights) -> FuzzyGraph {
    let (n, k) = directed.indices.dim();
    let mut entries: Vec<(usize, usize, f64, bool)> = Vec::with_capacity(n * k);
    for i in 0..n {
        for c in 0..k {
            let j = directed.indices[[i, c]];
            let w = directed.weights[[i, c]];
            if i < j {
                entries.push((i, j, w, true));
            } else {
                entries.push((j, i, w, false));
            }
        }
    }
    entries.sort_by(|a, b| (a.0, a.1, !a.3).cmp(&(b.0, b.1, !b.3)));

    let mut edges = Vec::with_capacity(entries.len());
    let mut degree = vec![0.0; n];
    let mut idx = 0;
    while idx < entries.len() {
        let (i, j, _, _) = entries[idx];
        let (mut a, mut b) = (0.0, 0.0);
        while idx < entries.len() && entries[idx].0 == i && entries[idx].1 == j {
            if entries[idx].3 {
                a = entries[idx].2;
            } else {
                b = entries[idx].2;
            }
            idx += 1;
        }
        let w = a + b - a * b;
        if w >= EDGE_DROP_THRESHOLD {
            degree[i] += w;
            degree[j] += w;
            edges.push(Edge { i, j, w });
        }
    }
    FuzzyGraph { n, edges, degree }
}

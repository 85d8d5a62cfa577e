#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specmap::graph::{build_fuzzy_graph, normalized_laplacian, Edge};
use specmap::spectral::eigendecompose;
use specmap::{DataMatrix, EigenMode, FuzzyGraph, Metric, Spectrum};

pub fn uniform(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, m), |_| rng.random::<f64>())
}

pub fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn dense_w(g: &FuzzyGraph) -> Vec<Vec<f64>> {
    rows(&g.to_dense())
}

pub fn knn_graph(n: usize, m: usize, k: usize, seed: u64) -> FuzzyGraph {
    let data = DataMatrix::new(uniform(n, m, seed)).unwrap();
    build_fuzzy_graph(&data, k, Metric::Euclidean).unwrap()
}

/// Ring plus random chords, weights in (0, 1]. Always connected.
pub fn random_connected(n: usize, chords: usize, seed: u64) -> FuzzyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = std::collections::BTreeMap::new();
    for i in 0..n {
        let j = (i + 1) % n;
        pairs.insert((i.min(j), i.max(j)), rng.random_range(0.1..=1.0));
    }
    for _ in 0..chords {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            pairs.insert((i.min(j), i.max(j)), rng.random_range(0.05..=1.0));
        }
    }
    let edges = pairs.into_iter().map(|((i, j), w)| Edge { i, j, w }).collect();
    FuzzyGraph::from_edges(n, edges).unwrap()
}

pub fn spectrum(g: &FuzzyGraph, s_max: usize) -> Spectrum {
    eigendecompose(&normalized_laplacian(g).unwrap(), s_max, EigenMode::Dense).unwrap()
}

pub fn columns(a: ndarray::ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    a.columns().into_iter().map(|c| c.to_vec()).collect()
}

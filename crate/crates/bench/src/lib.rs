//! Shared fixtures for the benchmarks.

use specmap::datasets::SyntheticSpec;
use specmap::graph::{build_fuzzy_graph, normalized_laplacian};
use specmap::spectral::eigendecompose;
use specmap::{DataMatrix, EigenMode, FuzzyGraph, Metric, Spectrum};

pub fn swiss_roll(n: usize) -> DataMatrix {
    SyntheticSpec::swiss_roll(n, 0).generate().expect("valid dataset").data
}

/// 15-NN graph and its leading `modes` eigenpairs.
pub fn graph_and_spectrum(n: usize, modes: usize) -> (DataMatrix, FuzzyGraph, Spectrum) {
    let data = swiss_roll(n);
    let g = build_fuzzy_graph(&data, 15, Metric::Euclidean).expect("graph");
    let l = normalized_laplacian(&g).expect("laplacian");
    let sp = eigendecompose(&l, modes, EigenMode::Iterative).expect("spectrum");
    (data, g, sp)
}

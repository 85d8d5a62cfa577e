//! Weighted kNN fuzzy graph and its symmetric normalized Laplacian.

mod fuzzy;
mod knn;
mod laplacian;

pub use fuzzy::{fuzzy_weights, symmetrize, DirectedWeights, Edge, FuzzyGraph, EDGE_DROP_THRESHOLD};
pub use knn::{build_knn, Metric, NeighborLists};
pub(crate) use knn::{by_distance_then_index, euclidean};
pub use laplacian::{normalized_laplacian, LaplacianMatrix, SYMMETRY_TOL};

use crate::data::DataMatrix;
use crate::error::Result;

/// Runs kNN search, fuzzy weighting and symmetrization in one go.
pub fn build_fuzzy_graph(data: &DataMatrix, k: usize, metric: Metric) -> Result<FuzzyGraph> {
    let nbrs = build_knn(data, k, metric)?;
    let directed = fuzzy_weights(&nbrs)?;
    Ok(symmetrize(&directed))
}

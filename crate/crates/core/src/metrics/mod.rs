//! Reconstruction error and label-free quality measures.

mod correlation;
mod distance;
mod geodesic;
mod rank;
mod recon;
mod report;

pub use correlation::{fractional_ranks, isotonic_fit, spearman_rho, stress_pair};
pub use distance::{DistanceSummary, PairSet, EXACT_PAIR_LIMIT, SAMPLED_PAIRS};
pub use geodesic::{demap, DemapScore, GeodesicReference, MIN_COVERAGE};
pub use rank::{continuity, mrre_missing, mrre_normalizer, RankReference};
pub use recon::{orthogonal_alignment, prefix_reconstruction_curve, reconstruction_error};
pub use report::{MetricContext, MetricParams, MetricReport, StageInput, StageMetrics, CSV_HEADER};

//! Neighbor embeddings optimized inside truncated spectral subspaces.
//!
//! The pipeline builds a fuzzy kNN graph ([`graph`]), takes the low-frequency
//! eigenvectors of its normalized Laplacian ([`spectral`]) and learns a
//! projection `Y = U_S P` of those modes by cross-entropy SGD ([`optimizer`]).
//! [`progressive`] grows the subspace stage by stage, [`metrics`] scores the
//! stages and [`explain`] derives the per-mode and per-point explanation data.
//! [`pipeline::run_embedding`] chains the steps and [`artifact`] serializes
//! the result.

pub mod artifact;
pub mod data;
pub mod datasets;
pub mod error;
pub mod explain;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod progressive;
pub mod spectral;

pub use artifact::EmbeddingArtifact;
pub use data::{DataMatrix, Thumbnails};
pub use error::{Error, Result};
pub use graph::{FuzzyGraph, Metric};
pub use optimizer::{CurveParams, OptimizerConfig, ProjectionMatrix};
pub use pipeline::{run_embedding, EmbedConfig, EmbeddingRun};
pub use progressive::{ScheduleMode, StageResult, StageSchedule};
pub use spectral::{EigenMode, Spectrum, SpectralSubspace};

//! Edge-sampled SGD over the projection matrix `P`, with `Y = U P`.

pub mod curve;
mod kernel;
pub mod loss;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use curve::{fit_ab, CurveParams};
pub use kernel::{optimize, optimize_observed, EpochReport, OptimizeStats, MAX_DIM};
pub use loss::{dense_loss, dense_loss_gradient, dense_loss_of_embedding, pair_gradients, q_similarity};

use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralSubspace;

/// `s x m'` coefficients mapping spectral modes to embedding axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix(Array2<f64>);

impl ProjectionMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(invalid("projection matrix must be non-empty"));
        }
        if let Some(((r, c), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: r, col: c });
        }
        Ok(ProjectionMatrix(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ProjectionMatrix(Array2::zeros((rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Realizes the embedding `U P`.
    pub fn embed(&self, u: &SpectralSubspace<'_>) -> Array2<f64> {
        u.basis.dot(&self.0)
    }

    /// The first `rows` rows, as used for prefix-truncated reconstructions.
    pub fn prefix(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.rows() {
            return Err(Error::SubspaceTooLarge { requested: rows, available: self.rows() });
        }
        Ok(ProjectionMatrix(self.0.slice(ndarray::s![..rows, ..]).to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub negative_samples: usize,
    pub gamma: f64,
    pub grad_clip: f64,
    pub eps: f64,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            epochs: 500,
            initial_lr: 1.0,
            negative_samples: 5,
            gamma: 5.0,
            grad_clip: 4.0,
            eps: 1e-3,
            seed: 0,
            deterministic: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_lr", self.initial_lr),
            ("gamma", self.gamma),
            ("grad_clip", self.grad_clip),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.negative_samples == 0 {
            return Err(invalid("negative_samples must be at least 1"));
        }
        Ok(())
    }
}

//! Condensed pairwise distances, exact or over a seeded pair sample.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::euclidean;

/// Largest point count whose pairs are all enumerated.
pub const EXACT_PAIR_LIMIT: usize = 3000;
/// Number of sampled pairs above [`EXACT_PAIR_LIMIT`].
pub const SAMPLED_PAIRS: usize = 2_000_000;

/// Which unordered pairs a [`DistanceSummary`] covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSet {
    /// All `i < j`, row-major condensed order.
    Exact { n: usize },
    /// Seeded sample of `i < j` pairs, with replacement.
    Sampled { n: usize, pairs: Vec<(u32, u32)> },
}

impl PairSet {
    pub fn exact(n: usize) -> Self {
        PairSet::Exact { n }
    }

    /// Exact up to [`EXACT_PAIR_LIMIT`] points, sampled above.
    pub fn for_points(n: usize, seed: u64) -> Self {
        if n <= EXACT_PAIR_LIMIT {
            PairSet::exact(n)
        } else {
            PairSet::sampled(n, SAMPLED_PAIRS, seed)
        }
    }

    pub fn sampled(n: usize, count: usize, seed: u64) -> Self {
        assert!(n >= 2, "need two points to sample a pair");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..count)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j) as u32, i.max(j) as u32)
            })
            .collect();
        PairSet::Sampled { n, pairs }
    }

    pub fn n(&self) -> usize {
        match self {
            PairSet::Exact { n } | PairSet::Sampled { n, .. } => *n,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PairSet::Exact { n } => n * n.saturating_sub(1) / 2,
            PairSet::Sampled { pairs, .. } => pairs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, PairSet::Sampled { .. })
    }

    /// Evaluates `f(i, j)` over every pair, in pair order.
    pub fn map<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        match self {
            PairSet::Exact { n } => {
                let rows: Vec<Vec<f64>> =
                    (0..*n).into_par_iter().map(|i| (i + 1..*n).map(|j| f(i, j)).collect()).collect();
                rows.concat()
            }
            PairSet::Sampled { pairs, .. } => pairs.par_iter().map(|&(i, j)| f(i as usize, j as usize)).collect(),
        }
    }
}

/// Pairwise distances over a [`PairSet`]; both spaces compared must share it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    pub values: Vec<f64>,
    pub sampled: bool,
}

impl DistanceSummary {
    pub fn euclidean(points: ArrayView2<'_, f64>, pairs: &PairSet) -> Result<Self> {
        if points.nrows() != pairs.n() {
            return Err(Error::ShapeMismatch(format!("{} points for a pair set over {}", points.nrows(), pairs.n())));
        }
        let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
        Ok(DistanceSummary { values: pairs.map(|i, j| euclidean(&rows[i], &rows[j])), sampled: pairs.is_sampled() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

//! End-to-end run: graph, spectrum, progressive stages.

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::graph::{build_fuzzy_graph, normalized_laplacian, FuzzyGraph, Metric};
use crate::optimizer::{fit_ab, CurveParams};
use crate::progressive::{
    make_schedule, run_full_spectrum, run_progressive, ProgressiveConfig, ScheduleMode, StageProgress, StageResult,
    StageSchedule,
};
use crate::spectral::{eigendecompose, EigenMode, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub k: usize,
    pub metric: Metric,
    pub eigen: EigenMode,
    pub min_dist: f64,
    pub spread: f64,
    pub progressive: ProgressiveConfig,
    pub stages: usize,
    pub schedule: ScheduleMode,
    /// Largest subspace; `None` means all `n - 1` non-trivial modes.
    pub max_modes: Option<usize>,
    pub full_spectrum: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            k: 15,
            metric: Metric::Euclidean,
            eigen: EigenMode::Auto,
            min_dist: 0.1,
            spread: 1.0,
            progressive: ProgressiveConfig::default(),
            stages: 10,
            schedule: ScheduleMode::Equal,
            max_modes: None,
            full_spectrum: false,
        }
    }
}

/// Everything produced by [`run_embedding`].
#[derive(Debug, Clone)]
pub struct EmbeddingRun {
    pub graph: FuzzyGraph,
    pub spectrum: Spectrum,
    pub curve: CurveParams,
    pub schedule: StageSchedule,
    pub stages: Vec<StageResult>,
    /// Non-progressive comparison run, when requested.
    pub full: Option<StageResult>,
}

impl EmbeddingRun {
    /// The final progressive stage.
    pub fn last(&self) -> &StageResult {
        self.stages.last().expect("at least one stage")
    }
}

pub fn run_embedding(data: &DataMatrix, cfg: &EmbedConfig, mut progress: impl FnMut(&StageProgress)) -> Result<EmbeddingRun> {
    let n = data.n();
    let s_full = cfg.max_modes.unwrap_or(n - 1);
    if s_full == 0 || s_full > n - 1 {
        return Err(invalid(format!("max_modes must be in 1..={}, got {s_full}", n - 1)));
    }
    cfg.progressive.optimizer.validate()?;
    let schedule = make_schedule(s_full, cfg.stages, cfg.schedule, cfg.progressive.optimizer.epochs)?;
    let curve = fit_ab(cfg.min_dist, cfg.spread)?;
    let graph = build_fuzzy_graph(data, cfg.k, cfg.metric)?;
    let laplacian = normalized_laplacian(&graph)?;
    let spectrum = eigendecompose(&laplacian, s_full, cfg.eigen)?;
    let stages = run_progressive(&spectrum, &graph, &curve, &cfg.progressive, &schedule, &mut progress)?;
    let full = if cfg.full_spectrum {
        Some(run_full_spectrum(&spectrum, &graph, &curve, &cfg.progressive, &mut progress)?)
    } else {
        None
    };
    Ok(EmbeddingRun { graph, spectrum, curve, schedule, stages, full })
}

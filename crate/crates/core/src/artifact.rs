//! The serialized multi-stage run read by the CLI, metrics and viewer.
//!
//! Matrices are stored row-major as flat arrays. Floats are written in the
//! shortest form that parses back to the same value.

use std::path::Path;

use indexmap::IndexMap;
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{glyph_data, spectral_response, GlyphSet, SpectralResponse, DEFAULT_GLYPH_MODES};
use crate::graph::Metric;
use crate::io::write_atomic;
use crate::metrics::{prefix_reconstruction_curve, MetricReport};
use crate::optimizer::{CurveParams, ProjectionMatrix};
use crate::pipeline::{EmbedConfig, EmbeddingRun};
use crate::progressive::{ScheduleMode, StageResult};
use crate::spectral::{subspace, EigenMode};

pub const FORMAT_VERSION: u32 = 1;
/// Artifacts above this size trigger a warning.
pub const SIZE_WARNING_BYTES: usize = 200 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub mode: ScheduleMode,
    pub sizes: Vec<usize>,
    pub epochs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    /// Embedding dimension.
    pub dim: usize,
    pub k: usize,
    pub seed: u64,
    pub metric: Metric,
    pub eigen: EigenMode,
    pub curve: CurveParams,
    pub gamma: f64,
    pub negative_samples: usize,
    pub initial_lr: f64,
    pub total_epochs: usize,
    pub deterministic: bool,
    pub schedule: ScheduleMeta,
    pub timestamps: Option<Timestamps>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactStage {
    pub s: usize,
    pub epochs_used: usize,
    #[serde(default)]
    pub full: bool,
    /// Row-major `s x dim`.
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    /// Row-major `n x dim`.
    #[serde(rename = "Y")]
    pub y: Vec<f64>,
    pub interactions: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl ArtifactStage {
    fn from_result(r: &StageResult, with_time: bool) -> Self {
        ArtifactStage {
            s: r.s,
            epochs_used: r.epochs_used,
            full: r.full,
            p: r.p.values().iter().copied().collect(),
            y: r.y.iter().copied().collect(),
            interactions: r.interactions,
            wall_time: with_time.then_some(r.wall_time),
        }
    }

    pub fn p_matrix(&self, dim: usize) -> Result<ProjectionMatrix> {
        let p = Array2::from_shape_vec((self.s, dim), self.p.clone())
            .map_err(|e| Error::ShapeMismatch(format!("stage s={}: P: {e}", self.s)))?;
        ProjectionMatrix::new(p)
    }

    pub fn y_matrix(&self, n: usize, dim: usize) -> Result<Array2<f64>> {
        Array2::from_shape_vec((n, dim), self.y.clone())
            .map_err(|e| Error::ShapeMismatch(format!("stage s={}: Y: {e}", self.s)))
    }

    /// `"full"` for the comparison run, otherwise the subspace size.
    pub fn key(&self) -> String {
        if self.full {
            "full".into()
        } else {
            self.s.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationHead {
    #[serde(rename = "K")]
    pub k: usize,
    /// Row-major `n x K` leading modes.
    #[serde(rename = "U_head")]
    pub u_head: Vec<f64>,
    /// One entry per stage, in stage order.
    pub responses: Vec<SpectralResponse>,
    /// Keyed like the stages; see [`GlyphStages`].
    pub glyphs: IndexMap<String, GlyphSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingArtifact {
    pub meta: ArtifactMeta,
    pub eigenvalues: Vec<f64>,
    pub stages: Vec<ArtifactStage>,
    pub explanation_head: ExplanationHead,
    /// Error of truncating the final stage's projection to its first `S`
    /// rows, for `S = 1..=s_final`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_error: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

/// Which stages carry per-point glyphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlyphStages {
    None,
    #[default]
    Final,
    All,
}

impl std::str::FromStr for GlyphStages {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(GlyphStages::None),
            "final" => Ok(GlyphStages::Final),
            "all" => Ok(GlyphStages::All),
            other => Err(format!("unknown glyph stage selection '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactOptions {
    pub glyph_k: usize,
    pub glyph_stages: GlyphStages,
    pub timestamps: Option<Timestamps>,
}

impl Default for ArtifactOptions {
    fn default() -> Self {
        ArtifactOptions { glyph_k: DEFAULT_GLYPH_MODES, glyph_stages: GlyphStages::Final, timestamps: None }
    }
}

impl EmbeddingArtifact {
    pub fn from_run(run: &EmbeddingRun, m: usize, labels: Option<&[i64]>, cfg: &EmbedConfig, opts: &ArtifactOptions) -> Result<Self> {
        let n = run.spectrum.n();
        let ocfg = &cfg.progressive.optimizer;
        let with_time = opts.timestamps.is_some();
        let all: Vec<&StageResult> = run.stages.iter().chain(run.full.as_ref()).collect();
        if opts.glyph_k == 0 {
            return Err(crate::error::invalid("glyph modes must be at least 1"));
        }
        let k = opts.glyph_k.min(run.spectrum.n_modes());
        let head = subspace(&run.spectrum, k)?;
        let mut responses = Vec::with_capacity(all.len());
        let mut glyphs = IndexMap::new();
        let ids: Vec<usize> = (0..n).collect();
        for (i, st) in all.iter().enumerate() {
            responses.push(spectral_response(&st.p, &run.spectrum.eigenvalues)?);
            let wanted = match opts.glyph_stages {
                GlyphStages::None => false,
                GlyphStages::Final => i + 1 == run.stages.len(),
                GlyphStages::All => true,
            };
            if wanted {
                let u = subspace(&run.spectrum, st.s)?;
                let key = if st.full { "full".to_string() } else { st.s.to_string() };
                glyphs.insert(key, glyph_data(&u, &st.p, &ids, k.min(st.s))?);
            }
        }
        let truncation_error = match run.stages.last() {
            Some(last) => {
                let u = subspace(&run.spectrum, last.s)?;
                prefix_reconstruction_curve(u.basis, last.p.values().view()).ok()
            }
            None => None,
        };
        Ok(EmbeddingArtifact {
            meta: ArtifactMeta {
                format_version: FORMAT_VERSION,
                n,
                m,
                dim: cfg.progressive.dim,
                k: cfg.k,
                seed: ocfg.seed,
                metric: cfg.metric,
                eigen: cfg.eigen,
                curve: run.curve,
                gamma: ocfg.gamma,
                negative_samples: ocfg.negative_samples,
                initial_lr: ocfg.initial_lr,
                total_epochs: ocfg.epochs,
                deterministic: ocfg.deterministic,
                schedule: ScheduleMeta {
                    mode: cfg.schedule,
                    sizes: run.schedule.sizes.clone(),
                    epochs: run.schedule.epochs_per_stage.clone(),
                },
                timestamps: opts.timestamps,
            },
            eigenvalues: run.spectrum.eigenvalues.clone(),
            stages: all.iter().map(|st| ArtifactStage::from_result(st, with_time)).collect(),
            explanation_head: ExplanationHead {
                k,
                u_head: head.basis.iter().copied().collect(),
                responses,
                glyphs,
            },
            truncation_error,
            labels: labels.map(<[i64]>::to_vec),
            metrics: None,
        })
    }

    /// Checks shapes and stage ordering.
    pub fn validate(&self) -> Result<()> {
        let meta = &self.meta;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion { found: meta.format_version, expected: FORMAT_VERSION });
        }
        let progressive: Vec<usize> = self.stages.iter().filter(|s| !s.full).map(|s| s.s).collect();
        if progressive.is_empty() || progressive.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ShapeMismatch("stage sizes must be non-empty and strictly increasing".into()));
        }
        for st in &self.stages {
            if st.p.len() != st.s * meta.dim || st.y.len() != meta.n * meta.dim {
                return Err(Error::ShapeMismatch(format!("stage s={} has inconsistent P or Y length", st.s)));
            }
            if st.s > self.eigenvalues.len() {
                return Err(Error::ShapeMismatch(format!("stage s={} exceeds {} eigenvalues", st.s, self.eigenvalues.len())));
            }
        }
        let head = &self.explanation_head;
        if head.u_head.len() != meta.n * head.k || head.responses.len() != self.stages.len() {
            return Err(Error::ShapeMismatch("explanation head does not match the stages".into()));
        }
        if let Some(curve) = &self.truncation_error {
            if Some(&curve.len()) != progressive.last() {
                return Err(Error::ShapeMismatch("truncation curve does not match the final stage".into()));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != meta.n {
                return Err(Error::ShapeMismatch(format!("{} labels for {} points", l.len(), meta.n)));
            }
        }
        Ok(())
    }

    /// The leading `K` modes as an `n x K` matrix.
    pub fn u_head(&self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.meta.n, self.explanation_head.k), self.explanation_head.u_head.clone())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }

    /// Contribution of the first `min(s, K)` modes to a stage embedding.
    pub fn head_embedding(&self, stage: usize) -> Result<Array2<f64>> {
        let st = &self.stages[stage];
        let p = st.p_matrix(self.meta.dim)?;
        let k = st.s.min(self.explanation_head.k);
        let u = self.u_head()?;
        Ok(u.slice(s![.., ..k]).dot(&p.values().slice(s![..k, ..])))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.pointer("/meta/format_version").and_then(serde_json::Value::as_u64);
        match version {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::UnsupportedVersion { found: u32::try_from(v).unwrap_or(u32::MAX), expected: FORMAT_VERSION })
            }
            None => return Err(Error::ShapeMismatch("artifact has no meta.format_version".into())),
        }
        let artifact: EmbeddingArtifact = serde_json::from_value(value)?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        if text.len() > SIZE_WARNING_BYTES {
            log::warn!("artifact {} is {} MB", path.display(), text.len() / (1024 * 1024));
        }
        write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Format { path: path.to_path_buf(), reason: j.to_string() },
            other => other,
        })
    }
}

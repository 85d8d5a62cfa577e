//! Per-stage metric tables, serialized as JSON (keyed by stage) and CSV.

use std::io::Write;

use indexmap::IndexMap;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::correlation::{spearman_rho, stress_pair};
use super::distance::{DistanceSummary, PairSet};
use super::geodesic::GeodesicReference;
use super::rank::RankReference;
use super::recon::reconstruction_error;
use crate::error::{Error, Result};

/// Column order of [`MetricReport::write_csv`].
pub const CSV_HEADER: [&str; 12] = [
    "stage",
    "s",
    "full",
    "recon_error",
    "continuity",
    "mrre",
    "spearman_rho",
    "nonmetric_stress",
    "scale_normalized_stress",
    "demap",
    "demap_coverage",
    "truncation_error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricParams {
    pub k_metric: usize,
    pub demap_k: usize,
    pub pair_seed: u64,
    /// Orthogonally align each stage onto the reference before `recon_error`.
    pub align: bool,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { k_metric: 15, demap_k: 15, pair_seed: 0, align: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub k_metric: usize,
    pub demap_k: usize,
    pub sample_pairs: usize,
    pub pairs_sampled: bool,
    pub pair_seed: u64,
    pub aligned: bool,
    /// Key of the stage used as the reconstruction reference.
    pub reference: String,
}

/// Undefined values (constant inputs, fragmented graphs) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub s: usize,
    pub full: bool,
    pub recon_error: Option<f64>,
    pub continuity: f64,
    pub mrre: f64,
    pub spearman_rho: Option<f64>,
    pub nonmetric_stress: Option<f64>,
    pub scale_normalized_stress: Option<f64>,
    pub demap: Option<f64>,
    pub demap_coverage: Option<f64>,
    /// Error of the final projection truncated to this stage's `s` modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub parameters: ReportParameters,
    pub stages: IndexMap<String, StageMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// One embedding to score.
#[derive(Debug, Clone, Copy)]
pub struct StageInput<'a> {
    pub s: usize,
    pub full: bool,
    pub y: ArrayView2<'a, f64>,
}

impl StageInput<'_> {
    pub fn key(&self) -> String {
        if self.full {
            "full".to_string()
        } else {
            self.s.to_string()
        }
    }
}

/// Data-space quantities computed once and reused for every stage.
pub struct MetricContext {
    params: MetricParams,
    ranks: RankReference,
    pairs: PairSet,
    dx: DistanceSummary,
    geodesic: std::result::Result<GeodesicReference, String>,
}

fn undefined<T>(r: Result<T>, notes: &mut Vec<String>, what: &str) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::ConstantInput | Error::DegenerateDistances(_) | Error::ZeroReference)) => {
            notes.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

impl MetricContext {
    pub fn new(x: ArrayView2<'_, f64>, params: MetricParams) -> Result<Self> {
        let ranks = RankReference::new(x, params.k_metric)?;
        let pairs = PairSet::for_points(x.nrows(), params.pair_seed);
        let dx = DistanceSummary::euclidean(x, &pairs)?;
        let geodesic = match GeodesicReference::new(x, params.demap_k, params.pair_seed) {
            Ok(g) => Ok(g),
            Err(e @ Error::GraphTooFragmented { .. }) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        Ok(MetricContext { params, ranks, pairs, dx, geodesic })
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    /// Scores every stage; `reference` indexes the stage used for `recon_error`.
    pub fn evaluate(&self, stages: &[StageInput<'_>], reference: usize) -> Result<MetricReport> {
        let refstage = stages
            .get(reference)
            .ok_or_else(|| Error::ShapeMismatch(format!("reference stage {reference} of {}", stages.len())))?;
        let mut notes = Vec::new();
        if let Err(reason) = &self.geodesic {
            notes.push(format!("demap: {reason}"));
        }
        let mut out = IndexMap::new();
        for st in stages {
            let key = st.key();
            let recon = undefined(
                reconstruction_error(refstage.y, st.y, self.params.align),
                &mut notes,
                &format!("recon_error[{key}]"),
            )?;
            let (continuity, mrre) = self.ranks.score(st.y)?;
            let dy = DistanceSummary::euclidean(st.y, &self.pairs)?;
            let rho = undefined(spearman_rho(&self.dx.values, &dy.values), &mut notes, &format!("spearman[{key}]"))?;
            let stress = undefined(stress_pair(&self.dx.values, &dy.values), &mut notes, &format!("stress[{key}]"))?;
            let demap = match &self.geodesic {
                Ok(g) => undefined(g.score(st.y), &mut notes, &format!("demap[{key}]"))?,
                Err(_) => None,
            };
            out.insert(
                key,
                StageMetrics {
                    s: st.s,
                    full: st.full,
                    recon_error: recon,
                    continuity,
                    mrre,
                    spearman_rho: rho,
                    nonmetric_stress: stress.map(|v| v.0),
                    scale_normalized_stress: stress.map(|v| v.1),
                    demap: demap.map(|d| d.rho),
                    demap_coverage: demap.map(|d| d.coverage),
                    truncation_error: None,
                },
            );
        }
        Ok(MetricReport {
            parameters: ReportParameters {
                k_metric: self.params.k_metric,
                demap_k: self.params.demap_k,
                sample_pairs: self.pairs.len(),
                pairs_sampled: self.pairs.is_sampled(),
                pair_seed: self.params.pair_seed,
                aligned: self.params.align,
                reference: refstage.key(),
            },
            stages: out,
            notes,
        })
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricReport {
    /// Fills `truncation_error` of progressive stages from a curve indexed by `s - 1`.
    pub fn attach_truncation(&mut self, curve: &[f64]) {
        for m in self.stages.values_mut() {
            m.truncation_error = if m.full { None } else { m.s.checked_sub(1).and_then(|i| curve.get(i)).copied() };
        }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(io)?;
        for (key, m) in &self.stages {
            w.write_record([
                key.clone(),
                m.s.to_string(),
                m.full.to_string(),
                cell(m.recon_error),
                m.continuity.to_string(),
                m.mrre.to_string(),
                cell(m.spearman_rho),
                cell(m.nonmetric_stress),
                cell(m.scale_normalized_stress),
                cell(m.demap),
                cell(m.demap_coverage),
                cell(m.truncation_error),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

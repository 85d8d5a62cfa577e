//! Coarse-to-fine optimization over nested spectral subspaces.

use std::fmt;
use std::time::Instant;

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::FuzzyGraph;
use crate::optimizer::{optimize_observed, CurveParams, EpochReport, OptimizerConfig, ProjectionMatrix};
use crate::spectral::{subspace, Spectrum};

/// Extent of the first-stage embedding along its largest coordinate.
pub const INIT_EXTENT: f64 = 10.0;
pub const INIT_NOISE: f64 = 1e-4;
const AUGMENT_RELATIVE: f64 = 1e-4;
const AUGMENT_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    #[default]
    Equal,
    Log,
}

impl std::str::FromStr for ScheduleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "equal" => Ok(ScheduleMode::Equal),
            "log" => Ok(ScheduleMode::Log),
            other => Err(format!("unknown schedule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub sizes: Vec<usize>,
    pub epochs_per_stage: Vec<usize>,
}

impl StageSchedule {
    pub fn stages(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_epochs(&self) -> usize {
        self.epochs_per_stage.iter().sum()
    }

    pub fn last_size(&self) -> usize {
        *self.sizes.last().expect("schedule is never empty")
    }
}

pub fn make_schedule(s_full: usize, t: usize, mode: ScheduleMode, total_epochs: usize) -> Result<StageSchedule> {
    if t == 0 || s_full == 0 {
        return Err(Error::DegenerateSchedule(format!("need t >= 1 and s_full >= 1, got t={t}, s_full={s_full}")));
    }
    if t > s_full {
        return Err(Error::DegenerateSchedule(format!("{t} stages cannot be distinct within {s_full} modes")));
    }
    if total_epochs < t {
        return Err(Error::DegenerateSchedule(format!("{total_epochs} epochs cannot cover {t} stages")));
    }
    let mut sizes = match mode {
        ScheduleMode::Equal => (1..=t).map(|r| (r as f64 * s_full as f64 / t as f64).round() as usize).collect(),
        ScheduleMode::Log => log_sizes(s_full, t),
    };
    sizes.dedup();
    if let Some(last) = sizes.last_mut() {
        *last = s_full;
    }
    if sizes.len() != t || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateSchedule(format!("requested {t} stages, {} remain distinct", sizes.len())));
    }
    let per = total_epochs / t;
    let mut epochs_per_stage = vec![per; t];
    epochs_per_stage[t - 1] += total_epochs - per * t;
    Ok(StageSchedule { sizes, epochs_per_stage })
}

/// Geometric growth from 1 to `s_full`, re-aimed after every step so rounding
/// collisions at the small end bump by one instead of merging stages.
fn log_sizes(s_full: usize, t: usize) -> Vec<usize> {
    let mut sizes = vec![1usize];
    for r in 1..t {
        let prev = sizes[r - 1];
        let remaining = (t - r) as f64;
        let ratio = (s_full as f64 / prev as f64).powf(1.0 / remaining);
        let next = ((prev as f64 * ratio).round() as usize).max(prev + 1);
        sizes.push(next.min(s_full - (t - 1 - r)));
    }
    sizes
}

/// Grows `p_prev` to `s_new` rows; new rows uniform in `[-scale, scale]`.
/// `scale = None` uses `1e-4 * max(max|P|, 1e-4)`.
pub fn augment(p_prev: &ProjectionMatrix, s_new: usize, rng: &mut impl Rng, scale: Option<f64>) -> Result<ProjectionMatrix> {
    let old = p_prev.rows();
    if s_new <= old {
        return Err(invalid(format!("augment must add rows: {s_new} <= {old}")));
    }
    let scale = scale.unwrap_or_else(|| {
        let maxabs = p_prev.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        AUGMENT_RELATIVE * maxabs.max(AUGMENT_FLOOR)
    });
    let m = p_prev.cols();
    let mut p = Array2::zeros((s_new, m));
    p.slice_mut(s![..old, ..]).assign(p_prev.values());
    if scale > 0.0 {
        for v in p.slice_mut(s![old.., ..]).iter_mut() {
            *v = rng.random_range(-scale..=scale);
        }
    }
    ProjectionMatrix::new(p)
}

/// `c [I; 0]` plus uniform noise in `[-noise, noise]`, where `c` gives the
/// noiseless embedding a largest coordinate of [`INIT_EXTENT`].
pub fn init_first_stage(spec: &Spectrum, s: usize, dim: usize, rng: &mut impl Rng, noise: f64) -> Result<ProjectionMatrix> {
    if dim == 0 {
        return Err(invalid("embedding dimension must be at least 1"));
    }
    let u = subspace(spec, s)?;
    let diag = dim.min(s);
    let maxabs = u.basis.slice(s![.., ..diag]).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if maxabs == 0.0 {
        return Err(invalid("leading modes are identically zero"));
    }
    let c = INIT_EXTENT / maxabs;
    let mut p = Array2::zeros((s, dim));
    for k in 0..diag {
        p[[k, k]] = c;
    }
    if noise > 0.0 {
        for v in p.iter_mut() {
            *v += rng.random_range(-noise..=noise);
        }
    }
    ProjectionMatrix::new(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub s: usize,
    pub p: ProjectionMatrix,
    pub y: Array2<f64>,
    pub epochs_used: usize,
    pub wall_time: f64,
    pub interactions: u64,
    /// Set for the non-progressive full-spectrum comparison run.
    pub full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveConfig {
    pub optimizer: OptimizerConfig,
    pub dim: usize,
    pub init_noise: f64,
    /// `None` scales augment noise with `P`; `Some(0.0)` suppresses it.
    pub augment_scale: Option<f64>,
}

impl Default for ProgressiveConfig {
    fn default() -> Self {
        ProgressiveConfig { optimizer: OptimizerConfig::default(), dim: 2, init_noise: INIT_NOISE, augment_scale: None }
    }
}

/// Per-epoch progress tagged with its stage.
#[derive(Debug, Clone, Copy)]
pub struct StageProgress {
    pub stage: usize,
    pub stages: usize,
    pub s: usize,
    pub report: EpochReport,
}

impl fmt::Display for StageProgress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage {}/{} s={} epoch {}/{} loss={:.6}",
            self.stage, self.stages, self.s, self.report.epoch, self.report.epochs, self.report.mean_loss
        )
    }
}

fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs every stage of `schedule` in order, warm-starting each from the last.
pub fn run_progressive(
    spec: &Spectrum,
    g: &FuzzyGraph,
    curve: &CurveParams,
    cfg: &ProgressiveConfig,
    schedule: &StageSchedule,
    mut progress: impl FnMut(&StageProgress),
) -> Result<Vec<StageResult>> {
    if schedule.stages() == 0 || schedule.sizes.len() != schedule.epochs_per_stage.len() {
        return Err(Error::DegenerateSchedule("sizes and epochs differ in length".into()));
    }
    if schedule.last_size() > spec.n_modes() {
        return Err(Error::SubspaceTooLarge { requested: schedule.last_size(), available: spec.n_modes() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.optimizer.seed);
    rng.set_stream(1);
    let stages = schedule.stages();
    let mut results: Vec<StageResult> = Vec::with_capacity(stages);
    for (r, (&s, &epochs)) in schedule.sizes.iter().zip(&schedule.epochs_per_stage).enumerate() {
        let wrap = |e: Error| Error::Stage { stage: r + 1, source: Box::new(e) };
        let start = Instant::now();
        let u = subspace(spec, s).map_err(wrap)?;
        let p0 = match results.last() {
            None => init_first_stage(spec, s, cfg.dim, &mut rng, cfg.init_noise),
            Some(prev) => augment(&prev.p, s, &mut rng, cfg.augment_scale),
        }
        .map_err(wrap)?;
        let ocfg = OptimizerConfig { epochs, seed: stage_seed(cfg.optimizer.seed, r), ..cfg.optimizer };
        let (p, stats) = optimize_observed(&u, g, &p0, &ocfg, curve, |report| {
            progress(&StageProgress { stage: r + 1, stages, s, report: *report })
        })
        .map_err(wrap)?;
        let y = p.embed(&u);
        results.push(StageResult {
            s,
            p,
            y,
            epochs_used: epochs,
            wall_time: start.elapsed().as_secs_f64(),
            interactions: stats.interactions(),
            full: false,
        });
    }
    Ok(results)
}

/// Non-progressive optimization in the whole available spectrum.
pub fn run_full_spectrum(
    spec: &Spectrum,
    g: &FuzzyGraph,
    curve: &CurveParams,
    cfg: &ProgressiveConfig,
    progress: impl FnMut(&StageProgress),
) -> Result<StageResult> {
    let schedule = make_schedule(spec.n_modes(), 1, ScheduleMode::Equal, cfg.optimizer.epochs.max(1))?;
    let schedule = StageSchedule { epochs_per_stage: vec![cfg.optimizer.epochs], ..schedule };
    let mut out = run_progressive(spec, g, curve, cfg, &schedule, progress)?;
    let mut stage = out.pop().expect("one stage");
    stage.full = true;
    Ok(stage)
}

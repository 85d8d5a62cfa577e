//! The sampled update loop. `P` is held transposed (`m' x s`) so each
//! embedding coordinate of a point is one contiguous dot product.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::curve::CurveParams;
use super::loss::{attractive_coef, repulsive_coef};
use super::{OptimizerConfig, ProjectionMatrix};
use crate::error::{invalid, Error, Result};
use crate::graph::FuzzyGraph;
use crate::spectral::SpectralSubspace;

const LOG_FLOOR: f64 = 1e-12;
const RELAXED_CHUNK: usize = 2048;
/// Largest supported embedding dimension `m'`.
pub const MAX_DIM: usize = 8;

/// Progress emitted after every epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    pub epochs: usize,
    /// Mean sampled loss over this epoch's interactions.
    pub mean_loss: f64,
    pub interactions: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizeStats {
    pub attractive_updates: u64,
    pub negative_updates: u64,
    pub per_epoch_interactions: Vec<u64>,
    pub final_mean_loss: f64,
}

impl OptimizeStats {
    pub fn interactions(&self) -> u64 {
        self.attractive_updates + self.negative_updates
    }
}

pub fn optimize(
    u: &SpectralSubspace<'_>,
    g: &FuzzyGraph,
    p0: &ProjectionMatrix,
    cfg: &OptimizerConfig,
    c: &CurveParams,
) -> Result<ProjectionMatrix> {
    optimize_observed(u, g, p0, cfg, c, |_| {}).map(|(p, _)| p)
}

/// [`optimize`] with a per-epoch callback and work counters.
pub fn optimize_observed(
    u: &SpectralSubspace<'_>,
    g: &FuzzyGraph,
    p0: &ProjectionMatrix,
    cfg: &OptimizerConfig,
    c: &CurveParams,
    mut observe: impl FnMut(&EpochReport),
) -> Result<(ProjectionMatrix, OptimizeStats)> {
    cfg.validate()?;
    if p0.rows() != u.s() {
        return Err(Error::ShapeMismatch(format!("P0 has {} rows, subspace has {} modes", p0.rows(), u.s())));
    }
    if g.n() != u.n() {
        return Err(Error::ShapeMismatch(format!("graph has {} points, subspace {}", g.n(), u.n())));
    }
    if p0.cols() > MAX_DIM {
        return Err(invalid(format!("embedding dimension {} exceeds {MAX_DIM}", p0.cols())));
    }
    let mut stats = OptimizeStats::default();
    if cfg.epochs == 0 || g.edges().is_empty() {
        return Ok((p0.clone(), stats));
    }

    let ctx = Context::new(u, g, cfg, c, p0.cols());
    let mut pt = transpose(p0);
    let schedule = Schedule::new(g, cfg.epochs);
    let mut next = vec![0u64; schedule.samples.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let atomics: Vec<AtomicU64> = if cfg.deterministic {
        Vec::new()
    } else {
        pt.iter().map(|v| AtomicU64::new(v.to_bits())).collect()
    };

    for epoch in 0..cfg.epochs {
        let lr = cfg.initial_lr * (1.0 - epoch as f64 / cfg.epochs as f64);
        let active = schedule.due(epoch, &mut next);
        let tally = if cfg.deterministic {
            let mut store = SliceStore { s: ctx.s, data: &mut pt };
            let mut tally = Tally::default();
            for &idx in &active {
                ctx.process(&mut store, schedule.samples[idx], lr, &mut rng, &mut tally)
                    .map_err(|_| Error::NonFiniteUpdate { epoch, edge: idx / 2 })?;
            }
            tally
        } else {
            relaxed_epoch(&ctx, &atomics, &schedule, &active, lr, cfg.seed, epoch)?
        };
        stats.attractive_updates += tally.attractive;
        stats.negative_updates += tally.negative;
        let interactions = tally.attractive + tally.negative;
        stats.per_epoch_interactions.push(interactions);
        let mean_loss = if interactions > 0 { tally.loss / interactions as f64 } else { 0.0 };
        stats.final_mean_loss = mean_loss;
        observe(&EpochReport { epoch: epoch + 1, epochs: cfg.epochs, mean_loss, interactions });
    }

    if !cfg.deterministic {
        for (dst, src) in pt.iter_mut().zip(&atomics) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
    }
    let (s, m) = (p0.rows(), p0.cols());
    let p = ndarray::Array2::from_shape_fn((s, m), |(r, col)| pt[col * s + r]);
    Ok((ProjectionMatrix::new(p)?, stats))
}

fn transpose(p: &ProjectionMatrix) -> Vec<f64> {
    let v = p.values();
    let mut out = Vec::with_capacity(v.len());
    for col in v.columns() {
        out.extend(col.iter().copied());
    }
    out
}

fn relaxed_epoch(
    ctx: &Context,
    atomics: &[AtomicU64],
    schedule: &Schedule,
    active: &[usize],
    lr: f64,
    seed: u64,
    epoch: usize,
) -> Result<Tally> {
    let chunks: Vec<_> = active.chunks(RELAXED_CHUNK).enumerate().collect();
    let partial: Vec<std::result::Result<Tally, usize>> = chunks
        .into_par_iter()
        .map(|(ci, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((epoch as u64) << 24) ^ ci as u64);
            let mut store = AtomicStore { s: ctx.s, data: atomics };
            let mut tally = Tally::default();
            for &idx in chunk {
                ctx.process(&mut store, schedule.samples[idx], lr, &mut rng, &mut tally).map_err(|_| idx)?;
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for part in partial {
        let t = part.map_err(|idx| Error::NonFiniteUpdate { epoch, edge: idx / 2 })?;
        total.attractive += t.attractive;
        total.negative += t.negative;
        total.loss += t.loss;
    }
    Ok(total)
}

#[derive(Debug, Default)]
struct Tally {
    attractive: u64,
    negative: u64,
    loss: f64,
}

/// Directed sample `head -> tail`, processed `count` times over the run.
#[derive(Debug, Clone, Copy)]
struct Sample {
    head: usize,
    tail: usize,
    count: u64,
}

struct Schedule {
    samples: Vec<Sample>,
    epochs: u64,
}

impl Schedule {
    fn new(g: &FuzzyGraph, epochs: usize) -> Self {
        let wmax = g.max_weight();
        let e = epochs as u64;
        let mut samples = Vec::with_capacity(2 * g.edges().len());
        for edge in g.edges() {
            let count = ((epochs as f64 * edge.w / wmax).ceil() as u64).clamp(1, e);
            samples.push(Sample { head: edge.i, tail: edge.j, count });
            samples.push(Sample { head: edge.j, tail: edge.i, count });
        }
        Schedule { samples, epochs: e }
    }

    /// Sample `k` of a `count`-times sample falls in epoch `floor(k E / count)`.
    fn due(&self, epoch: usize, next: &mut [u64]) -> Vec<usize> {
        let epoch = epoch as u64;
        let mut out = Vec::new();
        for (idx, (s, k)) in self.samples.iter().zip(next.iter_mut()).enumerate() {
            if *k < s.count && *k * self.epochs / s.count == epoch {
                *k += 1;
                out.push(idx);
            }
        }
        out
    }
}

trait Store {
    fn dot(&self, col: usize, u: &[f64]) -> f64;
    /// `P_t[col] += alpha * u`.
    fn axpy(&mut self, col: usize, alpha: f64, u: &[f64]);
}

struct SliceStore<'a> {
    s: usize,
    data: &'a mut [f64],
}

impl Store for SliceStore<'_> {
    #[inline]
    fn dot(&self, col: usize, u: &[f64]) -> f64 {
        dot(&self.data[col * self.s..(col + 1) * self.s], u)
    }

    #[inline]
    fn axpy(&mut self, col: usize, alpha: f64, u: &[f64]) {
        let row = &mut self.data[col * self.s..(col + 1) * self.s];
        for (p, x) in row.iter_mut().zip(u) {
            *p += alpha * x;
        }
    }
}

/// Lock-free shared store; concurrent updates may overwrite each other.
struct AtomicStore<'a> {
    s: usize,
    data: &'a [AtomicU64],
}

impl Store for AtomicStore<'_> {
    fn dot(&self, col: usize, u: &[f64]) -> f64 {
        let row = &self.data[col * self.s..(col + 1) * self.s];
        row.iter().zip(u).map(|(p, x)| f64::from_bits(p.load(Ordering::Relaxed)) * x).sum()
    }

    fn axpy(&mut self, col: usize, alpha: f64, u: &[f64]) {
        let row = &self.data[col * self.s..(col + 1) * self.s];
        for (p, x) in row.iter().zip(u) {
            let v = f64::from_bits(p.load(Ordering::Relaxed)) + alpha * x;
            p.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

struct Context {
    n: usize,
    s: usize,
    m: usize,
    /// Row-major copy of the subspace basis.
    rows: Vec<f64>,
    row_norm2: Vec<f64>,
    a: f64,
    b: f64,
    clip: f64,
    eps: f64,
    neg: usize,
    neg_weight: f64,
}

struct NonFinite;

impl Context {
    fn new(u: &SpectralSubspace<'_>, g: &FuzzyGraph, cfg: &OptimizerConfig, c: &CurveParams, m: usize) -> Self {
        let (n, s) = (g.n(), u.s());
        let mut rows = Vec::with_capacity(n * s);
        for r in u.basis.rows() {
            rows.extend(r.iter().copied());
        }
        let row_norm2 = rows.chunks_exact(s).map(|r| dot(r, r)).collect();
        Context {
            n,
            s,
            m,
            rows,
            row_norm2,
            a: c.a,
            b: c.b,
            clip: cfg.grad_clip,
            eps: cfg.eps,
            neg: cfg.negative_samples,
            neg_weight: cfg.gamma / cfg.negative_samples as f64,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.s..(i + 1) * self.s]
    }

    fn process<S: Store>(
        &self,
        store: &mut S,
        sample: Sample,
        lr: f64,
        rng: &mut ChaCha8Rng,
        tally: &mut Tally,
    ) -> std::result::Result<(), NonFinite> {
        let m = self.m;
        let (i, j) = (sample.head, sample.tail);
        let (ui, uj) = (self.row(i), self.row(j));
        let mut yi = [0.0; MAX_DIM];
        let mut yj = [0.0; MAX_DIM];
        let mut grad = [0.0; MAX_DIM];
        let mut d2 = 0.0;
        for col in 0..m {
            yi[col] = store.dot(col, ui);
            yj[col] = store.dot(col, uj);
            d2 += (yi[col] - yj[col]).powi(2);
        }
        let ka = attractive_coef(d2, self.a, self.b);
        for col in 0..m {
            grad[col] = (ka * (yi[col] - yj[col])).clamp(-self.clip, self.clip);
            if !grad[col].is_finite() {
                return Err(NonFinite);
            }
        }
        let q = 1.0 / (1.0 + self.a * d2.powf(self.b));
        tally.loss -= q.max(LOG_FLOOR).ln();
        tally.attractive += 1;

        let uij = dot(ui, uj);
        let ni = self.row_norm2[i];
        for col in 0..m {
            let step = lr * grad[col];
            store.axpy(col, -step, ui);
            store.axpy(col, step, uj);
            yi[col] += step * (uij - ni);
        }

        for _ in 0..self.neg {
            let mut k = rng.random_range(0..self.n - 1);
            if k >= i {
                k += 1;
            }
            let uk = self.row(k);
            let mut yk = [0.0; MAX_DIM];
            let mut d2 = 0.0;
            for col in 0..m {
                yk[col] = store.dot(col, uk);
                d2 += (yi[col] - yk[col]).powi(2);
            }
            let kr = self.neg_weight * repulsive_coef(d2, self.a, self.b, self.eps);
            let q = 1.0 / (1.0 + self.a * d2.powf(self.b));
            tally.loss -= self.neg_weight * (1.0 - q).max(LOG_FLOOR).ln();
            tally.negative += 1;
            for col in 0..m {
                let gc = (kr * (yi[col] - yk[col])).clamp(-self.clip, self.clip);
                if !gc.is_finite() {
                    return Err(NonFinite);
                }
                let step = lr * gc;
                store.axpy(col, -step, ui);
                yi[col] -= step * ni;
            }
        }
        Ok(())
    }
}

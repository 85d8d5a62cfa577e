//! Seeded synthetic datasets. Points are drawn one after another from a
//! single stream, so changing only `n` keeps the common prefix.

use std::f64::consts::{PI, TAU};

use indexmap::IndexMap;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};

pub const MIN_POINTS: usize = 10;
const CENTER_ATTEMPTS: usize = 1000;
const CENTER_SEPARATION: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticSpec {
    SwissRoll { n: usize, noise: f64, seed: u64 },
    MultiscaleLoop { n: usize, dims: usize, freq: u32, amp: f64, noise: f64, seed: u64 },
    GaussianBlobs { n: usize, dims: usize, blobs: usize, spread: f64, seed: u64 },
}

impl SyntheticSpec {
    pub fn swiss_roll(n: usize, seed: u64) -> Self {
        SyntheticSpec::SwissRoll { n, noise: 0.0, seed }
    }

    /// Defaults: 30 dimensions, frequency 16, amplitude 0.15, noise 0.05.
    pub fn multiscale_loop(n: usize, seed: u64) -> Self {
        SyntheticSpec::MultiscaleLoop { n, dims: 30, freq: 16, amp: 0.15, noise: 0.05, seed }
    }

    pub fn generate(&self) -> Result<Synthetic> {
        match *self {
            SyntheticSpec::SwissRoll { n, noise, seed } => gen_swiss_roll(n, noise, seed),
            SyntheticSpec::MultiscaleLoop { n, dims, freq, amp, noise, seed } => {
                gen_multiscale_loop(n, dims, freq, amp, noise, seed)
            }
            SyntheticSpec::GaussianBlobs { n, dims, blobs, spread, seed } => gen_gaussian_blobs(n, dims, blobs, spread, seed),
        }
    }
}

/// A generated dataset with its ground-truth parameters.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: DataMatrix,
    /// Named per-point intrinsic coordinates (`t`/`h`, `theta`).
    pub intrinsic: IndexMap<String, Vec<f64>>,
    /// Orthonormal `dims x 2` lift of the loop plane, when applicable.
    pub lift: Option<Array2<f64>>,
}

fn check_common(n: usize, noise: f64) -> Result<()> {
    if n < MIN_POINTS {
        return Err(invalid(format!("n must be at least {MIN_POINTS}, got {n}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(invalid(format!("noise must be finite and non-negative, got {noise}")));
    }
    Ok(())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `(t cos t, h, t sin t)` with `t ~ U[1.5 pi, 4.5 pi]`, `h ~ U[0, 21]`.
pub fn gen_swiss_roll(n: usize, noise: f64, seed: u64) -> Result<Synthetic> {
    check_common(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, 3));
    let (mut ts, mut hs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let t = rng.random_range(1.5 * PI..4.5 * PI);
        let h = rng.random_range(0.0..21.0);
        let base = [t * t.cos(), h, t * t.sin()];
        for (c, b) in base.iter().enumerate() {
            pts[[i, c]] = b + noise * normal(&mut rng);
        }
        ts.push(t);
        hs.push(h);
    }
    let mut intrinsic = IndexMap::new();
    intrinsic.insert("t".to_string(), ts);
    intrinsic.insert("h".to_string(), hs);
    Ok(Synthetic { data: DataMatrix::new(pts)?, intrinsic, lift: None })
}

/// Two orthonormal columns in `R^dims` by Gram-Schmidt on Gaussian vectors.
fn random_lift(dims: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    loop {
        let mut a: Vec<f64> = (0..dims).map(|_| normal(rng)).collect();
        let mut b: Vec<f64> = (0..dims).map(|_| normal(rng)).collect();
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na < 1e-8 {
            continue;
        }
        a.iter_mut().for_each(|v| *v /= na);
        // two passes keep b orthogonal to working precision
        for _ in 0..2 {
            let d: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            b.iter_mut().zip(&a).for_each(|(y, x)| *y -= d * x);
        }
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nb < 1e-8 {
            continue;
        }
        b.iter_mut().for_each(|v| *v /= nb);
        return Array2::from_shape_fn((dims, 2), |(r, c)| if c == 0 { a[r] } else { b[r] });
    }
}

/// Radius `1 + amp sin(freq theta)` around a circle, lifted into `dims`
/// dimensions by a seeded orthonormal map, plus isotropic noise.
pub fn gen_multiscale_loop(n: usize, dims: usize, freq: u32, amp: f64, noise: f64, seed: u64) -> Result<Synthetic> {
    check_common(n, noise)?;
    if dims < 2 {
        return Err(invalid(format!("dims must be at least 2, got {dims}")));
    }
    if freq == 0 {
        return Err(invalid("freq must be a positive integer"));
    }
    if !amp.is_finite() {
        return Err(invalid("amp must be finite"));
    }
    let mut lift_rng = ChaCha8Rng::seed_from_u64(seed);
    lift_rng.set_stream(1);
    let lift = random_lift(dims, &mut lift_rng);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, dims));
    let mut thetas = Vec::with_capacity(n);
    for i in 0..n {
        let theta = rng.random_range(0.0..TAU);
        let r = 1.0 + amp * (freq as f64 * theta).sin();
        let (x, y) = (r * theta.cos(), r * theta.sin());
        for c in 0..dims {
            pts[[i, c]] = x * lift[[c, 0]] + y * lift[[c, 1]] + noise * normal(&mut rng);
        }
        thetas.push(theta);
    }
    let mut intrinsic = IndexMap::new();
    intrinsic.insert("theta".to_string(), thetas);
    Ok(Synthetic { data: DataMatrix::new(pts)?, intrinsic, lift: Some(lift) })
}

/// Isotropic clusters with centers at least `6 spread` apart. Labels form
/// contiguous groups of `n / blobs`, the remainder joining the last.
pub fn gen_gaussian_blobs(n: usize, dims: usize, blobs: usize, spread: f64, seed: u64) -> Result<Synthetic> {
    check_common(n, spread)?;
    if blobs < 2 || blobs > n {
        return Err(invalid(format!("blobs must be in 2..={n}, got {blobs}")));
    }
    if dims == 0 {
        return Err(invalid("dims must be at least 1"));
    }
    let mut center_rng = ChaCha8Rng::seed_from_u64(seed);
    center_rng.set_stream(1);
    let half = 10.0 * blobs as f64 * spread.max(1.0);
    let min_gap = CENTER_SEPARATION * spread;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(blobs);
    while centers.len() < blobs {
        let mut placed = false;
        for _ in 0..CENTER_ATTEMPTS {
            let c: Vec<f64> = (0..dims).map(|_| center_rng.random_range(-half..=half)).collect();
            let far = centers.iter().all(|o| {
                o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_gap
            });
            if far {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::CenterPlacementFailed { blobs, attempts: CENTER_ATTEMPTS });
        }
    }
    let per = n / blobs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, dims));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i / per).min(blobs - 1);
        for c in 0..dims {
            pts[[i, c]] = centers[label][c] + spread * normal(&mut rng);
        }
        labels.push(label as i64);
    }
    let mut intrinsic = IndexMap::new();
    intrinsic.insert("center".to_string(), labels.iter().map(|&l| l as f64).collect());
    let data = DataMatrix::new(pts)?.with_labels(labels)?;
    Ok(Synthetic { data, intrinsic, lift: None })
}

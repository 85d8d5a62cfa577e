//! Rank correlation and stress between two distance summaries.

use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("distance arrays differ in length: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Values closer than this (relative to the largest magnitude) share a rank,
/// so distances that agree up to rounding are treated as ties.
pub const TIE_RTOL: f64 = 1e-12;

/// Average (fractional) ranks, 1-based.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let tol = TIE_RTOL * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] - v[order[start]] <= tol {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of fractional ranks.
pub fn spearman_rho(dx: &[f64], dy: &[f64]) -> Result<f64> {
    check_lengths(dx, dy)?;
    if dx.len() < 2 {
        return Err(Error::ConstantInput);
    }
    pearson(&fractional_ranks(dx), &fractional_ranks(dy))
}

/// Least-squares non-decreasing fit to `v` (pool adjacent violators).
pub fn isotonic_fit(v: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().expect("two blocks") = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (m, w) in blocks {
        out.extend(std::iter::repeat_n(m, w));
    }
    out
}

/// `(nonmetric, scale_normalized)` stress of embedding distances `dy`
/// against data distances `dx`.
pub fn stress_pair(dx: &[f64], dy: &[f64]) -> Result<(f64, f64)> {
    check_lengths(dx, dy)?;
    if dx.len() < 2 || dx.iter().all(|&v| v == dx[0]) {
        return Err(Error::DegenerateDistances("data distances are all equal".into()));
    }
    let syy: f64 = dy.iter().map(|v| v * v).sum();
    if syy == 0.0 {
        return Err(Error::DegenerateDistances("embedding distances are all zero".into()));
    }
    let sxx: f64 = dx.iter().map(|v| v * v).sum();
    let alpha = dx.iter().zip(dy).map(|(x, y)| x * y).sum::<f64>() / syy;
    let scale_normalized = (dx.iter().zip(dy).map(|(x, y)| (x - alpha * y).powi(2)).sum::<f64>() / sxx).sqrt();

    let mut order: Vec<usize> = (0..dy.len()).collect();
    order.sort_by(|&i, &j| dy[i].total_cmp(&dy[j]).then(i.cmp(&j)));
    let sorted_x: Vec<f64> = order.iter().map(|&i| dx[i]).collect();
    let fitted = isotonic_fit(&sorted_x);
    let sorted_y: Vec<f64> = order.iter().map(|&i| dy[i]).collect();
    let beta = fitted.iter().zip(&sorted_y).map(|(h, y)| h * y).sum::<f64>() / syy;
    let num: f64 = fitted.iter().zip(&sorted_y).map(|(h, y)| (h - beta * y).powi(2)).sum();
    let nonmetric = (num / (beta * beta * syy)).sqrt();
    Ok((nonmetric, scale_normalized))
}

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const FIT_SAMPLES: usize = 300;
const FIT_GRAD_TOL: f64 = 1e-8;
const FIT_MAX_ITER: usize = 500;

/// Shape of the low-dimensional similarity `q(d) = 1 / (1 + a d^{2b})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
    pub min_dist: f64,
    pub spread: f64,
}

impl CurveParams {
    /// `q` as a function of the squared distance.
    #[inline]
    pub fn q_from_sq(&self, d2: f64) -> f64 {
        1.0 / (1.0 + self.a * d2.powf(self.b))
    }
}

/// Target membership curve: 1 up to `min_dist`, exponential decay after.
pub fn target_curve(d: f64, min_dist: f64, spread: f64) -> f64 {
    if d <= min_dist {
        1.0
    } else {
        (-(d - min_dist) / spread).exp()
    }
}

/// The 300 equispaced fit abscissae on `[0, 3 spread]`.
pub fn fit_grid(spread: f64) -> Vec<f64> {
    let hi = 3.0 * spread;
    (0..FIT_SAMPLES).map(|i| hi * i as f64 / (FIT_SAMPLES - 1) as f64).collect()
}

struct Fit {
    sse: f64,
    grad: [f64; 2],
    jtj: [[f64; 2]; 2],
}

fn evaluate(a: f64, b: f64, xs: &[f64], ys: &[f64]) -> Fit {
    let mut sse = 0.0;
    let mut grad = [0.0; 2];
    let mut jtj = [[0.0; 2]; 2];
    for (&x, &y) in xs.iter().zip(ys) {
        let (p, ja, jb) = if x > 0.0 {
            let x2b = x.powf(2.0 * b);
            let den = 1.0 + a * x2b;
            let p = 1.0 / den;
            let common = -1.0 / (den * den);
            (p, common * x2b, common * a * x2b * 2.0 * x.ln())
        } else {
            (1.0, 0.0, 0.0)
        };
        let r = p - y;
        sse += r * r;
        grad[0] += ja * r;
        grad[1] += jb * r;
        jtj[0][0] += ja * ja;
        jtj[0][1] += ja * jb;
        jtj[1][1] += jb * jb;
    }
    jtj[1][0] = jtj[0][1];
    Fit { sse, grad, jtj }
}

/// Least-squares fit of `(a, b)` to the target curve via Levenberg-Marquardt.
pub fn fit_ab(min_dist: f64, spread: f64) -> Result<CurveParams> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(invalid(format!("spread must be positive, got {spread}")));
    }
    if !(min_dist >= 0.0 && min_dist < spread * 10.0) {
        return Err(invalid(format!("min_dist must satisfy 0 <= min_dist < 10 spread, got {min_dist}")));
    }
    let xs = fit_grid(spread);
    let ys: Vec<f64> = xs.iter().map(|&x| target_curve(x, min_dist, spread)).collect();

    let (mut a, mut b) = (1.0, 1.0);
    let mut mu = 1e-3;
    let mut cur = evaluate(a, b, &xs, &ys);
    for _ in 0..FIT_MAX_ITER {
        let gnorm = cur.grad[0].hypot(cur.grad[1]);
        if gnorm <= FIT_GRAD_TOL {
            return Ok(CurveParams { a, b, min_dist, spread });
        }
        let mut accepted = false;
        for _ in 0..60 {
            let m00 = cur.jtj[0][0] * (1.0 + mu);
            let m11 = cur.jtj[1][1] * (1.0 + mu);
            let m01 = cur.jtj[0][1];
            let det = m00 * m11 - m01 * m01;
            let da = -(m11 * cur.grad[0] - m01 * cur.grad[1]) / det;
            let db = -(m00 * cur.grad[1] - m01 * cur.grad[0]) / det;
            let (na, nb) = (a + da, b + db);
            if na > 0.0 && nb > 0.0 && det.is_finite() {
                let next = evaluate(na, nb, &xs, &ys);
                if next.sse <= cur.sse {
                    a = na;
                    b = nb;
                    cur = next;
                    mu = (mu * 0.3).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !accepted {
            // no descent step left: accept if already stationary to rounding
            let gnorm = cur.grad[0].hypot(cur.grad[1]);
            if gnorm <= FIT_GRAD_TOL * 100.0 {
                return Ok(CurveParams { a, b, min_dist, spread });
            }
            return Err(Error::FitDiverged { a, b });
        }
    }
    Err(Error::FitDiverged { a, b })
}

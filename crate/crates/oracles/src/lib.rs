//! Brute-force reference implementations for tests.
//!
//! Everything here is written for clarity over speed and shares no code with
//! `specmap-core`: quadratic or cubic loops, plain `Vec` storage, no sorting
//! where counting will do.

pub type Points = Vec<Vec<f64>>;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Rank of `j` among the other points as seen from `i` (1-based).
/// A point `l` is ahead of `j` if it is strictly closer, or equally close
/// with a lower index.
pub fn rank_of(pts: &[Vec<f64>], i: usize, j: usize) -> usize {
    let dij = euclid(&pts[i], &pts[j]);
    let mut r = 1;
    for l in 0..pts.len() {
        if l == i || l == j {
            continue;
        }
        let dil = euclid(&pts[i], &pts[l]);
        if dil < dij || (dil == dij && l < j) {
            r += 1;
        }
    }
    r
}

/// The `k` nearest neighbors of every point, found by rank counting.
pub fn knn(pts: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let mut out = vec![usize::MAX; k];
            for j in 0..n {
                if j != i {
                    let r = rank_of(pts, i, j);
                    if r <= k {
                        out[r - 1] = j;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn continuity(x: &[Vec<f64>], y: &[Vec<f64>], k: usize) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i && rank_of(x, i, j) <= k {
                let ry = rank_of(y, i, j);
                if ry > k {
                    total += (ry - k) as f64;
                }
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total
}

/// `1 - sum |r_X - r_Y| / r_X / H` over the data-space neighbors, with `H`
/// the worst case sum.
pub fn mrre(x: &[Vec<f64>], y: &[Vec<f64>], k: usize) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let rx = rank_of(x, i, j);
            if rx <= k {
                let ry = rank_of(y, i, j);
                total += (rx as f64 - ry as f64).abs() / rx as f64;
            }
        }
    }
    let nf = n as f64;
    let h: f64 = (1..=k).map(|l| (nf - 2.0 * l as f64 + 1.0).abs() / l as f64).sum::<f64>() * nf;
    1.0 - total / h
}

/// Average ranks, computed by counting smaller and equal entries. Entries
/// within `1e-12` of the largest magnitude count as equal.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let tol = 1e-12 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a - tol).count() as f64;
            let equal = v.iter().filter(|&&b| (b - a).abs() <= tol).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// All pairwise distances `i < j` in row-major pair order.
pub fn pair_distances(pts: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            out.push(euclid(&pts[i], &pts[j]));
        }
    }
    out
}

/// Isotonic regression by the max-min formula
/// `f_i = max_{a <= i} min_{b >= i} mean(v[a..=b])`.
pub fn isotonic(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mean = |a: usize, b: usize| v[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|a| (i..n).map(|b| mean(a, b)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Isotonic regression as the left slopes of the greatest convex minorant
/// of the cumulative-sum diagram, built as a lower convex hull.
pub fn isotonic_hull(v: &[f64]) -> Vec<f64> {
    let mut cum = vec![0.0; v.len() + 1];
    for (i, x) in v.iter().enumerate() {
        cum[i + 1] = cum[i] + x;
    }
    let mut hull: Vec<usize> = Vec::new();
    for p in 0..cum.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a -> p
            let cross = (b - a) as f64 * (cum[p] - cum[a]) - (p - a) as f64 * (cum[b] - cum[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = vec![0.0; v.len()];
    for w in hull.windows(2) {
        let slope = (cum[w[1]] - cum[w[0]]) / (w[1] - w[0]) as f64;
        out[w[0]..w[1]].iter_mut().for_each(|o| *o = slope);
    }
    out
}

/// Kruskal stress-1 of the isotonic fit of `dx` on `dy` after optimal
/// rescaling of `dy`, and the metric stress of `dy` rescaled onto `dx`.
pub fn stresses(dx: &[f64], dy: &[f64]) -> (f64, f64) {
    let n = dx.len();
    // selection order by (dy, index), without a sort call
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut best = usize::MAX;
        for i in 0..n {
            if !used[i] && (best == usize::MAX || dy[i] < dy[best]) {
                best = i;
            }
        }
        used[best] = true;
        order.push(best);
    }
    let sx: Vec<f64> = order.iter().map(|&i| dx[i]).collect();
    let sy: Vec<f64> = order.iter().map(|&i| dy[i]).collect();
    let fit = isotonic_hull(&sx);
    let syy: f64 = sy.iter().map(|v| v * v).sum();
    let beta = fit.iter().zip(&sy).map(|(f, y)| f * y).sum::<f64>() / syy;
    let nonmetric = (fit.iter().zip(&sy).map(|(f, y)| (f - beta * y).powi(2)).sum::<f64>() / (beta * beta * syy)).sqrt();

    let alpha = dx.iter().zip(dy).map(|(x, y)| x * y).sum::<f64>() / syy;
    let sxx: f64 = dx.iter().map(|v| v * v).sum();
    let metric = (dx.iter().zip(dy).map(|(x, y)| (x - alpha * y).powi(2)).sum::<f64>() / sxx).sqrt();
    (nonmetric, metric)
}

/// All-pairs shortest paths on the undirected kNN graph (Floyd-Warshall).
/// Unreachable pairs are `inf`.
pub fn geodesics(pts: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = pts.len();
    let nb = knn(pts, k);
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for i in 0..n {
        for &j in &nb[i] {
            let w = euclid(&pts[i], &pts[j]);
            d[i][j] = d[i][j].min(w);
            d[j][i] = d[j][i].min(w);
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Spearman correlation of geodesic and embedding distances over the pairs
/// of the largest reachable set (lowest index wins ties). Returns
/// `(rho, coverage)`.
pub fn demap(x: &[Vec<f64>], y: &[Vec<f64>], k: usize) -> (f64, f64) {
    let n = x.len();
    let g = geodesics(x, k);
    let mut best: Vec<usize> = Vec::new();
    for i in 0..n {
        let comp: Vec<usize> = (0..n).filter(|&j| g[i][j].is_finite()).collect();
        if comp.len() > best.len() {
            best = comp;
        }
    }
    let (mut dg, mut dy) = (Vec::new(), Vec::new());
    for (a, &i) in best.iter().enumerate() {
        for &j in &best[a + 1..] {
            dg.push(g[i][j]);
            dy.push(euclid(&y[i], &y[j]));
        }
    }
    (spearman(&dg, &dy), best.len() as f64 / n as f64)
}

pub fn q(d2: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * d2.powf(b))
}

/// Full-sum cross-entropy with `q` clamped to `[1e-12, 1 - 1e-12]`:
/// `-sum_{i<j} w_ij log q_ij - gamma sum_{i<j} log(1 - q_ij)`.
pub fn dense_loss(y: &[Vec<f64>], w: &[Vec<f64>], a: f64, b: f64, gamma: f64) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(&y[i], &y[j]);
            let qij = q(d * d, a, b).clamp(1e-12, 1.0 - 1e-12);
            total -= w[i][j] * qij.ln();
            total -= gamma * (1.0 - qij).ln();
        }
    }
    total
}

/// [`dense_loss`] with a separate repulsion weight `r_ij` for every pair.
pub fn weighted_dense_loss(y: &[Vec<f64>], w: &[Vec<f64>], r: &[Vec<f64>], a: f64, b: f64) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(&y[i], &y[j]);
            let qij = q(d * d, a, b).clamp(1e-12, 1.0 - 1e-12);
            total -= w[i][j] * qij.ln() + r[i][j] * (1.0 - qij).ln();
        }
    }
    total
}

/// Central differences of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Minimizer of `f` on an even grid over `[lo, hi]`, refined by repeated
/// zooming into the best cell.
pub fn grid_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, points: usize, rounds: usize) -> f64 {
    let mut best = lo;
    for _ in 0..rounds {
        let step = (hi - lo) / (points - 1) as f64;
        let mut fbest = f64::INFINITY;
        for i in 0..points {
            let t = lo + step * i as f64;
            let v = f(t);
            if v < fbest {
                fbest = v;
                best = t;
            }
        }
        lo = best - step;
        hi = best + step;
    }
    best
}

/// Loss of a two-point embedding at separation `d`: one edge of weight `w`
/// plus the repulsive term of the same pair.
pub fn two_point_loss(d: f64, w: f64, a: f64, b: f64, gamma: f64) -> f64 {
    let qd = q(d * d, a, b).clamp(1e-12, 1.0 - 1e-12);
    -w * qd.ln() - gamma * (1.0 - qd).ln()
}

/// `(a, b)` minimizing the squared error against the target curve on the
/// 300-point grid over `[0, 3 spread]`, by nested grid refinement.
pub fn fit_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let target = |x: f64| if x <= min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() };
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter().map(|&x| (1.0 / (1.0 + a * x.powf(2.0 * b)) - target(x)).powi(2)).sum()
    };
    let (mut alo, mut ahi, mut blo, mut bhi) = (0.01, 20.0, 0.1, 3.0);
    let (mut ab, mut bb) = (1.0, 1.0);
    for _ in 0..30 {
        let (sa, sb) = ((ahi - alo) / 40.0, (bhi - blo) / 40.0);
        let mut best = f64::INFINITY;
        for i in 0..=40 {
            for j in 0..=40 {
                let (a, b) = (alo + sa * i as f64, blo + sb * j as f64);
                let v = sse(a, b);
                if v < best {
                    best = v;
                    ab = a;
                    bb = b;
                }
            }
        }
        alo = (ab - 2.0 * sa).max(1e-6);
        ahi = ab + 2.0 * sa;
        blo = (bb - 2.0 * sb).max(1e-6);
        bhi = bb + 2.0 * sb;
    }
    (ab, bb)
}

/// Symmetric eigenvalues by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if a[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[k][p], a[k][r]);
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[p][k], a[r][k]);
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Cosines of the principal angles between the column spans of two
/// matrices with orthonormal columns (`n x p` each, given as columns),
/// largest first.
pub fn principal_cosines(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let p = a.len();
    let m: Vec<Vec<f64>> = (0..p).map(|i| (0..b.len()).map(|j| a[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum()).collect()).collect();
    // eigenvalues of M M^T are the squared singular values of M
    let mmt: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| m[i].iter().zip(&m[j]).map(|(x, y)| x * y).sum()).collect()).collect();
    let mut cos: Vec<f64> = jacobi_eigenvalues(mmt).into_iter().map(|v| v.max(0.0).sqrt().min(1.0)).collect();
    cos.reverse();
    cos
}

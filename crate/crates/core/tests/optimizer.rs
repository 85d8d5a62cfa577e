mod common;

use common::{knn_graph, random_connected, rows, spectrum, uniform};
use ndarray::Array2;
use proptest::prelude::*;
use specmap::graph::Edge;
use specmap::optimizer::{dense_loss, dense_loss_gradient, dense_loss_of_embedding, fit_ab, optimize, optimize_observed};
use specmap::spectral::subspace;
use specmap::{CurveParams, FuzzyGraph, OptimizerConfig, ProjectionMatrix};

fn default_curve() -> CurveParams {
    fit_ab(0.1, 1.0).unwrap()
}

fn random_p(s: usize, m: usize, seed: u64, scale: f64) -> ProjectionMatrix {
    ProjectionMatrix::new((uniform(s, m, seed) - 0.5) * scale).unwrap()
}

#[test]
fn fit_matches_grid_search_oracle() {
    let c = default_curve();
    let (a, b) = specmap_oracles::fit_ab(0.1, 1.0);
    assert!((c.a - a).abs() < 1e-3 && (c.b - b).abs() < 1e-3, "{c:?} vs ({a}, {b})");
    assert!((c.a - 1.577).abs() < 0.01 && (c.b - 0.895).abs() < 0.01);
    let c0 = fit_ab(0.0, 1.0).unwrap();
    let (a0, b0) = specmap_oracles::fit_ab(0.0, 1.0);
    assert!((c0.a - a0).abs() < 1e-3 && (c0.b - b0).abs() < 1e-3);
}

#[test]
fn dense_loss_matches_double_loop() {
    let g = knn_graph(40, 4, 6, 3);
    let sp = spectrum(&g, 12);
    let u = subspace(&sp, 12).unwrap();
    let c = default_curve();
    for seed in 0..5 {
        let p = random_p(12, 2, seed, 20.0);
        let y = p.embed(&u);
        let got = dense_loss(&p, &u, &g, &c, 5.0).unwrap();
        let want = specmap_oracles::dense_loss(&rows(&y), &common::dense_w(&g), c.a, c.b, 5.0);
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let g = knn_graph(30, 3, 5, 8);
    let sp = spectrum(&g, 8);
    let u = subspace(&sp, 8).unwrap();
    let c = default_curve();
    let p = random_p(8, 2, 4, 10.0);
    let analytic = dense_loss_gradient(&p, &u, &g, &c, 5.0).unwrap();
    let flat: Vec<f64> = p.values().iter().copied().collect();
    let f = |x: &[f64]| {
        let pp = ProjectionMatrix::new(Array2::from_shape_vec((8, 2), x.to_vec()).unwrap()).unwrap();
        dense_loss(&pp, &u, &g, &c, 5.0).unwrap()
    };
    let fd = specmap_oracles::finite_difference(f, &flat, 1e-5);
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, n) in analytic.iter().zip(&fd) {
        let denom = a.abs().max(1e-3 * scale);
        assert!((a - n).abs() / denom < 1e-5, "analytic {a} fd {n}");
    }
}

#[test]
fn attractive_term_matches_finite_differences_at_0_7() {
    let c = CurveParams { a: 1.0, b: 1.0, min_dist: 0.0, spread: 1.0 };
    let yj = [0.2, -0.1];
    let yi = [0.2 + 0.7 * 0.6, -0.1 + 0.7 * 0.8];
    let (att, _) = specmap::optimizer::pair_gradients(&yi, &yj, &c, 1e-3);
    let f = |y: &[f64]| -specmap::optimizer::q_similarity(y, &yj, &c).ln();
    let fd = specmap_oracles::finite_difference(f, &yi, 1e-6);
    for (a, n) in att.iter().zip(&fd) {
        assert!(((a - n) / a).abs() < 1e-6);
    }
}

fn two_points() -> (FuzzyGraph, specmap::Spectrum) {
    let g = FuzzyGraph::from_edges(2, vec![Edge { i: 0, j: 1, w: 1.0 }]).unwrap();
    let sp = spectrum(&g, 1);
    (g, sp)
}

#[test]
fn two_point_separation_matches_grid_search() {
    let (g, sp) = two_points();
    let u = subspace(&sp, 1).unwrap();
    let c = default_curve();
    let gamma = 0.5;
    let cfg = OptimizerConfig { epochs: 500, gamma, negative_samples: 1, ..Default::default() };
    let p = optimize(&u, &g, &ProjectionMatrix::new(ndarray::array![[1.0, 0.5]]).unwrap(), &cfg, &c).unwrap();
    let y = p.embed(&u);
    let d = ((y[[0, 0]] - y[[1, 0]]).powi(2) + (y[[0, 1]] - y[[1, 1]]).powi(2)).sqrt();
    // An attractive update moves both endpoints while a negative moves only
    // the anchor, so the separation feels the edge weight twice.
    let argmin = specmap_oracles::grid_minimize(
        |t| specmap_oracles::two_point_loss(t, 2.0, c.a, c.b, gamma),
        1e-6,
        5.0,
        201,
        12,
    );
    assert!((d - argmin).abs() < 0.05, "d* = {d}, argmin = {argmin}");
}

/// The objective the sampler follows in expectation: repulsion between `i`
/// and `j` is weighted by how often either one is drawn as an anchor.
fn sampled_reference(y: &Array2<f64>, g: &FuzzyGraph, c: &CurveParams, gamma: f64) -> f64 {
    let n = g.n();
    let w = common::dense_w(g);
    let deg = g.degree();
    let wmax = g.max_weight();
    let r: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| gamma * (deg[i] + deg[j]) / (4.0 * wmax * (n - 1) as f64)).collect()).collect();
    specmap_oracles::weighted_dense_loss(&rows(y), &w, &r, c.a, c.b)
}

enum Start {
    Random,
    Spectral,
}

fn descent_trial(seed: u64, deterministic: bool, start: Start) -> bool {
    use rand::SeedableRng;
    let g = knn_graph(200, 5, 10, seed);
    let sp = spectrum(&g, 10);
    let u = subspace(&sp, 10).unwrap();
    let c = default_curve();
    let cfg = OptimizerConfig { epochs: 60, seed, deterministic, ..Default::default() };
    match start {
        Start::Random => {
            let p0 = random_p(10, 2, seed ^ 0xABCD, 1.0);
            let p = optimize(&u, &g, &p0, &cfg, &c).unwrap();
            dense_loss(&p, &u, &g, &c, 5.0).unwrap() < dense_loss(&p0, &u, &g, &c, 5.0).unwrap()
        }
        Start::Spectral => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p0 = specmap::progressive::init_first_stage(&sp, 10, 2, &mut rng, 1e-4).unwrap();
            let p = optimize(&u, &g, &p0, &cfg, &c).unwrap();
            sampled_reference(&p.embed(&u), &g, &c, 5.0) < sampled_reference(&p0.embed(&u), &g, &c, 5.0)
        }
    }
}

#[test]
fn sgd_decreases_dense_loss() {
    let wins = (0..100).filter(|&seed| descent_trial(seed, true, Start::Random)).count();
    assert!(wins >= 95, "{wins}/100 runs decreased the loss");
}

#[test]
fn sgd_decreases_sampled_objective_from_spectral_init() {
    let wins = (0..100).filter(|&seed| descent_trial(seed, true, Start::Spectral)).count();
    assert!(wins >= 95, "{wins}/100 runs decreased the objective");
}

#[test]
fn relaxed_mode_passes_the_same_descent_checks() {
    let random = (0..100).filter(|&seed| descent_trial(seed, false, Start::Random)).count();
    let spectral = (0..100).filter(|&seed| descent_trial(seed, false, Start::Spectral)).count();
    assert!(random >= 95 && spectral >= 95, "{random}/100 and {spectral}/100");
}

#[test]
fn deterministic_runs_are_bit_identical() {
    let g = knn_graph(150, 4, 8, 2);
    let sp = spectrum(&g, 20);
    let u = subspace(&sp, 20).unwrap();
    let c = default_curve();
    let p0 = random_p(20, 2, 5, 10.0);
    let cfg = OptimizerConfig { epochs: 30, seed: 77, ..Default::default() };
    let a = optimize(&u, &g, &p0, &cfg, &c).unwrap();
    let b = optimize(&u, &g, &p0, &cfg, &c).unwrap();
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let other = optimize(&u, &g, &p0, &OptimizerConfig { seed: 78, ..cfg }, &c).unwrap();
    assert_ne!(a, other);
}

#[test]
fn zero_epochs_returns_initial_matrix() {
    let g = knn_graph(30, 2, 4, 1);
    let sp = spectrum(&g, 5);
    let u = subspace(&sp, 5).unwrap();
    let p0 = random_p(5, 2, 3, 1.0);
    let cfg = OptimizerConfig { epochs: 0, ..Default::default() };
    assert_eq!(optimize(&u, &g, &p0, &cfg, &default_curve()).unwrap(), p0);
}

#[test]
fn work_counts_follow_edge_sampling() {
    // unit weights: every edge is sampled once per epoch in each direction
    let g = random_connected(60, 40, 4);
    let g = FuzzyGraph::from_edges(60, g.edges().iter().map(|e| Edge { w: 1.0, ..*e }).collect()).unwrap();
    let sp = spectrum(&g, 6);
    let u = subspace(&sp, 6).unwrap();
    let cfg = OptimizerConfig { epochs: 7, negative_samples: 3, ..Default::default() };
    let mut seen = Vec::new();
    let (_, stats) = optimize_observed(&u, &g, &random_p(6, 2, 1, 5.0), &cfg, &default_curve(), |r| seen.push(*r)).unwrap();
    let per_epoch = 2 * g.edges().len() as u64 * (1 + 3);
    assert_eq!(stats.per_epoch_interactions, vec![per_epoch; 7]);
    assert_eq!(stats.interactions(), 7 * per_epoch);
    assert_eq!(seen.len(), 7);
    assert_eq!(seen.last().unwrap().epoch, 7);
}

fn rotation(theta: f64, flip: bool) -> Array2<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let f = if flip { -1.0 } else { 1.0 };
    ndarray::array![[c, -s * f], [s, c * f]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn loss_is_rotation_invariant(seed in any::<u64>(), theta in 0.0f64..6.3, flip in any::<bool>(), scale in 0.5f64..50.0) {
        let g = knn_graph(40, 3, 5, seed);
        let sp = spectrum(&g, 8);
        let u = subspace(&sp, 8).unwrap();
        let c = default_curve();
        let p = random_p(8, 2, seed.wrapping_add(1), scale);
        let rotated = ProjectionMatrix::new(p.values().dot(&rotation(theta, flip))).unwrap();
        let a = dense_loss(&p, &u, &g, &c, 5.0).unwrap();
        let b = dense_loss(&rotated, &u, &g, &c, 5.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        let y = p.embed(&u);
        prop_assert!((dense_loss_of_embedding(y.view(), &g, &c, 5.0) - a).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

mod common;

use common::{columns, knn_graph, spectrum};
use rand::SeedableRng;
use specmap::optimizer::{dense_loss, fit_ab};
use specmap::progressive::{
    augment, init_first_stage, make_schedule, run_full_spectrum, run_progressive, ProgressiveConfig, StageProgress,
};
use specmap::spectral::subspace;
use specmap::{OptimizerConfig, ScheduleMode};

fn config(epochs: usize, seed: u64) -> ProgressiveConfig {
    ProgressiveConfig {
        optimizer: OptimizerConfig { epochs, seed, ..Default::default() },
        augment_scale: Some(0.0),
        ..Default::default()
    }
}

#[test]
fn zero_scale_handoffs_are_continuous() {
    let g = knn_graph(120, 3, 8, 4);
    let sp = spectrum(&g, 60);
    let c = fit_ab(0.1, 1.0).unwrap();
    let schedule = make_schedule(60, 4, ScheduleMode::Equal, 80).unwrap();
    let stages = run_progressive(&sp, &g, &c, &config(80, 1), &schedule, |_| {}).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for pair in stages.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let u_next = subspace(&sp, next.s).unwrap();
        let grown = augment(&prev.p, next.s, &mut rng, Some(0.0)).unwrap();
        let y_after = grown.embed(&u_next);
        let gap = (&y_after - &prev.y).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gap < 1e-12, "handoff gap {gap}");
        let before = dense_loss(&prev.p, &subspace(&sp, prev.s).unwrap(), &g, &c, 5.0).unwrap();
        let after = dense_loss(&grown, &u_next, &g, &c, 5.0).unwrap();
        assert!((before - after).abs() <= 1e-8 * before.abs().max(1.0));
    }
    for st in &stages {
        let u = subspace(&sp, st.s).unwrap();
        let y = st.p.embed(&u);
        assert!((&y - &st.y).iter().all(|v| v.abs() <= 1e-12));
        assert_eq!(st.epochs_used, 20);
    }
}

#[test]
fn first_stage_spans_the_leading_modes() {
    let sp = spectrum(&knn_graph(100, 3, 7, 9), 10);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let p0 = init_first_stage(&sp, 2, 2, &mut rng, 0.0).unwrap();
    let y0 = p0.embed(&subspace(&sp, 2).unwrap());
    let extent = y0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((extent - 10.0).abs() < 1e-9);
    let lead = sp.modes.slice(ndarray::s![.., ..2]);
    for col in y0.columns() {
        let unit = &col / col.dot(&col).sqrt();
        let resid = &unit - &lead.dot(&lead.t().dot(&unit));
        let sine = resid.dot(&resid).sqrt();
        assert!(sine < 1e-8, "principal angle {sine}");
    }
    let cos = specmap_oracles::principal_cosines(&columns(y0.view()), &columns(lead));
    assert!(cos.iter().all(|c| (1.0 - c).abs() < 1e-12), "{cos:?}");
}

#[test]
fn single_full_stage_equals_the_full_spectrum_run() {
    let g = knn_graph(60, 2, 6, 5);
    let sp = spectrum(&g, 59);
    let c = fit_ab(0.1, 1.0).unwrap();
    let cfg = config(30, 8);
    let schedule = make_schedule(59, 1, ScheduleMode::Equal, 30).unwrap();
    let staged = run_progressive(&sp, &g, &c, &cfg, &schedule, |_| {}).unwrap();
    let full = run_full_spectrum(&sp, &g, &c, &cfg, |_| {}).unwrap();
    assert!(full.full && !staged[0].full);
    assert_eq!(staged[0].p, full.p);
    assert_eq!(staged[0].y, full.y);
}

#[test]
fn work_matches_the_edge_sampling_budget() {
    let g = knn_graph(80, 3, 6, 6);
    let sp = spectrum(&g, 40);
    let c = fit_ab(0.1, 1.0).unwrap();
    let cfg = config(50, 2);
    let schedule = make_schedule(40, 5, ScheduleMode::Log, 53).unwrap();
    assert_eq!(schedule.epochs_per_stage, vec![10, 10, 10, 10, 13]);
    let stages = run_progressive(&sp, &g, &c, &cfg, &schedule, |_| {}).unwrap();
    let wmax = g.max_weight();
    for (st, &epochs) in stages.iter().zip(&schedule.epochs_per_stage) {
        let samples: u64 = g
            .edges()
            .iter()
            .map(|e| 2 * ((epochs as f64 * e.w / wmax).ceil() as u64).clamp(1, epochs as u64))
            .sum();
        assert_eq!(st.interactions, samples * (1 + cfg.optimizer.negative_samples as u64));
    }
}

#[test]
fn progress_lines_follow_the_documented_format() {
    let g = knn_graph(50, 2, 5, 7);
    let sp = spectrum(&g, 20);
    let c = fit_ab(0.1, 1.0).unwrap();
    let schedule = make_schedule(20, 2, ScheduleMode::Equal, 6).unwrap();
    let mut lines = Vec::new();
    run_progressive(&sp, &g, &c, &config(6, 0), &schedule, |p: &StageProgress| lines.push(p.to_string())).unwrap();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("stage 1/2 s=10 epoch 1/3 loss="), "{}", lines[0]);
    assert!(lines[5].starts_with("stage 2/2 s=20 epoch 3/3 loss="));
    let loss: f64 = lines[5].rsplit('=').next().unwrap().parse().unwrap();
    assert!(loss.is_finite());
}

#[test]
fn stage_errors_carry_the_stage_index() {
    let g = knn_graph(30, 2, 4, 1);
    let sp = spectrum(&g, 10);
    let c = fit_ab(0.1, 1.0).unwrap();
    let schedule = specmap::StageSchedule { sizes: vec![4, 12], epochs_per_stage: vec![1, 1] };
    let err = run_progressive(&sp, &g, &c, &config(2, 0), &schedule, |_| {}).unwrap_err();
    assert!(matches!(err, specmap::Error::SubspaceTooLarge { .. }));
    let schedule = specmap::StageSchedule { sizes: vec![4, 3], epochs_per_stage: vec![1, 1] };
    match run_progressive(&sp, &g, &c, &config(2, 0), &schedule, |_| {}) {
        Err(specmap::Error::Stage { stage, .. }) => assert_eq!(stage, 2),
        other => panic!("expected a stage error, got {other:?}"),
    }
}

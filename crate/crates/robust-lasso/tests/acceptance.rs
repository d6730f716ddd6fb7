//! End-to-end acceptance gate. Eight numbered criteria cover the detection
//! experiments, the solver certificates, the diffusion stack, and the staged
//! pipeline; each prints one pass/fail line. Every bound is a named constant
//! below. Run with `--nocapture` to watch the lines as they complete.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use robust_lasso::bench::{
    run_path_experiment, run_pipeline_experiment, run_ratio_sweep, ClassifierStage, FeatureStage,
    PipelineConfig, RemovalStage,
};
use robust_lasso::dataset::{generate_synthetic, SyntheticConfig};
use robust_lasso::plasso::coord_descent::equivalence_check;
use robust_lasso::plasso::path::{lasso_path, max_kkt_violation};
use robust_lasso::plasso::precondition::precondition;
use robust_lasso::tdca::embedding::{fit_embedding, kl_objective_and_gradient, EmbedOptions};
use robust_lasso::tdca::graph::build_graph;
use robust_lasso::tdca::walk::{lazy_random_walk, stationary_oracle};

/// Criterion 1: detection quality floor on the bundled synthetic config.
const C1_FRACTION_FLOOR: f64 = 0.85;
const C1_SEED_RUNTIME_CAP: Duration = Duration::from_secs(10);
/// Criterion 2: per-ratio detection floor and total sweep budget.
const C2_ACCURACY_FLOOR: f64 = 0.85;
const C2_TOTAL_RUNTIME_CAP: Duration = Duration::from_secs(120);
/// Criterion 3: stationarity certificate across all experiment paths.
const C3_KKT_TOL: f64 = 1e-6;
/// Criterion 4: agreement of the two problem formulations.
const C4_COEFF_TOL: f64 = 1e-8;
/// Criterion 5: iterative walk against the closed-form resolvent.
const C5_STATE_TOL: f64 = 1e-8;
/// Criterion 6: analytic gradient against central differences.
const C6_GRAD_REL_TOL: f64 = 1e-4;
/// Criterion 8: residual projector hygiene and stochasticity slack.
const C8_IDEMPOTENCE_TOL: f64 = 1e-10;
const C8_SYMMETRY_TOL: f64 = 1e-12;
const C8_ROW_SUM_TOL: f64 = 1e-8;

const EXPERIMENT_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const SWEEP_RATIOS: [f64; 7] = [0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
const SWEEP_REPEATS: usize = 10;
const SWEEP_BASE_SEED: u64 = 42;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, criterion: usize, name: &str, passed: bool, detail: String) {
        let status = if passed { "PASS" } else { "FAIL" };
        println!("criterion {criterion} [{status}] {name}: {detail}");
        if !passed {
            self.failures.push(format!("criterion {criterion} ({name}): {detail}"));
        }
    }
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate { failures: Vec::new() };

    // 1. Outliers dominate the front of the activation ranking.
    let mut fractions = Vec::new();
    let mut worst_seed_time = Duration::ZERO;
    for seed in EXPERIMENT_SEEDS {
        let t = Instant::now();
        let out = run_path_experiment(seed).expect("path experiment");
        worst_seed_time = worst_seed_time.max(t.elapsed());
        fractions.push(out.detection_fraction.expect("dataset has outliers"));
    }
    let mean_fraction = fractions.iter().sum::<f64>() / fractions.len() as f64;
    gate.report(
        1,
        "ranking front",
        mean_fraction >= C1_FRACTION_FLOOR && worst_seed_time <= C1_SEED_RUNTIME_CAP,
        format!(
            "mean true-outlier fraction in first 90 = {mean_fraction:.4} \
             (floor {C1_FRACTION_FLOOR}), slowest seed {worst_seed_time:?} \
             (cap {C1_SEED_RUNTIME_CAP:?})"
        ),
    );

    // 2. Detection accuracy across the outlier-ratio sweep.
    let sweep_timer = Instant::now();
    let sweep = run_ratio_sweep(&SWEEP_RATIOS, SWEEP_REPEATS, SWEEP_BASE_SEED).expect("sweep");
    let sweep_elapsed = sweep_timer.elapsed();
    let mut worst_ratio = ("", f64::INFINITY);
    for g in &sweep.groups {
        let mean = g.detection_accuracy.expect("sweep records detection").mean;
        if mean < worst_ratio.1 {
            worst_ratio = (g.group.as_str(), mean);
        }
    }
    let acc_at = |key: &str| {
        sweep
            .group(key)
            .and_then(|g| g.detection_accuracy)
            .map(|m| m.mean)
            .expect("ratio present")
    };
    let band_ok = acc_at("ratio=0.1") >= acc_at("ratio=1.5") - 0.1;
    gate.report(
        2,
        "ratio sweep",
        worst_ratio.1 >= C2_ACCURACY_FLOOR && sweep_elapsed <= C2_TOTAL_RUNTIME_CAP && band_ok,
        format!(
            "worst ratio {} mean {:.4} (floor {C2_ACCURACY_FLOOR}), 150% mean {:.4}, \
             runtime {sweep_elapsed:?} (cap {C2_TOTAL_RUNTIME_CAP:?})",
            worst_ratio.0,
            worst_ratio.1,
            acc_at("ratio=1.5"),
        ),
    );

    // 3. Stationarity certificate for every path behind criteria 1 and 2.
    let mut worst_kkt = 0.0f64;
    let mut paths_checked = 0usize;
    for seed in EXPERIMENT_SEEDS {
        let ds = generate_synthetic(&SyntheticConfig::paper_fig1(seed)).unwrap();
        let pre = precondition(&ds.features).unwrap();
        let path = lasso_path(&pre, ds.labels.view()).unwrap();
        worst_kkt = worst_kkt.max(max_kkt_violation(&pre, ds.labels.view(), &path));
        paths_checked += 1;
    }
    for rec in &sweep.records {
        let ratio: f64 = rec
            .group
            .strip_prefix("ratio=")
            .unwrap()
            .parse()
            .expect("sweep group key");
        let cfg = SyntheticConfig {
            outlier_count_per_class: (ratio * 100.0).round() as usize,
            rng_seed: rec.seed,
            ..SyntheticConfig::paper_fig1(rec.seed)
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let pre = precondition(&ds.features).unwrap();
        let path = lasso_path(&pre, ds.labels.view()).unwrap();
        worst_kkt = worst_kkt.max(max_kkt_violation(&pre, ds.labels.view(), &path));
        paths_checked += 1;
    }
    gate.report(
        3,
        "stationarity certificate",
        worst_kkt <= C3_KKT_TOL,
        format!("worst violation {worst_kkt:.3e} over {paths_checked} paths (tol {C3_KKT_TOL:.0e})"),
    );

    // 4. The projector-design and kernel-basis formulations agree.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst_diff = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(10..40);
        let p = rng.gen_range(1..4);
        let phi = Array2::from_shape_fn((n, p), |_| normal.sample(&mut rng));
        let y = Array1::from_shape_fn(n, |_| normal.sample(&mut rng));
        let pre = precondition(&phi).unwrap();
        let lambda = rng.gen_range(0.01..0.5);
        let out = equivalence_check(&pre, y.view(), lambda).unwrap();
        worst_diff = worst_diff.max(out.max_diff);
    }
    gate.report(
        4,
        "formulation equivalence",
        worst_diff <= C4_COEFF_TOL,
        format!("max coefficient difference {worst_diff:.3e} over 50 instances (tol {C4_COEFF_TOL:.0e})"),
    );

    // 5. Iterative walk matches the resolvent oracle; full restart is exact.
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst_state_diff = 0.0f64;
    let mut identity_exact = true;
    for trial in 0..20 {
        let n = rng.gen_range(20..=200);
        let p = rng.gen_range(2..6);
        let feats = Array2::from_shape_fn((n, p), |_| normal.sample(&mut rng));
        let k = rng.gen_range(3..12).min(n - 1);
        let graph = build_graph(feats.view(), k).unwrap();
        let restart = [0.3, 0.5, 0.75][trial % 3];
        let states = lazy_random_walk(&graph, restart, 1e-12, 100_000).unwrap();
        let oracle = stationary_oracle(&graph, restart).unwrap();
        let diff = (states.matrix() - oracle.matrix())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        worst_state_diff = worst_state_diff.max(diff);
        if trial == 0 {
            let full_restart = lazy_random_walk(&graph, 1.0, 1e-12, 10).unwrap();
            identity_exact = full_restart.matrix() == &Array2::<f64>::eye(n);
        }
    }
    gate.report(
        5,
        "diffusion correctness",
        worst_state_diff <= C5_STATE_TOL && identity_exact,
        format!(
            "worst |iterative - resolvent| {worst_state_diff:.3e} over 20 graphs \
             (tol {C5_STATE_TOL:.0e}); full-restart identity exact: {identity_exact}"
        ),
    );

    // 6. Analytic embedding gradient vs central differences; fit descends.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(4..10);
        let d = rng.gen_range(1..4);
        let mut s = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.05..1.0));
        for mut row in s.rows_mut() {
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        let x = Array2::from_shape_fn((n, d), |_| 0.5 * normal.sample(&mut rng));
        let w = Array2::from_shape_fn((n, d), |_| 0.5 * normal.sample(&mut rng));
        let (_, gx, gw) = kl_objective_and_gradient(x.view(), w.view(), s.view()).unwrap();
        let h = 1e-5;
        let mut check = |mat: &Array2<f64>, grad: &Array2<f64>, is_x: bool| {
            for i in 0..n {
                for j in 0..d {
                    let mut plus = mat.clone();
                    plus[[i, j]] += h;
                    let mut minus = mat.clone();
                    minus[[i, j]] -= h;
                    let (fp, fm) = if is_x {
                        (
                            kl_objective_and_gradient(plus.view(), w.view(), s.view())
                                .unwrap()
                                .0,
                            kl_objective_and_gradient(minus.view(), w.view(), s.view())
                                .unwrap()
                                .0,
                        )
                    } else {
                        (
                            kl_objective_and_gradient(x.view(), plus.view(), s.view())
                                .unwrap()
                                .0,
                            kl_objective_and_gradient(x.view(), minus.view(), s.view())
                                .unwrap()
                                .0,
                        )
                    };
                    let fd = (fp - fm) / (2.0 * h);
                    let an = grad[[i, j]];
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                    worst_rel = worst_rel.max(rel);
                }
            }
        };
        check(&x, &gx, true);
        check(&w, &gw, false);
    }
    let mut descent_ok = true;
    for seed in 0..5u64 {
        let n = 30;
        let feats = Array2::from_shape_fn((n, 3), |_| normal.sample(&mut rng));
        let graph = build_graph(feats.view(), 6).unwrap();
        let states = lazy_random_walk(&graph, 0.5, 1e-10, 10_000).unwrap();
        let emb = fit_embedding(
            states.matrix().view(),
            2,
            &EmbedOptions {
                seed,
                ..EmbedOptions::default()
            },
        )
        .unwrap();
        descent_ok &= emb.final_kl() <= emb.initial_kl();
    }
    gate.report(
        6,
        "embedding gradient",
        worst_rel <= C6_GRAD_REL_TOL && descent_ok,
        format!(
            "worst relative gradient error {worst_rel:.3e} over 100 instances \
             (tol {C6_GRAD_REL_TOL:.0e}); objective non-increasing: {descent_ok}"
        ),
    );

    // 7. The full embed-detect-classify pipeline beats the raw baseline.
    let seeds: Vec<u64> = EXPERIMENT_SEEDS.collect();
    let raw = run_pipeline_experiment(
        &PipelineConfig::new(
            FeatureStage::Raw,
            RemovalStage::None,
            ClassifierStage::Linear,
            0,
        ),
        &seeds,
    )
    .unwrap();
    let full = run_pipeline_experiment(
        &PipelineConfig::new(
            FeatureStage::Tdca,
            RemovalStage::Plasso,
            ClassifierStage::Linear,
            0,
        ),
        &seeds,
    )
    .unwrap();
    let raw_mean = raw.groups[0].classifier_accuracy.unwrap().mean;
    let full_mean = full.groups[0].classifier_accuracy.unwrap().mean;
    gate.report(
        7,
        "pipeline ordering",
        full_mean >= raw_mean,
        format!(
            "embed+detect+classify mean accuracy {full_mean:.4} vs raw baseline \
             {raw_mean:.4} over {} seeds",
            seeds.len()
        ),
    );

    // 8. Projector hygiene and stochastic rows.
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst_idem = 0.0f64;
    let mut worst_sym = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(5..60);
        let p = rng.gen_range(1..4.min(n));
        let phi = Array2::from_shape_fn((n, p), |_| normal.sample(&mut rng));
        let pre = precondition(&phi).unwrap();
        let h = pre.hat_matrix();
        let hh = h.dot(&h);
        worst_idem = worst_idem.max(
            (&hh - &h)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
        worst_sym = worst_sym.max(
            (&h.t() - &h)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
    }
    let mut worst_row_sum = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(10..80);
        let p = rng.gen_range(2..5);
        let feats = Array2::from_shape_fn((n, p), |_| normal.sample(&mut rng));
        let graph = build_graph(feats.view(), rng.gen_range(3..9)).unwrap();
        let trans = graph.transition_matrix();
        for row in trans.rows() {
            worst_row_sum = worst_row_sum.max((row.sum() - 1.0).abs());
        }
    }
    gate.report(
        8,
        "numerical hygiene",
        worst_idem <= C8_IDEMPOTENCE_TOL
            && worst_sym <= C8_SYMMETRY_TOL
            && worst_row_sum <= C8_ROW_SUM_TOL,
        format!(
            "projector |H^2-H| {worst_idem:.3e} (tol {C8_IDEMPOTENCE_TOL:.0e}), \
             |H'-H| {worst_sym:.3e} (tol {C8_SYMMETRY_TOL:.0e}), \
             row-sum drift {worst_row_sum:.3e} (tol {C8_ROW_SUM_TOL:.0e})"
        ),
    );

    assert!(
        gate.failures.is_empty(),
        "acceptance criteria failed:\n{}",
        gate.failures.join("\n")
    );
}

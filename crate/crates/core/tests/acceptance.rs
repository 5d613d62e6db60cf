//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) before asserting.
//!
//! These runs are long on a single core; the Gaussian sweeps dominate.

use std::io::Write;
use std::process::Command;

use datashifts::measures::{cost_matrix, Domain, LabeledSample, Metric};
use datashifts::ot::{exact_w1, sinkhorn, SolverConfig};
use datashifts::seed::{child_seed, stream_rng};
use datashifts::shift::oracle::{total_point_shift_oracle, ConditionalLaw, LabelFunction, Noise};
use datashifts::shift::{concept_shift, plugin_xshift, EstimatorKind, ShiftOptions};
use datashifts::synth::{
    count_increases, fig1_cells, median, run_concentration, run_cpt_concentration, run_fig1,
    run_random_bound_validation, summarize_concentration, CptTaskSpec, Fig1Row, ValidationSummary,
};
use ndarray::{Array1, Array2};
use rand::Rng;

/// Seeds per cell for the zero-distance sweeps; each value is a median.
const SWEEP_SEEDS: u64 = 5;

fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{verdict} {name}: {detail}");
}

fn seeds(count: u64) -> Vec<u64> {
    (0..count).map(|k| child_seed(2024, k)).collect()
}

fn cell_median(rows: &[Fig1Row], kind: EstimatorKind, pick: impl Fn(&Fig1Row) -> bool) -> f64 {
    median(
        rows.iter()
            .filter(|r| r.estimator == kind && pick(r))
            .map(|r| r.estimate),
    )
}

#[test]
fn fig1_dimension_sweep() {
    let dims = [2usize, 10, 30, 50, 70];
    let cells: Vec<_> = fig1_cells(&dims, &[], &[]);
    let rows = run_fig1(&cells, 1e-3, &seeds(SWEEP_SEEDS)).unwrap();
    let plug: Vec<f64> = dims
        .iter()
        .map(|&d| cell_median(&rows, EstimatorKind::PlugIn, |r| r.d == d))
        .collect();
    let deb: Vec<f64> = dims
        .iter()
        .map(|&d| cell_median(&rows, EstimatorKind::Debiased, |r| r.d == d))
        .collect();
    let increasing = plug.windows(2).all(|w| w[1] > w[0]);
    let above = plug.iter().zip(&deb).all(|(p, q)| p > q);
    let small = deb.iter().all(|v| v.abs() <= 0.5);
    let pass = increasing && above && small;
    report(
        "fig1 dimension sweep",
        pass,
        &format!("plug-in {plug:.3?} debiased {deb:.3?}"),
    );
    assert!(pass);
}

#[test]
fn fig1_sample_size_sweep() {
    let sizes = [250usize, 500, 1000, 2000, 4000];
    let cells = fig1_cells(&[], &sizes, &[]);
    let rows = run_fig1(&cells, 1e-3, &seeds(SWEEP_SEEDS)).unwrap();
    let plug: Vec<f64> = sizes
        .iter()
        .map(|&n| cell_median(&rows, EstimatorKind::PlugIn, |r| r.n == n))
        .collect();
    let deb: Vec<f64> = sizes
        .iter()
        .map(|&n| cell_median(&rows, EstimatorKind::Debiased, |r| r.n == n))
        .collect();
    let drop = 1.0 - plug[4] / plug[0];
    let small = deb.iter().all(|v| v.abs() <= 0.5);
    let pass = drop < 0.25 && small;
    report(
        "fig1 sample size sweep",
        pass,
        &format!("plug-in {plug:.3?} (drop {:.1}%) debiased {deb:.3?}", 100.0 * drop),
    );
    assert!(pass);
}

#[test]
fn fig1_distance_sweep() {
    let offsets = [2.0, 4.0, 6.0, 8.0, 10.0];
    let cells = fig1_cells(&[], &[], &offsets);
    let rows = run_fig1(&cells, 1e-3, &seeds(20)).unwrap();
    let rel = |kind, t: f64| (cell_median(&rows, kind, |r| r.offset == t) - t).abs() / t;
    let deb: Vec<f64> = offsets.iter().map(|&t| rel(EstimatorKind::Debiased, t)).collect();
    let plug: Vec<f64> = offsets.iter().map(|&t| rel(EstimatorKind::PlugIn, t)).collect();
    let pass = deb.iter().all(|e| *e <= 0.15) && count_increases(&plug) <= 1;
    report(
        "fig1 distance sweep",
        pass,
        &format!("debiased rel. error {deb:.3?} plug-in rel. error {plug:.3?}"),
    );
    assert!(pass);
}

#[test]
fn solver_matches_exact_w1_on_small_instances() {
    let config = SolverConfig::with_beta(1e-4);
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let mut rng = stream_rng(child_seed(11, k), 0);
        let (n, m, d) = (
            rng.random_range(1..=8usize),
            rng.random_range(1..=8usize),
            rng.random_range(1..=3usize),
        );
        let a = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let b = Array2::from_shape_fn((m, d), |_| rng.random_range(-2.0..2.0));
        let weights = |len: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let w = Array1::from_shape_fn(len, |_| rng.random_range(0.1..1.0));
            let total = w.sum();
            w / total
        };
        let (mu, nu) = (weights(n, &mut rng), weights(m, &mut rng));
        let cost = cost_matrix(a.view(), b.view(), Metric::Euclidean).unwrap();
        let exact = exact_w1(&cost, mu.view(), nu.view()).unwrap();
        let plan = sinkhorn(&cost, mu.view(), nu.view(), &config).unwrap();
        worst = worst.max((plan.transport_cost - exact).abs());
    }
    let pass = worst <= 1e-3;
    report(
        "solver vs exact W1",
        pass,
        &format!("worst gap {worst:.2e} over 50 instances"),
    );
    assert!(pass);
}

#[test]
fn concept_shift_collapses_to_point_shift_on_shared_points() {
    let config = SolverConfig::with_beta(1e-4);
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let mut rng = stream_rng(child_seed(19, k), 0);
        let (n, d) = (rng.random_range(10..=60usize), rng.random_range(1..=4usize));
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0));
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let source_law = ConditionalLaw::deterministic(LabelFunction::Sine {
            weights: w.clone(),
            amplitude: rng.random_range(0.5..2.0),
            bias: 0.0,
        });
        let target_law = ConditionalLaw::deterministic(LabelFunction::Linear {
            weights: w,
            bias: rng.random_range(-1.0..1.0),
        });
        let label = |law: &ConditionalLaw, domain| {
            let y = law.sample_labels(x.view(), &mut stream_rng(0, 0)).unwrap();
            LabeledSample::new(x.clone(), Some(y), domain).unwrap()
        };
        let (source, target) = (label(&source_law, Domain::Source), label(&target_law, Domain::Target));
        let (_, plan) = plugin_xshift(&source, &target, Metric::Euclidean, &config).unwrap();
        let s_cpt = concept_shift(&source, &target, &plan, Metric::Euclidean).unwrap();
        let uniform = Array1::from_elem(n, 1.0 / n as f64);
        let oracle = total_point_shift_oracle(&source_law, &target_law, x.view(), uniform.view()).unwrap();
        worst = worst.max((s_cpt - oracle).abs());
    }
    let pass = worst <= 1e-3;
    report(
        "concept shift on shared points",
        pass,
        &format!("worst gap {worst:.2e} over 20 tasks"),
    );
    assert!(pass);
}

#[test]
fn error_bound_holds_on_random_tasks() {
    let options = ShiftOptions {
        solver: SolverConfig::with_beta(1e-3),
        ..ShiftOptions::default()
    };
    let rows = run_random_bound_validation(100, 400, 13, &options).unwrap();
    let summary = ValidationSummary::of(&rows);
    let pass = summary.trials == 100 && summary.holds >= 95 && summary.worst_relative_gap >= -0.02;
    report(
        "error bound validity",
        pass,
        &format!(
            "{}/{} hold, worst (B - err_T)/B = {:.3}",
            summary.holds, summary.trials, summary.worst_relative_gap
        ),
    );
    assert!(pass);
}

#[test]
fn concept_shift_bias_is_bracketed() {
    let task = CptTaskSpec {
        dimension: 1,
        mean_offset_norm: 0.5,
        source_law: ConditionalLaw {
            function: LabelFunction::Sine {
                weights: vec![1.0],
                amplitude: 1.0,
                bias: 0.0,
            },
            noise: Noise::Gaussian { sigma: 0.3 },
        },
        target_law: ConditionalLaw {
            function: LabelFunction::Linear {
                weights: vec![0.8],
                bias: 0.2,
            },
            noise: Noise::Uniform { half_width: 0.4 },
        },
    };
    let rows = run_cpt_concentration(&task, &[4000], &seeds(20), &SolverConfig::with_beta(1e-2)).unwrap();
    let inside = rows
        .iter()
        .filter(|r| r.deviation >= -0.05 && r.deviation <= r.bias_ceiling + 0.05)
        .count();
    let deviations: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let pass = inside * 100 >= 95 * rows.len();
    report(
        "concept shift bias bracket",
        pass,
        &format!(
            "{inside}/{} inside [-0.05, {:.3}], deviations {deviations:.3?}",
            rows.len(),
            rows[0].bias_ceiling + 0.05
        ),
    );
    assert!(pass);
}

#[test]
fn debiased_estimate_concentrates() {
    let rows = run_concentration(
        70,
        6.0,
        &[250, 500, 1000, 2000, 4000],
        &seeds(20),
        &SolverConfig::with_beta(1e-3),
    )
    .unwrap();
    let medians: Vec<f64> = summarize_concentration(&rows)
        .iter()
        .map(|s| s.median_abs_deviation)
        .collect();
    let inversions = count_increases(&medians);
    let pass = inversions <= 1 && medians.iter().all(|m| m.is_finite());
    report(
        "debiased concentration",
        pass,
        &format!("median |estimate - 6| {medians:.3?}, {inversions} inversion(s)"),
    );
    assert!(pass);
}

#[test]
fn cli_output_is_byte_identical_across_runs() {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let source = format!("{fixtures}/source.csv");
    let target = format!("{fixtures}/target.csv");
    let task = format!("{fixtures}/cpt_task.json");
    let invocations: Vec<Vec<&str>> = vec![
        vec!["xshift", "--source", &source, "--target", &target, "--seed", "3"],
        vec![
            "yshift",
            "--source",
            &source,
            "--target",
            &target,
            "--label-cols",
            "y",
            "--num-splits",
            "2",
        ],
        vec![
            "bound",
            "--source",
            &source,
            "--target",
            &target,
            "--label-cols",
            "y",
            "--prediction-col",
            "pred",
            "--lipschitz",
            r#"{"loss":{"kind":"absolute_error"},"l_h":1.0}"#,
        ],
        vec!["fig1", "--dims", "--offsets", "--sizes", "40", "--seeds", "2"],
        vec!["validate-bound", "--sample-size", "60", "--seeds", "3"],
        vec![
            "concentration",
            "--dim",
            "2",
            "--offset",
            "1",
            "--sizes",
            "40,80",
            "--seeds",
            "2",
        ],
        vec![
            "concentration",
            "--kind",
            "cpt",
            "--task",
            &task,
            "--sizes",
            "40",
            "--seeds",
            "2",
        ],
    ];
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_datashifts"))
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let mut differing = Vec::new();
    for args in &invocations {
        let first = run(args);
        assert!(!first.is_empty(), "{args:?} wrote nothing");
        if first != run(args) {
            differing.push(args[0]);
        }
    }
    let pass = differing.is_empty();
    report(
        "CLI determinism",
        pass,
        &format!("{} invocations, differing: {differing:?}", invocations.len()),
    );
    assert!(pass);
}

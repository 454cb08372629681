//! End-to-end behavior of experiment plans, tuning, sweeps and artifacts.

use std::path::{Path, PathBuf};

use dgmbb_core::graph::{metropolis_weights, Graph};
use dgmbb_core::harness::{
    run_experiment, sweep_alpha0, sweep_inner_loops, tune_constant_step, csv_string, ExperimentPlan, TuneOptions, CSV_HEADER,
};
use dgmbb_core::objective::{generate_sensing_instance, SensingSpec};
use dgmbb_core::solvers::{run, StepSizes};
use dgmbb_core::{Error, Method, SolverConfig};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn smoke_plan(output: Option<&Path>) -> ExperimentPlan {
    let mut plan = ExperimentPlan::from_file(&fixtures().join("smoke.toml")).unwrap();
    plan.output = output.map(Path::to_path_buf);
    plan
}

/// Set `DGMBB_UPDATE_GOLDEN=1` to rewrite the stored CSVs after an intended
/// numerical change.
#[test]
fn smoke_plan_reproduces_golden_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&smoke_plan(Some(dir.path()))).unwrap();
    let golden = fixtures().join("golden");
    let update = std::env::var_os("DGMBB_UPDATE_GOLDEN").is_some();
    if update {
        std::fs::create_dir_all(&golden).unwrap();
    }
    assert_eq!(outcome.runs.len(), 4);
    for run in &outcome.runs {
        let produced = run.csv.as_ref().unwrap();
        let name = produced.file_name().unwrap();
        let bytes = std::fs::read(produced).unwrap();
        if update {
            std::fs::write(golden.join(name), &bytes).unwrap();
            continue;
        }
        let want = std::fs::read(golden.join(name)).unwrap_or_else(|_| panic!("missing golden file {name:?}"));
        assert!(bytes == want, "{name:?} differs from the golden copy");
    }
}

#[test]
fn artifacts_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&smoke_plan(Some(dir.path()))).unwrap();
    assert!(outcome.invariant_failures().is_empty(), "{:?}", outcome.invariant_failures());

    let names: Vec<String> = outcome.runs.iter().map(|r| r.csv.as_ref().unwrap().file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["00_dgm-bb-c.csv", "01_atc-diging.csv", "02_extra.csv", "03_near-dgd_.csv"]);
    for run in &outcome.runs {
        let text = std::fs::read_to_string(run.csv.as_ref().unwrap()).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), run.record.rows.len());
    }
    // No temporary files survive the atomic writes.
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(leftovers.is_empty());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outcome.summary.unwrap()).unwrap()).unwrap();
    assert_eq!(summary["schema"], "dgmbb.summary.v1");
    assert_eq!(summary["runs"].as_array().unwrap().len(), 4);
    assert_eq!(summary["runs"][0]["method"], "dgm-bb-c");
    assert_eq!(summary["runs"][0]["rounds"], 2);
    assert!(summary["runs"][0]["rho"].is_number());
    assert!(summary["certificate"]["r_min"].is_number());
}

#[test]
fn runs_are_deterministic_and_start_at_unit_error() {
    let a = run_experiment(&smoke_plan(None)).unwrap();
    let b = run_experiment(&smoke_plan(None)).unwrap();
    for (x, y) in a.runs.iter().zip(&b.runs) {
        // NaN residuals make `PartialEq` on records useless; compare the CSV bytes.
        assert_eq!(csv_string(&x.record.rows), csv_string(&y.record.rows));
        assert_eq!(x.record.meta, y.record.meta);
        assert_eq!(x.record.rows[0].rel_err, 1.0);
        assert_eq!(x.record.rows[0].comm_rounds, 0);
    }
}

#[test]
fn cost_uses_the_plan_weights() {
    let mut plan = smoke_plan(None);
    plan.cost.c_c = 2.0;
    plan.cost.c_g = 0.5;
    let outcome = run_experiment(&plan).unwrap();
    for run in &outcome.runs {
        let n = run.record.meta.n as f64;
        for row in &run.record.rows {
            assert_eq!(row.cost, 2.0 * row.comm_rounds as f64 + 0.5 * row.grad_evals as f64 / n);
        }
        assert_eq!(run.record.meta.c_c, 2.0);
    }
}

#[test]
fn sweep_axes_expand_into_labelled_cells() {
    let mut plan = smoke_plan(None);
    plan.methods.truncate(1);
    plan.sweep.alpha0 = vec![0.5, 1.5];
    plan.sweep.rounds = vec![1, 3];
    let outcome = run_experiment(&plan).unwrap();
    let labels: Vec<&str> = outcome.runs.iter().map(|r| r.cell.label.as_str()).collect();
    assert_eq!(labels, ["dgm-bb-c_R1_a0p5", "dgm-bb-c_R1_a1p5", "dgm-bb-c_R3_a0p5", "dgm-bb-c_R3_a1p5"]);
    assert_eq!(outcome.record("dgm-bb-c_R3_a0p5").unwrap().meta.rounds, 3);
    assert_eq!(outcome.record("dgm-bb-c_R1_a1p5").unwrap().meta.initial_steps, vec![1.5; 3]);
}

#[test]
fn diverged_runs_are_kept_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = smoke_plan(Some(dir.path()));
    plan.methods.retain(|m| m.method == Method::Extra);
    plan.methods[0].step = Some(dgmbb_core::harness::StepSpec::Value(6.0));
    plan.stop.max_iters = 500;
    let err = run_experiment(&plan).unwrap_err();
    let Error::Diverged { method, record, .. } = err else { panic!("expected divergence, got {err}") };
    assert_eq!(method, "extra");
    let text = std::fs::read_to_string(dir.path().join("00_extra.csv")).unwrap();
    assert_eq!(text.lines().count(), record.rows.len() + 1);
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"diverged\""));
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = run_experiment(&smoke_plan(Some(&blocker.join("out")))).unwrap_err();
    assert!(matches!(err, Error::Write { .. }), "{err}");
}

/// Centralized gradient descent on a quadratic with spectrum `{μ, L}`
/// contracts by `max(|1 − αμ|, |1 − αL|)`, minimized at `2/(μ + L)`.
#[test]
fn tuning_a_single_agent_brackets_the_classical_optimum() {
    let spec = SensingSpec { n: 1, m: 4, p: 2, lipschitz: 1.0, mu: 0.5, noise: 0.0 };
    let inst = generate_sensing_instance(&spec, 4).unwrap();
    let w = metropolis_weights(&Graph::path(1).unwrap()).unwrap();
    let opts = TuneOptions::default();
    let grid = opts.grid(1.0);
    let base = SolverConfig::new(Method::Dgd, StepSizes::Uniform(1.0));
    let res = tune_constant_step(&base, &inst, &w, inst.optimum(), &grid, &opts).unwrap();
    assert!(res.converged);
    let best = 2.0 / (spec.mu + spec.lipschitz);
    let below = grid.iter().copied().filter(|a| *a <= best).fold(f64::NAN, f64::max);
    let above = grid.iter().copied().filter(|a| *a >= best).fold(f64::NAN, f64::min);
    assert!(res.alpha == below || res.alpha == above, "tuned {} not in [{below}, {above}]", res.alpha);

    // The winner needs no more iterations than any other grid point.
    let winner = res.iterations.unwrap();
    for p in &res.grid {
        if let Some(it) = p.iterations {
            assert!(it >= winner);
        }
    }
}

#[test]
fn one_point_grid_returns_that_point() {
    let spec = SensingSpec { n: 4, m: 3, p: 2, lipschitz: 1.0, mu: 0.5, noise: 0.01 };
    let inst = generate_sensing_instance(&spec, 9).unwrap();
    let w = metropolis_weights(&Graph::complete(4).unwrap()).unwrap();
    let opts = TuneOptions { points: 1, lo: 0.5, ..TuneOptions::default() };
    let base = SolverConfig::new(Method::Diging, StepSizes::Uniform(1.0));
    let res = tune_constant_step(&base, &inst, &w, inst.optimum(), &opts.grid(1.0), &opts).unwrap();
    assert_eq!(res.alpha, 0.5);
    assert_eq!(res.grid.len(), 1);
}

#[test]
fn single_point_sweeps_equal_plain_runs() {
    let spec = SensingSpec { n: 5, m: 4, p: 3, lipschitz: 1.0, mu: 0.4, noise: 0.01 };
    let inst = generate_sensing_instance(&spec, 2).unwrap();
    let w = metropolis_weights(&Graph::path(5).unwrap()).unwrap();
    let base = SolverConfig::new(Method::DgmBbC, StepSizes::Uniform(0.7)).with_rounds(2).with_stop(300, 1e-10);
    let plain = run(&base, &inst, &w, inst.optimum()).unwrap();

    let a = sweep_alpha0(&base, &[0.7], 1e-8, &inst, &w, inst.optimum()).unwrap();
    assert_eq!(a.records[0], plain);
    assert_eq!(a.spread, Some(1.0));
    let r = sweep_inner_loops(&base, &[2], 1e-8, Some(2), &inst, &w, inst.optimum()).unwrap();
    assert_eq!(r.records[0], plain);
    assert_eq!(r.points[0].iterations, plain.iterations_to(1e-8));
    assert!(sweep_inner_loops(&SolverConfig::new(Method::Dgd, StepSizes::Uniform(0.1)), &[1], 1e-8, None, &inst, &w, inst.optimum()).is_err());
}

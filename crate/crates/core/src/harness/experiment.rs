use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

use super::output::{emit_csv, emit_summary};
use super::plan::{ExperimentPlan, MethodSpec, RoundsSpec, Setup, StepSpec, DEFAULT_ALPHA0};
use super::record::RunRecord;
use super::sweep::{iteration_spread, SweepPoint};
use super::tune::{tune_constant_step, TuneResult};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::rng::{derive_seed, seeded, uniform, STREAM_STEPS};
use crate::solvers::{run, Method, SolverConfig, StepSizes};
use crate::theory::{certify, Certificate};

/// One fully resolved run of a plan.
#[derive(Debug, Clone)]
pub struct Cell {
    /// Index of the originating entry in `plan.methods`.
    pub entry: usize,
    pub label: String,
    pub config: SolverConfig,
    /// Axis value this cell was expanded for, if any.
    pub axis_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cell: Cell,
    pub record: RunRecord,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub setup: Setup,
    /// Certificate at `R_min` with the worst-case step `1/μ`.
    pub certificate: Certificate,
    /// Tuned steps keyed by `(method, rounds)` label.
    pub tuned: BTreeMap<String, TuneResult>,
    pub runs: Vec<RunOutcome>,
    pub summary: Option<PathBuf>,
}

impl ExperimentOutcome {
    /// `(label, message)` for every asserted invariant that failed.
    pub fn invariant_failures(&self) -> Vec<(String, String)> {
        self.runs
            .iter()
            .flat_map(|r| r.record.invariant_failures().into_iter().map(move |m| (r.cell.label.clone(), m)))
            .collect()
    }

    pub fn record(&self, label: &str) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.cell.label == label).map(|r| &r.record)
    }
}

fn resolved_rounds(spec: &MethodSpec, setup: &Setup) -> usize {
    if !spec.method.uses_inner_rounds() {
        return 1;
    }
    match spec.rounds_spec() {
        RoundsSpec::Fixed(r) => r,
        RoundsSpec::Auto(_) => setup.r_min,
    }
}

fn tune_key(method: Method, rounds: usize) -> String {
    if method.uses_inner_rounds() {
        format!("{method}/R{rounds}")
    } else {
        method.to_string()
    }
}

fn fmt_axis(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p")
}

/// Expands method entries against the sweep axes, leaving constant steps
/// as placeholders to be filled in after tuning.
pub fn expand_cells(plan: &ExperimentPlan, setup: &Setup) -> Vec<Cell> {
    let mut cells = Vec::new();
    for (entry, spec) in plan.methods.iter().enumerate() {
        let base_rounds = resolved_rounds(spec, setup);
        let rounds_axis: Vec<Option<usize>> = if spec.method.uses_inner_rounds() && !plan.sweep.rounds.is_empty() {
            plan.sweep.rounds.iter().map(|&r| Some(r)).collect()
        } else {
            vec![None]
        };
        let alpha_axis: Vec<Option<f64>> = if spec.method == Method::DgmBbC && !plan.sweep.alpha0.is_empty() {
            plan.sweep.alpha0.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        };
        for r in &rounds_axis {
            for a in &alpha_axis {
                let mut label = spec.label();
                if let Some(r) = r {
                    label.push_str(&format!("_R{r}"));
                }
                if let Some(a) = a {
                    label.push_str(&format!("_a{}", fmt_axis(*a)));
                }
                let alpha0 = a.or(spec.alpha0).unwrap_or(DEFAULT_ALPHA0);
                let mut config = SolverConfig::new(spec.method, StepSizes::Uniform(alpha0))
                    .with_rounds(r.unwrap_or(base_rounds))
                    .with_stop(plan.stop.max_iters, plan.stop.target);
                if let Some(bb) = spec.bb {
                    config = config.with_bb(bb);
                }
                let axis_value = a.or(r.map(|r| r as f64));
                cells.push(Cell { entry, label, config, axis_value });
            }
        }
    }
    cells
}

fn perturbed(alpha: f64, range: Option<[f64; 2]>, n: usize, plan_seed: u64) -> StepSizes {
    match range {
        None => StepSizes::Uniform(alpha),
        Some([lo, hi]) => {
            // Every perturbed method sees the same multipliers.
            let mut rng = seeded(derive_seed(plan_seed, STREAM_STEPS));
            StepSizes::PerAgent((0..n).map(|_| alpha * uniform(&mut rng, lo, hi)).collect())
        }
    }
}

fn label_file_name(index: usize, label: &str) -> String {
    let clean: String =
        label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("{index:02}_{clean}.csv")
}

/// Executes every cell of `plan`: tunes constant steps, runs all cells in
/// parallel, attaches certificates, and writes one CSV per run plus
/// `summary.json` when the plan has an output directory.
///
/// A diverged run is kept (its partial record is written) and its error is
/// returned after all artifacts are on disk.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutcome> {
    plan.validate()?;
    let setup = plan.setup()?;
    let inst = &setup.instance;
    let x_star = inst.optimum();
    let n = inst.agents();
    let mut cells = expand_cells(plan, &setup);

    // Tune each distinct (method, R) that asks for it.
    let mut to_tune: BTreeMap<String, SolverConfig> = BTreeMap::new();
    for cell in &cells {
        let spec = &plan.methods[cell.entry];
        if spec.method.uses_constant_step() && spec.step_spec() == StepSpec::Tuned(super::plan::Tuned::Tuned) {
            to_tune.entry(tune_key(spec.method, cell.config.rounds)).or_insert_with(|| cell.config.clone());
        }
    }
    let grid = plan.tuning.grid(inst.lipschitz());
    let tuned: BTreeMap<String, TuneResult> = to_tune
        .into_par_iter()
        .map(|(key, base)| {
            let t = tune_constant_step(&base, inst, &setup.weights, x_star, &grid, &plan.tuning)?;
            log::info!("tuned {key}: alpha={:.6e} ({:?} iterations)", t.alpha, t.iterations);
            Ok((key, t))
        })
        .collect::<Result<_>>()?;

    for cell in &mut cells {
        let spec = &plan.methods[cell.entry];
        if !spec.method.uses_constant_step() {
            continue;
        }
        let alpha = match spec.step_spec() {
            StepSpec::Value(a) => a,
            StepSpec::Tuned(_) => tuned[&tune_key(spec.method, cell.config.rounds)].alpha,
        };
        cell.config.steps = perturbed(alpha, spec.perturbation(), n, plan.seed);
    }

    let results: Vec<(Cell, Result<RunRecord>)> = cells
        .into_par_iter()
        .map(|cell| {
            let res = run(&cell.config, inst, &setup.weights, x_star);
            (cell, res)
        })
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    let mut first_abort: Option<Error> = None;
    for (cell, res) in results {
        let mut record = match res {
            Ok(r) => r,
            Err(Error::Diverged { method, iteration, rel_err, record }) => {
                let rec = (*record).clone();
                if first_abort.is_none() {
                    first_abort = Some(Error::Diverged { method, iteration, rel_err, record });
                }
                rec
            }
            Err(e) => return Err(e),
        };
        annotate(&mut record, plan, &setup)?;
        runs.push(RunOutcome { cell, record, csv: None });
    }

    let certificate = certify(&setup.constants, setup.weights.delta(), setup.r_min, 1.0 / setup.constants.mu)?;
    let mut outcome = ExperimentOutcome { setup, certificate, tuned, runs, summary: None };
    if let Some(dir) = plan.output_dir() {
        std::fs::create_dir_all(&dir).map_err(|source| Error::Write { path: dir.clone(), source })?;
        for (i, run) in outcome.runs.iter_mut().enumerate() {
            let path = dir.join(label_file_name(i, &run.cell.label));
            emit_csv(&run.record, &path)?;
            run.csv = Some(path);
        }
        let path = dir.join("summary.json");
        emit_summary(
            outcome.runs.iter().map(|r| (r.cell.label.as_str(), &r.record)),
            summary_extra(plan, &outcome),
            &path,
        )?;
        outcome.summary = Some(path);
    }
    match first_abort {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

fn annotate(record: &mut RunRecord, plan: &ExperimentPlan, setup: &Setup) -> Result<()> {
    record.set_cost_weights(plan.cost.c_c, plan.cost.c_g);
    record.meta.graph_seed = setup.graph_seed;
    record.meta.instance_seed = setup.instance_seed;
    record.meta.mean_degree = setup.graph.as_ref().map(|g| g.mean_degree());
    if record.meta.method == Method::DgmBbC && record.diagnostics.alpha_max > 0.0 {
        let cert = certify(&setup.constants, setup.weights.delta(), record.meta.rounds, record.diagnostics.alpha_max)?
            .with_mean_step(record.diagnostics.mean_alpha_max);
        record.meta.certificate = Some(cert);
    }
    Ok(())
}

fn summary_extra(plan: &ExperimentPlan, outcome: &ExperimentOutcome) -> serde_json::Value {
    let setup = &outcome.setup;
    let target = plan.sweep_target();
    let mut sweeps = Vec::new();
    for (entry, spec) in plan.methods.iter().enumerate() {
        let points: Vec<SweepPoint> = outcome
            .runs
            .iter()
            .filter(|r| r.cell.entry == entry && r.cell.axis_value.is_some())
            .map(|r| {
                let hit = r.record.first_reaching(target);
                SweepPoint {
                    value: r.cell.axis_value.unwrap_or(f64::NAN),
                    iterations: hit.map(|h| h.k),
                    comm_rounds: hit.map(|h| h.comm_rounds),
                    grad_evals: hit.map(|h| h.grad_evals),
                    cost: hit.map(|h| h.cost),
                }
            })
            .collect();
        if !points.is_empty() {
            sweeps.push(serde_json::json!({
                "label": spec.label(),
                "target": target,
                "spread": iteration_spread(&points),
                "points": points,
            }));
        }
    }
    serde_json::json!({
        "name": plan.name,
        "seed": plan.seed,
        "instance_seed": setup.instance_seed,
        "graph_seed": setup.graph_seed,
        "n": setup.constants.n,
        "p": setup.instance.dim(),
        "L": setup.constants.lipschitz,
        "mu": setup.constants.mu,
        "delta": setup.weights.delta(),
        "mean_degree": setup.graph.as_ref().map(|g| g.mean_degree()),
        "r_min": setup.r_min,
        "certificate": outcome.certificate.to_json(),
        "tuned_steps": outcome.tuned.iter().map(|(k, t)| (k.clone(), serde_json::json!({
            "alpha": t.alpha,
            "iterations": t.iterations,
            "converged": t.converged,
        }))).collect::<serde_json::Map<_, _>>(),
        "sweeps": sweeps,
    })
}

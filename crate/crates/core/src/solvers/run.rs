use nalgebra::{DMatrix, DVector};

use super::{step, Method, Mixing, SolverConfig, SolverState};
use crate::bb::assert_bb_bounds;
use crate::error::{Error, Result};
use crate::graph::WeightMatrix;
use crate::harness::record::{MetricsRow, RunDiagnostics, RunMeta, RunRecord, RunStatus, BB_BOUND_TOL};
use crate::linalg::{column_mean, consensus_violation};
use crate::objective::Objective;

/// `‖ȳ − (1/n)1ᵀ∇f(x)‖` for a tracking state.
pub fn tracking_error(state: &SolverState) -> Option<f64> {
    let y = state.y.as_ref()?;
    Some((column_mean(y) - column_mean(&state.grad)).norm())
}

/// Runs from `x_0 = 0`.
pub fn run<O: Objective + ?Sized>(
    config: &SolverConfig,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
) -> Result<RunRecord> {
    let x0 = DMatrix::zeros(objective.agents(), objective.dim());
    run_from(config, objective, weights, x_star, x0)
}

struct Recorder<'a> {
    x_star: &'a DVector<f64>,
    initial_error: f64,
    n: f64,
    c_c: f64,
    c_g: f64,
}

impl Recorder<'_> {
    fn distance(&self, x: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for c in 0..x.ncols() {
            for i in 0..x.nrows() {
                let d = x[(i, c)] - self.x_star[c];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    fn row(&self, state: &SolverState) -> MetricsRow {
        let mean_alpha = state.alphas.mean();
        let max_alpha = state.alphas.max();
        MetricsRow {
            k: state.k,
            rel_err: self.distance(&state.x) / self.initial_error,
            grad_evals: state.grad_evals,
            comm_rounds: state.comms,
            cost: self.c_c * state.comms as f64 + self.c_g * state.grad_evals as f64 / self.n,
            mean_alpha,
            max_alpha,
            v1: consensus_violation(&state.x),
            v2: state.y.as_ref().map_or(f64::NAN, consensus_violation),
            v3: (column_mean(&state.x) - self.x_star).norm(),
        }
    }
}

/// Iterates `config.method` from `x0` until the relative error reaches the
/// target or the iteration cap. Cost weights are `c_c = c_g = 1`; the harness
/// rescales them when a plan says otherwise.
pub fn run_from<O: Objective + ?Sized>(
    config: &SolverConfig,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
    x0: DMatrix<f64>,
) -> Result<RunRecord> {
    config.validate()?;
    let n = objective.agents();
    if weights.n() != n {
        return Err(Error::DimensionMismatch(format!("W is {}x{0}, objective has {n} agents", weights.n())));
    }
    if x_star.len() != objective.dim() {
        return Err(Error::DimensionMismatch("x* has the wrong dimension".into()));
    }
    let alphas = config.steps.resolve(n)?;
    let mixing = Mixing::new(weights);
    let mut state = SolverState::new(objective, x0, alphas.clone(), config.method.tracks_gradient())?;

    let mut rec = Recorder { x_star, initial_error: 0.0, n: n as f64, c_c: 1.0, c_g: 1.0 };
    rec.initial_error = rec.distance(&state.x);
    if rec.initial_error == 0.0 {
        return Err(Error::invalid("x0 already equals x*; relative error undefined"));
    }

    let (lipschitz, mu) = (objective.lipschitz(), objective.strong_convexity());
    let step_cap = 2.0 / lipschitz - mu / (lipschitz * lipschitz);
    let mut diagnostics = RunDiagnostics {
        max_tracking_error: tracking_error(&state),
        ..Default::default()
    };
    let observe = |state: &SolverState, diagnostics: &mut RunDiagnostics| {
        let bb_computed = config.method == Method::DgmBbC && state.k >= 1;
        if bb_computed || config.method != Method::DgmBbC {
            diagnostics.alpha_max = diagnostics.alpha_max.max(state.alphas.max());
            diagnostics.mean_alpha_max = diagnostics.mean_alpha_max.max(state.alphas.mean());
        }
        if bb_computed {
            diagnostics.bb_bound_violations +=
                state.alphas.iter().filter(|&&a| !assert_bb_bounds(a, lipschitz, mu, BB_BOUND_TOL)).count() as u64;
        }
        if state.alphas.mean() > step_cap + 1e-12 {
            diagnostics.step_condition_violations += 1;
        }
        if let Some(t) = tracking_error(state) {
            let m = diagnostics.max_tracking_error.get_or_insert(0.0);
            *m = m.max(t);
        }
    };
    observe(&state, &mut diagnostics);

    let mut rows = vec![rec.row(&state)];
    let mut status = RunStatus::MaxIterations;
    loop {
        let last = rows[rows.len() - 1].rel_err;
        if last <= config.stop.target {
            status = RunStatus::Converged;
            break;
        }
        if state.k >= config.stop.max_iters {
            break;
        }
        step(config, &mut state, objective, &mixing);
        observe(&state, &mut diagnostics);
        let row = rec.row(&state);
        rows.push(row);
        if !(row.rel_err <= config.stop.divergence) {
            status = RunStatus::Diverged;
            break;
        }
    }
    diagnostics.bb_fallbacks = state.bb_fallbacks;

    let record = RunRecord {
        meta: RunMeta {
            method: config.method,
            rounds: config.effective_rounds(),
            bb: (config.method == Method::DgmBbC).then_some(config.bb),
            n,
            p: objective.dim(),
            lipschitz,
            mu,
            delta: weights.delta(),
            mean_degree: None,
            graph_seed: None,
            instance_seed: None,
            c_c: 1.0,
            c_g: 1.0,
            initial_steps: alphas.iter().copied().collect(),
            target: config.stop.target,
            certificate: None,
        },
        status,
        rows,
        diagnostics,
    };
    if status == RunStatus::Diverged {
        let last = record.final_row();
        return Err(Error::Diverged {
            method: config.method.name().to_string(),
            iteration: last.k,
            rel_err: last.rel_err,
            record: Box::new(record),
        });
    }
    Ok(record)
}

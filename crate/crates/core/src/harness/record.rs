use serde::{Deserialize, Serialize};

use crate::bb::BbVariant;
use crate::solvers::Method;
use crate::theory::Certificate;

/// One row of the metrics stream, taken after `k` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub k: usize,
    /// `‖x_k − x*‖_F / ‖x_0 − x*‖_F` over the stacked agent states.
    pub rel_err: f64,
    pub grad_evals: u64,
    pub comm_rounds: u64,
    /// `c_c·comm_rounds + c_g·grad_evals/n`.
    pub cost: f64,
    /// Mean and max of the step sizes `α_k^i` held at iteration `k`.
    pub mean_alpha: f64,
    pub max_alpha: f64,
    /// `‖x_k − 1x̄_k‖`.
    pub v1: f64,
    /// `‖y_k − 1ȳ_k‖`; NaN for methods without a tracker.
    pub v2: f64,
    /// `‖x̄_k − x*‖`.
    pub v3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: Method,
    /// Inner consensus rounds actually used per phase.
    pub rounds: usize,
    pub bb: Option<BbVariant>,
    pub n: usize,
    pub p: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub mu: f64,
    pub delta: f64,
    pub mean_degree: Option<f64>,
    pub graph_seed: Option<u64>,
    pub instance_seed: Option<u64>,
    pub c_c: f64,
    pub c_g: f64,
    /// `α₀` (DGM-BB-C) or the constant steps, per agent.
    pub initial_steps: Vec<f64>,
    pub target: f64,
    /// Certificate evaluated with the run's realized step statistics.
    pub certificate: Option<Certificate>,
}

/// Run-level statistics and invariant checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// `max_k ‖ȳ_k − (1/n)1ᵀ∇f(x_k)‖` for tracking methods.
    pub max_tracking_error: Option<f64>,
    pub bb_fallbacks: u64,
    /// BB steps outside `[1/L − 1e-9, 1/μ + 1e-9]` (iterations `k ≥ 1`).
    pub bb_bound_violations: u64,
    /// Iterations with `(1/n)Σα_k^i > 2/L − μ/L²`. Flagged, not enforced.
    pub step_condition_violations: u64,
    /// Largest step held by any agent (BB-computed steps only for DGM-BB-C).
    pub alpha_max: f64,
    /// Largest network-mean step.
    pub mean_alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub status: RunStatus,
    pub rows: Vec<MetricsRow>,
    pub diagnostics: RunDiagnostics,
}

impl RunRecord {
    /// Completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("a record always holds row 0")
    }

    pub fn final_rel_err(&self) -> f64 {
        self.final_row().rel_err
    }

    /// First row at or below `target`.
    pub fn first_reaching(&self, target: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.rel_err <= target)
    }

    pub fn iterations_to(&self, target: f64) -> Option<usize> {
        self.first_reaching(target).map(|r| r.k)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rel_err).collect()
    }

    /// Recomputes the cost column as `c_c·comm_rounds + c_g·grad_evals/n`.
    pub fn set_cost_weights(&mut self, c_c: f64, c_g: f64) {
        let n = self.meta.n as f64;
        for r in &mut self.rows {
            r.cost = c_c * r.comm_rounds as f64 + c_g * r.grad_evals as f64 / n;
        }
        self.meta.c_c = c_c;
        self.meta.c_g = c_g;
    }

    /// The invariants a finished run must satisfy: BB bounds for DGM-BB-C,
    /// the tracking identity for tracking methods, and a vanishing residual
    /// triple whenever the run converged to `1e-10` or better.
    pub fn invariant_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = &self.diagnostics;
        if d.bb_bound_violations > 0 {
            out.push(format!("{} BB steps outside [1/L, 1/mu]", d.bb_bound_violations));
        }
        if let Some(t) = d.max_tracking_error {
            if !(t <= TRACKING_TOL) {
                out.push(format!("gradient tracking error {t:e} > {TRACKING_TOL:e}"));
            }
        }
        if self.meta.method == Method::DgmBbC && self.status == RunStatus::Converged && self.meta.target <= 1e-10 {
            let last = self.final_row();
            if !(last.v1 < RESIDUAL_TOL && last.v2 < RESIDUAL_TOL && last.v3 < RESIDUAL_TOL) {
                out.push(format!(
                    "residual triple ({:e}, {:e}, {:e}) not below {RESIDUAL_TOL:e}",
                    last.v1, last.v2, last.v3
                ));
            }
        }
        out
    }
}

/// Tolerance for `‖ȳ_k − (1/n)1ᵀ∇f(x_k)‖`.
pub const TRACKING_TOL: f64 = 1e-10;
/// Residual triple bound at termination of a converged run.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Slack on the BB step bounds.
pub const BB_BOUND_TOL: f64 = 1e-9;

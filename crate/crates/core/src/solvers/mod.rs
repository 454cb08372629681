//! Synchronous, lock-step simulations of the distributed methods.
//!
//! All methods share [`SolverState`]: the stacked iterates `X` (row `i` is
//! agent `i`), the stacked local gradients, the previous iterate/gradient for
//! curvature pairs, an optional gradient tracker `Y`, per-agent step sizes and
//! the communication/gradient counters. One communication round is one
//! multiplication by `W`.

mod consensus;
mod primal;
mod run;
mod tracking;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bb::BbVariant;
use crate::error::{Error, Result};
use crate::objective::Objective;

pub use consensus::{consensus_sweep, Mixing};
pub use primal::{dgd_step, extra_step, near_dgd_plus_step};
pub use run::{run, run_from, tracking_error};
pub use tracking::{atc_diging_step, dgm_bb_c_step, dgm_c_step, diging_step, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dgm-bb-c")]
    DgmBbC,
    #[serde(rename = "dgm-c")]
    DgmC,
    #[serde(rename = "atc-diging")]
    AtcDiging,
    #[serde(rename = "diging")]
    Diging,
    #[serde(rename = "extra")]
    Extra,
    #[serde(rename = "dgd")]
    Dgd,
    #[serde(rename = "near-dgd+")]
    NearDgdPlus,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::DgmBbC,
        Method::DgmC,
        Method::AtcDiging,
        Method::Diging,
        Method::Extra,
        Method::Dgd,
        Method::NearDgdPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DgmBbC => "dgm-bb-c",
            Method::DgmC => "dgm-c",
            Method::AtcDiging => "atc-diging",
            Method::Diging => "diging",
            Method::Extra => "extra",
            Method::Dgd => "dgd",
            Method::NearDgdPlus => "near-dgd+",
        }
    }

    /// Methods that carry a gradient tracker `Y`.
    pub fn tracks_gradient(self) -> bool {
        matches!(self, Method::DgmBbC | Method::DgmC | Method::AtcDiging | Method::Diging)
    }

    /// Methods whose step size is a constant chosen up front.
    pub fn uses_constant_step(self) -> bool {
        self != Method::DgmBbC
    }

    /// Methods that honour the configured number of inner consensus rounds.
    pub fn uses_inner_rounds(self) -> bool {
        matches!(self, Method::DgmBbC | Method::DgmC)
    }

    /// Communication rounds spent by iteration `k` (0-based) with `rounds` inner rounds.
    pub fn comms_per_iteration(self, k: usize, rounds: usize) -> u64 {
        match self {
            Method::DgmBbC | Method::DgmC => 2 * rounds as u64,
            Method::AtcDiging | Method::Diging => 2,
            Method::Extra | Method::Dgd => 1,
            Method::NearDgdPlus => k as u64 + 1,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key || (key == "near-dgd-plus" && *m == Method::NearDgdPlus))
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Initial (DGM-BB-C) or constant (all other methods) step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSizes {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

impl StepSizes {
    pub fn resolve(&self, n: usize) -> Result<DVector<f64>> {
        let v = match self {
            StepSizes::Uniform(a) => DVector::from_element(n, *a),
            StepSizes::PerAgent(v) if v.len() == n => DVector::from_column_slice(v),
            StepSizes::PerAgent(v) => {
                return Err(Error::DimensionMismatch(format!("{} step sizes for {n} agents", v.len())))
            }
        };
        if v.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("step sizes must be positive and finite"));
        }
        Ok(v)
    }
}

/// Iteration cap and stopping accuracy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once the relative error is at or below this value.
    pub target: f64,
    /// Abort when the relative error exceeds this value.
    pub divergence: f64,
}

/// Relative-error floor; double precision gives nothing useful below it.
pub const ERROR_FLOOR: f64 = 1e-12;
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_iters: 1000, target: ERROR_FLOOR, divergence: DIVERGENCE_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Inner consensus rounds `R` per phase (DGM-BB-C, DGM-C).
    pub rounds: usize,
    pub bb: BbVariant,
    /// `α₀` for DGM-BB-C; the constant steps otherwise.
    pub steps: StepSizes,
    pub stop: StopRule,
}

impl SolverConfig {
    pub fn new(method: Method, steps: StepSizes) -> Self {
        SolverConfig { method, rounds: 1, bb: BbVariant::Short, steps, stop: StopRule::default() }
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_bb(mut self, bb: BbVariant) -> Self {
        self.bb = bb;
        self
    }

    pub fn with_stop(mut self, max_iters: usize, target: f64) -> Self {
        self.stop.max_iters = max_iters;
        self.stop.target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("inner consensus rounds R must be at least 1"));
        }
        if !(self.stop.target >= 0.0) || !(self.stop.divergence > 1.0) {
            return Err(Error::invalid("invalid stopping rule"));
        }
        Ok(())
    }

    /// Rounds actually used per phase (ATC-DIGing is DGM-C with `R = 1`).
    pub fn effective_rounds(&self) -> usize {
        if self.method.uses_inner_rounds() {
            self.rounds
        } else {
            1
        }
    }
}

/// Stacked state of every agent at iteration `k`.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// `x_k`, row `i` = `x_k^i`.
    pub x: DMatrix<f64>,
    pub x_prev: DMatrix<f64>,
    /// `∇f(x_k)`, row `i` = `∇f_i(x_k^i)`.
    pub grad: DMatrix<f64>,
    pub grad_prev: DMatrix<f64>,
    /// Gradient tracker `y_k`, for tracking methods.
    pub y: Option<DMatrix<f64>>,
    /// Step sizes `α_k^i` the next iteration will use.
    pub alphas: DVector<f64>,
    pub k: usize,
    pub comms: u64,
    pub grad_evals: u64,
    /// BB evaluations that fell back to `1/L` or reused the previous step.
    pub bb_fallbacks: u64,
    // EXTRA keeps `W x_{k-1}` so each iteration needs one round only.
    mixed_prev: Option<DMatrix<f64>>,
}

impl SolverState {
    /// Initial state: `y_0 = ∇f(x_0)` when `tracking`; counts `n` gradient
    /// evaluations.
    pub fn new<O: Objective + ?Sized>(
        objective: &O,
        x0: DMatrix<f64>,
        alphas: DVector<f64>,
        tracking: bool,
    ) -> Result<Self> {
        let (n, p) = (objective.agents(), objective.dim());
        if x0.shape() != (n, p) {
            return Err(Error::DimensionMismatch(format!(
                "x0 is {:?}, objective is {n}x{p}",
                x0.shape()
            )));
        }
        if alphas.len() != n {
            return Err(Error::DimensionMismatch(format!("{} step sizes for {n} agents", alphas.len())));
        }
        let grad = objective.stacked_gradient(&x0);
        Ok(SolverState {
            x_prev: x0.clone(),
            x: x0,
            grad_prev: grad.clone(),
            y: tracking.then(|| grad.clone()),
            grad,
            alphas,
            k: 0,
            comms: 0,
            grad_evals: n as u64,
            bb_fallbacks: 0,
            mixed_prev: None,
        })
    }

    pub fn agents(&self) -> usize {
        self.x.nrows()
    }

    /// Shifts the history and installs the new iterate with its gradients.
    fn install(&mut self, x_next: DMatrix<f64>, grad_next: DMatrix<f64>) {
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.grad_prev = std::mem::replace(&mut self.grad, grad_next);
        self.k += 1;
    }

    /// `n` local gradient evaluations at `x`.
    fn evaluate<O: Objective + ?Sized>(&mut self, objective: &O, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.grad_evals += x.nrows() as u64;
        objective.stacked_gradient(x)
    }

    /// `x − diag(α) v`.
    fn descend(&self, x: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for c in 0..out.ncols() {
            for i in 0..out.nrows() {
                out[(i, c)] -= self.alphas[i] * v[(i, c)];
            }
        }
        out
    }
}

/// Dispatches one iteration of `config.method`.
pub fn step<O: Objective + ?Sized>(
    config: &SolverConfig,
    state: &mut SolverState,
    objective: &O,
    mixing: &Mixing,
) -> StepOutcome {
    match config.method {
        Method::DgmBbC => dgm_bb_c_step(state, objective, mixing, config.rounds, config.bb),
        Method::DgmC => dgm_c_step(state, objective, mixing, config.rounds),
        Method::AtcDiging => atc_diging_step(state, objective, mixing),
        Method::Diging => diging_step(state, objective, mixing),
        Method::Extra => extra_step(state, objective, mixing),
        Method::Dgd => dgd_step(state, objective, mixing),
        Method::NearDgdPlus => near_dgd_plus_step(state, objective, mixing),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert_eq!("NEAR_DGD_PLUS".parse::<Method>().unwrap(), Method::NearDgdPlus);
        assert!("sgd".parse::<Method>().is_err());
    }

    #[test]
    fn near_dgd_rounds_grow_linearly() {
        assert_eq!(Method::NearDgdPlus.comms_per_iteration(0, 4), 1);
        assert_eq!(Method::NearDgdPlus.comms_per_iteration(4, 4), 5);
        assert_eq!(Method::DgmBbC.comms_per_iteration(9, 3), 6);
        assert_eq!(Method::Extra.comms_per_iteration(9, 3), 1);
    }

    #[test]
    fn step_sizes_validate() {
        assert!(StepSizes::Uniform(0.0).resolve(3).is_err());
        assert!(StepSizes::PerAgent(vec![1.0, 2.0]).resolve(3).is_err());
        assert_eq!(StepSizes::Uniform(0.5).resolve(2).unwrap(), DVector::from_element(2, 0.5));
    }

    #[test]
    fn zero_rounds_rejected() {
        let c = SolverConfig::new(Method::DgmBbC, StepSizes::Uniform(1.0)).with_rounds(0);
        assert!(c.validate().is_err());
    }
}

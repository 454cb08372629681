use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightMatrix;
use crate::objective::Objective;
use crate::solvers::{run, Method, SolverConfig, StepSizes};

/// Search settings for constant step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneOptions {
    pub points: usize,
    /// Grid bounds in units of `1/L`.
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub max_iters: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions { points: 20, lo: 0.01, hi: 2.0, target: 1e-6, max_iters: 10_000 }
    }
}

impl TuneOptions {
    /// Log-spaced grid on `[lo/L, hi/L]`, ascending.
    pub fn grid(&self, lipschitz: f64) -> Vec<f64> {
        log_grid(self.lo / lipschitz, self.hi / lipschitz, self.points)
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    /// Iterations to the target, `None` if not reached.
    pub iterations: Option<usize>,
    /// Last relative error; `None` when the run diverged.
    pub final_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub alpha: f64,
    pub iterations: Option<usize>,
    /// `false` when no grid point reached the target and `alpha` is the
    /// point with the smallest final error instead.
    pub converged: bool,
    pub grid: Vec<GridPoint>,
}

/// First iteration cap of the escalating search; multiplied by
/// [`CAP_GROWTH`] until a grid point reaches the target or the cap hits
/// `max_iters`.
pub const FIRST_CAP: usize = 100;
pub const CAP_GROWTH: usize = 10;

/// Grid search for the constant step minimizing iterations to
/// `opts.target`; ties go to the smaller step.
///
/// Every point is first run with a small iteration cap, raised tenfold while
/// no point has reached the target. Once one has, later runs are capped at
/// the best count, and points that missed an earlier cap cannot win. This
/// keeps methods with growing per-iteration cost (NEAR-DGD+) affordable.
pub fn tune_constant_step<O: Objective + ?Sized>(
    base: &SolverConfig,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
    grid: &[f64],
    opts: &TuneOptions,
) -> Result<TuneResult> {
    if !base.method.uses_constant_step() {
        return Err(Error::invalid(format!("{} does not use a constant step", base.method)));
    }
    if grid.is_empty() || grid.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::invalid("step grid must be non-empty and positive"));
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();

    let mut points: Vec<GridPoint> =
        order.iter().map(|&alpha| GridPoint { alpha, iterations: None, final_rel_err: None }).collect();
    let mut best: Option<(f64, usize)> = None;
    let mut pending: Vec<usize> = (0..order.len()).collect();
    let mut cap = FIRST_CAP.min(opts.max_iters);
    while !pending.is_empty() {
        let mut unfinished = Vec::new();
        for &i in &pending {
            let alpha = order[i];
            let limit = best.map_or(cap, |(_, b)| b.min(cap));
            let mut cfg = base.clone();
            cfg.steps = StepSizes::Uniform(alpha);
            cfg.stop.max_iters = limit;
            cfg.stop.target = opts.target;
            match run(&cfg, objective, weights, x_star) {
                Ok(rec) => {
                    let iterations = rec.iterations_to(opts.target);
                    points[i] = GridPoint { alpha, iterations, final_rel_err: Some(rec.final_rel_err()) };
                    match (iterations, best) {
                        (Some(it), Some((a, b))) if it < b || (it == b && alpha < a) => best = Some((alpha, it)),
                        (Some(it), None) => best = Some((alpha, it)),
                        (Some(_), Some(_)) => {}
                        (None, _) => unfinished.push(i),
                    }
                }
                Err(Error::Diverged { .. }) => {
                    points[i] = GridPoint { alpha, iterations: None, final_rel_err: None };
                }
                Err(e) => return Err(e),
            }
            log::debug!("tune {}: alpha={alpha:.4e} cap={limit} -> {:?}", base.method, points[i].iterations);
        }
        // A point that missed cap `c` needs more than `c >= best` iterations.
        if best.is_some() || cap >= opts.max_iters {
            break;
        }
        pending = unfinished;
        cap = cap.saturating_mul(CAP_GROWTH).min(opts.max_iters);
    }
    points.reverse();

    if let Some((alpha, it)) = best {
        return Ok(TuneResult { alpha, iterations: Some(it), converged: true, grid: points });
    }
    // Nothing reached the target: every surviving run used the full budget,
    // so final errors are comparable.
    let fallback = points
        .iter()
        .filter_map(|p| p.final_rel_err.map(|e| (p.alpha, e)))
        .filter(|(_, e)| e.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|(a, _)| a)
        .ok_or_else(|| Error::Numerical(format!("every grid step diverged for {}", base.method)))?;
    log::warn!("{}: no grid step reached {:e}; using best-effort alpha={fallback:e}", base.method, opts.target);
    Ok(TuneResult { alpha: fallback, iterations: None, converged: false, grid: points })
}

/// Convenience wrapper: tunes `method` with `rounds` inner rounds on the
/// default grid.
pub fn tune_method<O: Objective + ?Sized>(
    method: Method,
    rounds: usize,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    let base = SolverConfig::new(method, StepSizes::Uniform(1.0)).with_rounds(rounds);
    tune_constant_step(&base, objective, weights, x_star, &opts.grid(objective.lipschitz()), opts)
}

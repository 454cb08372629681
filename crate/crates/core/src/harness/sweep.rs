use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::graph::WeightMatrix;
use crate::objective::Objective;
use crate::solvers::{run, Method, SolverConfig, StepSizes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub iterations: Option<usize>,
    pub comm_rounds: Option<u64>,
    pub grad_evals: Option<u64>,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: &'static str,
    pub target: f64,
    pub points: Vec<SweepPoint>,
    pub records: Vec<RunRecord>,
    /// `max/min` of iterations-to-target; `None` if some point missed it.
    pub spread: Option<f64>,
    /// `R_min` of the certificate, for `R` sweeps.
    pub r_min: Option<usize>,
}

impl SweepResult {
    fn new(axis: &'static str, target: f64, values: &[f64], records: Vec<RunRecord>) -> Self {
        let points: Vec<SweepPoint> = values
            .iter()
            .zip(&records)
            .map(|(&value, rec)| {
                let hit = rec.first_reaching(target);
                SweepPoint {
                    value,
                    iterations: hit.map(|r| r.k),
                    comm_rounds: hit.map(|r| r.comm_rounds),
                    grad_evals: hit.map(|r| r.grad_evals),
                    cost: hit.map(|r| r.cost),
                }
            })
            .collect();
        let spread = iteration_spread(&points);
        SweepResult { axis, target, points, records, spread, r_min: None }
    }
}

/// `max/min` of the iteration counts, `None` if any is missing or zero.
pub fn iteration_spread(points: &[SweepPoint]) -> Option<f64> {
    let its: Option<Vec<usize>> = points.iter().map(|p| p.iterations).collect();
    let its = its?;
    let (lo, hi) = (its.iter().min()?, its.iter().max()?);
    (*lo > 0).then(|| *hi as f64 / *lo as f64)
}

fn run_all<O: Objective + ?Sized>(
    configs: Vec<SolverConfig>,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
) -> Result<Vec<RunRecord>> {
    configs.par_iter().map(|cfg| run(cfg, objective, weights, x_star)).collect()
}

/// DGM-BB-C over a grid of initial steps `α₀`; `target` is the accuracy
/// whose iteration counts are compared.
pub fn sweep_alpha0<O: Objective + ?Sized>(
    base: &SolverConfig,
    alpha0: &[f64],
    target: f64,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
) -> Result<SweepResult> {
    if base.method != Method::DgmBbC {
        return Err(Error::invalid("the alpha0 sweep applies to dgm-bb-c"));
    }
    if alpha0.is_empty() {
        return Err(Error::invalid("empty alpha0 axis"));
    }
    let configs =
        alpha0.iter().map(|&a| SolverConfig { steps: StepSizes::Uniform(a), ..base.clone() }).collect();
    let records = run_all(configs, objective, weights, x_star)?;
    Ok(SweepResult::new("alpha0", target, alpha0, records))
}

/// A multi-consensus method over a grid of inner rounds `R`.
pub fn sweep_inner_loops<O: Objective + ?Sized>(
    base: &SolverConfig,
    rounds: &[usize],
    target: f64,
    r_min: Option<usize>,
    objective: &O,
    weights: &WeightMatrix,
    x_star: &DVector<f64>,
) -> Result<SweepResult> {
    if !base.method.uses_inner_rounds() {
        return Err(Error::invalid(format!("{} has no inner consensus rounds", base.method)));
    }
    if rounds.is_empty() {
        return Err(Error::invalid("empty R axis"));
    }
    let configs = rounds.iter().map(|&r| base.clone().with_rounds(r)).collect();
    let records = run_all(configs, objective, weights, x_star)?;
    let values: Vec<f64> = rounds.iter().map(|&r| r as f64).collect();
    let mut result = SweepResult::new("R", target, &values, records);
    result.r_min = r_min;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(iterations: Option<usize>) -> SweepPoint {
        SweepPoint { value: 0.0, iterations, comm_rounds: None, grad_evals: None, cost: None }
    }

    #[test]
    fn spread_is_max_over_min() {
        let pts = [point(Some(40)), point(Some(50)), point(Some(44))];
        assert_eq!(iteration_spread(&pts), Some(1.25));
        assert_eq!(iteration_spread(&[point(Some(40)), point(None)]), None);
    }
}

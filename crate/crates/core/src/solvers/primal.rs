//! Methods without a gradient tracker: EXTRA, DGD and NEAR-DGD+.

use super::consensus::{consensus_sweep, Mixing};
use super::{SolverState, StepOutcome};
use crate::objective::Objective;

/// EXTRA with `W̃ = (I + W)/2`:
///
/// `x₁ = W x₀ − α ∇f(x₀)`,
/// `x_{k+2} = (I + W) x_{k+1} − W̃ x_k − α (∇f(x_{k+1}) − ∇f(x_k))`.
///
/// `W x_k` is cached from the previous iteration, so each iteration costs one
/// communication round.
pub fn extra_step<O: Objective + ?Sized>(state: &mut SolverState, objective: &O, mixing: &Mixing) -> StepOutcome {
    let mixed = consensus_sweep(state.x.clone(), mixing, 1, &mut state.comms);
    let x_next = match state.mixed_prev.take() {
        None => state.descend(&mixed, &state.grad),
        Some(mixed_prev) => {
            let base = &state.x + &mixed - (&state.x_prev + &mixed_prev) * 0.5;
            let grad_change = &state.grad - &state.grad_prev;
            state.descend(&base, &grad_change)
        }
    };
    state.mixed_prev = Some(mixed);
    let grad_next = state.evaluate(objective, &x_next);
    state.install(x_next, grad_next);
    StepOutcome::default()
}

/// Constant-step DGD: `x⁺ = W x − α ∇f(x)`.
pub fn dgd_step<O: Objective + ?Sized>(state: &mut SolverState, objective: &O, mixing: &Mixing) -> StepOutcome {
    let mixed = consensus_sweep(state.x.clone(), mixing, 1, &mut state.comms);
    let x_next = state.descend(&mixed, &state.grad);
    let grad_next = state.evaluate(objective, &x_next);
    state.install(x_next, grad_next);
    StepOutcome::default()
}

/// NEAR-DGD+: `x⁺ = W^{t_k} (x − α ∇f(x))` with `t_k = k` rounds at outer
/// iteration `k = 1, 2, …`.
pub fn near_dgd_plus_step<O: Objective + ?Sized>(
    state: &mut SolverState,
    objective: &O,
    mixing: &Mixing,
) -> StepOutcome {
    let rounds = state.k + 1;
    let adapted = state.descend(&state.x, &state.grad);
    let x_next = consensus_sweep(adapted, mixing, rounds, &mut state.comms);
    let grad_next = state.evaluate(objective, &x_next);
    state.install(x_next, grad_next);
    StepOutcome::default()
}

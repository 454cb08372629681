//! Gradient-tracking methods: DGM-BB-C, DGM-C, ATC-DIGing and DIGing.

use nalgebra::DMatrix;

use super::consensus::{consensus_sweep, Mixing};
use super::SolverState;
use crate::bb::{bb_step, BbFallback, BbVariant, CurvaturePair};
use crate::objective::Objective;

/// What happened during one iteration besides the state update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepOutcome {
    /// Agents whose BB step fell back (reuse or `1/L`).
    pub bb_fallbacks: usize,
}

fn tracker(state: &SolverState) -> &DMatrix<f64> {
    state
        .y
        .as_ref()
        .expect("gradient-tracking step on a state without a tracker")
}

/// Adapt-then-combine tracking update with `rounds` inner consensus rounds
/// per phase:
///
/// `x⁺ = Wᴿ (x − D y)`, `y⁺ = Wᴿ (y + ∇f(x⁺) − ∇f(x))`.
fn atc_tracking_update<O: Objective + ?Sized>(
    state: &mut SolverState,
    objective: &O,
    mixing: &Mixing,
    rounds: usize,
) {
    let y = tracker(state);
    let adapted = state.descend(&state.x, y);
    let x_next = consensus_sweep(adapted, mixing, rounds, &mut state.comms);
    let grad_next = state.evaluate(objective, &x_next);
    let corrected = tracker(state) + &grad_next - &state.grad;
    let y_next = consensus_sweep(corrected, mixing, rounds, &mut state.comms);
    state.y = Some(y_next);
    state.install(x_next, grad_next);
}

/// Recomputes every `α_k^i` from the agent's latest curvature pair.
///
/// A stalled agent (`s = 0`) keeps its previous step; a non-positive
/// curvature estimate falls back to `1/L`.
fn refresh_bb_steps<O: Objective + ?Sized>(state: &mut SolverState, variant: BbVariant, objective: &O) -> usize {
    let p = state.x.ncols();
    let lipschitz = objective.lipschitz();
    let (mut s, mut z) = (vec![0.0; p], vec![0.0; p]);
    let (mut g_new, mut g_old) = (vec![0.0; p], vec![0.0; p]);
    let mut fallbacks = 0;
    for i in 0..state.agents() {
        for c in 0..p {
            s[c] = state.x[(i, c)] - state.x_prev[(i, c)];
            g_new[c] = state.grad[(i, c)];
            g_old[c] = state.grad_prev[(i, c)];
        }
        objective.gradient_difference_into(i, &s, &g_new, &g_old, &mut z);
        match bb_step(variant, CurvaturePair { s: &s, z: &z }) {
            Ok(alpha) => state.alphas[i] = alpha,
            Err(BbFallback::ZeroStep) => {
                fallbacks += 1;
            }
            Err(reason) => {
                log::warn!(
                    "agent {i} at iteration {}: BB step unavailable ({reason:?}), using 1/L",
                    state.k
                );
                state.alphas[i] = 1.0 / lipschitz;
                fallbacks += 1;
            }
        }
    }
    state.bb_fallbacks += fallbacks as u64;
    fallbacks
}

/// One DGM-BB-C iteration: the tracking update with the current BB steps,
/// then fresh BB steps `α_{k+1}^i` from the new curvature pairs.
/// Spends `2R` communication rounds and `n` gradient evaluations.
pub fn dgm_bb_c_step<O: Objective + ?Sized>(
    state: &mut SolverState,
    objective: &O,
    mixing: &Mixing,
    rounds: usize,
    variant: BbVariant,
) -> StepOutcome {
    atc_tracking_update(state, objective, mixing, rounds);
    let bb_fallbacks = refresh_bb_steps(state, variant, objective);
    StepOutcome { bb_fallbacks }
}

/// DGM-BB-C's update with fixed, uncoordinated per-agent steps.
pub fn dgm_c_step<O: Objective + ?Sized>(
    state: &mut SolverState,
    objective: &O,
    mixing: &Mixing,
    rounds: usize,
) -> StepOutcome {
    atc_tracking_update(state, objective, mixing, rounds);
    StepOutcome::default()
}

/// ATC-DIGing, i.e. DGM-C with a single consensus round per phase.
pub fn atc_diging_step<O: Objective + ?Sized>(state: &mut SolverState, objective: &O, mixing: &Mixing) -> StepOutcome {
    dgm_c_step(state, objective, mixing, 1)
}

/// Combine-then-adapt DIGing: `x⁺ = W x − D y`, `y⁺ = W y + ∇f(x⁺) − ∇f(x)`.
pub fn diging_step<O: Objective + ?Sized>(state: &mut SolverState, objective: &O, mixing: &Mixing) -> StepOutcome {
    let mixed_x = consensus_sweep(state.x.clone(), mixing, 1, &mut state.comms);
    let x_next = state.descend(&mixed_x, tracker(state));
    let grad_next = state.evaluate(objective, &x_next);
    let mixed_y = consensus_sweep(tracker(state).clone(), mixing, 1, &mut state.comms);
    state.y = Some(mixed_y + &grad_next - &state.grad);
    state.install(x_next, grad_next);
    StepOutcome::default()
}

//! Simulation of distributed gradient methods over undirected networks.
//!
//! The centerpiece is DGM-BB-C: every agent computes its own Barzilai-Borwein
//! step from local curvature, and both the optimization step and the
//! gradient-tracking step are followed by `R` rounds of consensus with a
//! doubly stochastic mixing matrix. Baselines (DGM-C, ATC-DIGing, DIGing,
//! EXTRA, DGD, NEAR-DGD+) share the same state and accounting so they can be
//! compared on equal terms.
//!
//! Module map:
//! - [`graph`]: Erdős–Rényi topologies, Metropolis weights, spectral gap.
//! - [`objective`]: the multi-agent objective abstraction and the
//!   least-squares sensing generator.
//! - [`bb`]: the two local BB step-size formulas and their bounds.
//! - [`solvers`]: synchronous round-based state machines for every method.
//! - [`theory`]: the 3×3 comparison matrix, its spectral radius and the
//!   inner-loop lower bound that certify geometric convergence.
//! - [`harness`]: metrics, tuning, sweeps, rate fitting and CSV/JSON output.

pub mod bb;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use bb::{BbVariant, CurvaturePair};
pub use error::{Error, Result};
pub use graph::{Graph, WeightMatrix};
pub use harness::{ExperimentPlan, MetricsRow, RunRecord};
pub use objective::{LeastSquaresInstance, Objective};
pub use solvers::{Method, SolverConfig, SolverState};
pub use theory::{Certificate, ProblemConstants};

/// Dense row-major matrix used by the JSON fixture formats.
pub use linalg::DenseMatrix;

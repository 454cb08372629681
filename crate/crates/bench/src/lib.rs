//! Shared inputs for the criterion benchmarks in `benches/`.

use dgmbb_core::graph::{generate_erdos_renyi, metropolis_weights};
use dgmbb_core::objective::{generate_sensing_instance, SensingSpec};
use dgmbb_core::solvers::Mixing;
use dgmbb_core::{LeastSquaresInstance, Objective, WeightMatrix};
use nalgebra::DMatrix;

/// The 200-agent sensing problem on an Erdős–Rényi graph.
pub struct Fixture {
    pub instance: LeastSquaresInstance,
    pub weights: WeightMatrix,
    pub mixing: Mixing,
    pub x0: DMatrix<f64>,
}

impl Fixture {
    pub fn reference(r_c: f64, seed: u64) -> Self {
        let instance = generate_sensing_instance(&SensingSpec::reference(), seed).expect("reference instance");
        let graph = generate_erdos_renyi(instance.agents(), r_c, seed).expect("connected graph");
        let weights = metropolis_weights(&graph).expect("metropolis weights");
        let mixing = Mixing::new(&weights);
        let x0 = DMatrix::zeros(instance.agents(), instance.dim());
        Fixture { instance, weights, mixing, x0 }
    }

    /// A deterministic non-consensual stack to mix.
    pub fn spread_stack(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.x0.nrows(), self.x0.ncols(), |i, c| ((i * 31 + c * 7) % 17) as f64 - 8.0)
    }
}

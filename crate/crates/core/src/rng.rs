//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. Uniform variates are built directly from the
//! 53 high bits of `next_u64`, so graph fixtures depend only on the ChaCha8
//! keystream. Gaussian variates use `rand_distr::StandardNormal`.
//!
//! A plan-level seed fans out to independent component seeds with
//! [`derive_seed`], which selects a separate ChaCha stream per component.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub const STREAM_GRAPH: u64 = 1;
pub const STREAM_INSTANCE: u64 = 2;
pub const STREAM_STEPS: u64 = 3;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for one component (graph, instance, step perturbation) of a plan.
pub fn derive_seed(plan_seed: u64, stream: u64) -> u64 {
    let mut rng = seeded(plan_seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
pub fn uniform01(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_stream() {
        let a = derive_seed(7, STREAM_GRAPH);
        let b = derive_seed(7, STREAM_INSTANCE);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, STREAM_GRAPH));
    }

    #[test]
    fn uniform_stays_in_unit_interval() {
        let mut rng = seeded(0);
        for _ in 0..10_000 {
            let u = uniform01(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}

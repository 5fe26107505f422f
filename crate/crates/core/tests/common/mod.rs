#![allow(dead_code)]

use accelnet_core::model::{AgentSpec, ProblemInstance};
use accelnet_core::synth::{random_instance, SynthParams};
use accelnet_core::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two scalar agents, `min ½u₁² + ½u₂²` s.t. `u₁ + u₂ = 2`, owned by agent 0.
pub fn instance_a() -> ProblemInstance {
    let one = || DMatrix::from_element(1, 1, 1.0);
    let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-10.0], &[10.0])
        .with_constraint(DVector::from_element(1, 2.0), [(0, one()), (1, one())]);
    let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-10.0], &[10.0]);
    ProblemInstance::new(vec![a0, a1]).unwrap()
}

pub fn small(seed: u64) -> ProblemInstance {
    random_instance(seed, &SynthParams::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_multipliers(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-scale..scale))
}

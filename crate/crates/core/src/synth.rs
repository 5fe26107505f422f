//! Seeded random instances for tests and benchmarks.
//!
//! Every instance is feasible by construction: a point `u_f` is drawn inside
//! the boxes and each right-hand side is set to `g_i = Σ_j G_i^j u_{f,j}`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::min_eigenvalue;
use crate::model::{AgentSpec, ProblemInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub agents: usize,
    pub max_dim: usize,
    pub max_rows: usize,
    pub max_in_degree: usize,
    /// Probability that an agent gets a dense Hessian.
    pub dense_fraction: f64,
    /// Boxes are `[−w, w]` per coordinate.
    pub box_half_width: f64,
    /// Feasible point is drawn from `[−s·w, s·w]`.
    pub interior_scale: f64,
    /// Candidates whose stacked coupling matrix has a smaller least singular
    /// value are redrawn.
    pub min_singular_value: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            agents: 5,
            max_dim: 3,
            max_rows: 2,
            max_in_degree: 2,
            dense_fraction: 0.5,
            box_half_width: 10.0,
            interior_scale: 0.1,
            min_singular_value: 0.1,
        }
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

fn uniform_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        if m.amax() > 0.1 {
            return m;
        }
    }
}

const MAX_DRAWS: usize = 10_000;

pub fn random_instance(seed: u64, params: &SynthParams) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = params.min_singular_value * params.min_singular_value;
    for _ in 0..MAX_DRAWS {
        let p = candidate(&mut rng, params)?;
        let g = p.coupling_matrix();
        if floor <= 0.0 || min_eigenvalue(&(&g * g.transpose())) >= floor {
            return Ok(p);
        }
    }
    Err(Error::InvalidCase("no well-conditioned draw".into()))
}

fn candidate(rng: &mut ChaCha8Rng, params: &SynthParams) -> Result<ProblemInstance> {
    let n = params.agents;
    let dims: Vec<usize> = (0..n).map(|_| rng.random_range(1..=params.max_dim)).collect();
    let w = params.box_half_width;
    let feasible: Vec<DVector<f64>> = dims
        .iter()
        .map(|&d| uniform_vec(rng, d, -params.interior_scale * w, params.interior_scale * w))
        .collect();

    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let d = dims[i];
        let cost = if rng.random_bool(params.dense_fraction) {
            let a = uniform_mat(rng, d, d);
            a.transpose() * &a / d as f64 + DMatrix::identity(d, d) * rng.random_range(0.5..1.5)
        } else {
            DMatrix::from_diagonal(&uniform_vec(rng, d, 0.5, 2.0))
        };
        let linear = uniform_vec(rng, d, -1.0, 1.0);
        let rows = rng.random_range(1..=params.max_rows.min(d).max(1));

        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let degree = rng.random_range(0..=params.max_in_degree.min(others.len()));
        let mut chosen: Vec<usize> = sample(rng, others.len(), degree)
            .into_iter()
            .map(|k| others[k])
            .collect();
        chosen.sort_unstable();

        let mut rhs = DVector::zeros(rows);
        let mut blocks = Vec::with_capacity(chosen.len() + 1);
        for j in core::iter::once(i).chain(chosen) {
            let block = uniform_mat(rng, rows, dims[j]);
            rhs += &block * &feasible[j];
            blocks.push((j, block));
        }
        let agent = AgentSpec::new(cost, linear, DVector::repeat(d, -w), DVector::repeat(d, w))
            .with_constraint(rhs, blocks);
        agents.push(agent);
    }
    ProblemInstance::new(agents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let p = SynthParams::default();
        for seed in 0..20 {
            let a = random_instance(seed, &p).unwrap();
            let b = random_instance(seed, &p).unwrap();
            assert_eq!(a.agents(), b.agents());
            for i in 0..a.len() {
                let agent = a.agent(i);
                assert!(agent.rows() >= 1 && agent.rows() <= agent.dim().min(2));
                assert!(agent.dim() <= 3);
                assert!(a.in_neighbors(i).len() <= 2);
            }
        }
    }
}

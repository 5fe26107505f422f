//! Per-agent Lipschitz constants and step sizes.
//!
//! `G^i` stacks the blocks through which `u_i` enters any coupling rows:
//! `G^i = col{G_j^i : j ∈ M_i}`, ascending in `j`. The step size of agent `i`
//! is bounded by `1/L_i` with `L_i = Σ_{j∈N_i∪{i}} ‖G^j‖²/σ_j`, which only
//! needs data from `i`'s in-neighbors.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::spectral_norm;
use crate::model::ProblemInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeTable {
    pub sigma: Vec<f64>,
    /// `‖G^i‖`.
    pub block_norm: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub step: Vec<f64>,
}

impl StepsizeTable {
    pub fn len(&self) -> usize {
        self.step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step.is_empty()
    }

    /// Lipschitz constant of the local dual `q_i`: `‖G^i‖²/σ_i`.
    pub fn local_lipschitz(&self, i: usize) -> f64 {
        self.block_norm[i] * self.block_norm[i] / self.sigma[i]
    }

    /// Same table with every step multiplied by `factor` (no validation).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.step.iter_mut().for_each(|s| *s *= factor);
        out
    }
}

/// `G^j`: the blocks `G_i^j` for `i ∈ M_j`, stacked in ascending `i`.
pub fn column_stack(instance: &ProblemInstance, j: usize) -> DMatrix<f64> {
    let n = instance.agent(j).dim();
    let parts: Vec<&DMatrix<f64>> = instance
        .out_neighbors(j)
        .iter()
        .filter_map(|&i| instance.agent(i).block(j))
        .collect();
    let rows = parts.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, n);
    let mut r = 0;
    for b in parts {
        out.view_mut((r, 0), (b.nrows(), n)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Builds the table with `η_i = safety / L_i`.
pub fn build_stepsizes(instance: &ProblemInstance, safety: f64) -> Result<StepsizeTable> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidSafety(safety));
    }
    let n = instance.len();
    let sigma: Vec<f64> = (0..n).map(|i| instance.sigma(i)).collect();
    if let Some(agent) = sigma.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            agent,
            min_eigenvalue: sigma[agent],
        });
    }
    let block_norm = (0..n)
        .map(|j| spectral_norm(&column_stack(instance, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut lipschitz = Vec::with_capacity(n);
    for i in 0..n {
        let own = core::iter::once(i).chain(instance.in_neighbors(i).iter().copied());
        let l: f64 = own.map(|j| block_norm[j] * block_norm[j] / sigma[j]).sum();
        if !(l > 0.0) {
            return Err(Error::DegenerateLipschitz { agent: i });
        }
        lipschitz.push(l);
    }
    let step = lipschitz.iter().map(|l| safety / l).collect();
    Ok(StepsizeTable {
        sigma,
        block_norm,
        lipschitz,
        step,
    })
}

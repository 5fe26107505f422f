use alloc::vec::Vec;

use nalgebra::DVector;

use crate::model::ProblemInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Full information exchange every iteration.
    Accelerated,
    /// Random link failures with local multiplier trackers.
    Stochastic,
    /// Stochastic variant with the momentum sequence pinned to one.
    Unaccelerated,
}

/// A known dual optimum, used only for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DualReference {
    pub multipliers: DVector<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iters: usize,
    /// Stop once every agent's row residual is below this.
    pub eps: f64,
    pub reference: Option<DualReference>,
    /// Re-solve at the common `λ(k)` each iteration to log `q` and `‖∇q‖`.
    pub evaluate_dual: bool,
    /// Keep `λ(k)` in every trace row.
    pub keep_multipliers: bool,
    /// `λ(0)`; zero when unset.
    pub warm_start: Option<DVector<f64>>,
}

impl RunOptions {
    pub fn new(max_iters: usize, eps: f64) -> Self {
        Self {
            max_iters,
            eps,
            reference: None,
            evaluate_dual: true,
            keep_multipliers: false,
            warm_start: None,
        }
    }

    pub fn with_reference(mut self, reference: DualReference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn keep_multipliers(mut self) -> Self {
        self.keep_multipliers = true;
        self
    }

    pub fn without_dual(mut self) -> Self {
        self.evaluate_dual = false;
        self
    }

    pub fn with_warm_start(mut self, lambda: DVector<f64>) -> Self {
        self.warm_start = Some(lambda);
        self
    }

    pub(crate) fn initial(&self, instance: &ProblemInstance) -> Result<DVector<f64>> {
        match &self.warm_start {
            None => Ok(DVector::zeros(instance.dual_dim())),
            Some(w) if w.len() == instance.dual_dim() => Ok(w.clone()),
            Some(w) => Err(Error::DimensionMismatch {
                expected: instance.dual_dim(),
                got: w.len(),
            }),
        }
    }
}

/// One iteration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub theta: f64,
    /// `q(λ(k))`.
    pub dual_value: Option<f64>,
    /// `‖∇q(λ(k))‖`.
    pub residual: Option<f64>,
    /// `q* − q(λ(k))`.
    pub gap: Option<f64>,
    /// `V(k) = Σ_i ‖ω_i(k)‖² / (2 α_i η_i)`.
    pub lyapunov: Option<f64>,
    /// `‖ω_i(k)‖²` per agent, empty without a reference.
    pub omega_sq: Vec<f64>,
    /// Whether agent `i` took the gradient step.
    pub updated: Vec<bool>,
    /// Largest agent-local row residual seen by the stopping rule.
    pub local_residual: f64,
    pub multipliers: Option<DVector<f64>>,
}

impl TraceRow {
    pub fn updates(&self) -> usize {
        self.updated.iter().filter(|&&u| u).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    /// `λ(0)`.
    pub initial: DVector<f64>,
    /// Final `λ(k)`.
    pub multipliers: DVector<f64>,
    /// Final `u(k)` as computed by the agents.
    pub primal: DVector<f64>,
    pub step: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    /// Row for iteration `k ≥ 1`.
    pub fn row(&self, k: usize) -> Option<&TraceRow> {
        k.checked_sub(1).and_then(|idx| self.rows.get(idx))
    }

    /// `λ(k)` for `k ≥ 0`, when multipliers were kept.
    pub fn multipliers_at(&self, k: usize) -> Option<&DVector<f64>> {
        if k == 0 {
            return Some(&self.initial);
        }
        self.row(k).and_then(|r| r.multipliers.as_ref())
    }
}

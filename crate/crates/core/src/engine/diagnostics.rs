//! Numerical checks of the inequalities behind the convergence rate. None of
//! these influence a run; they consume traces or evaluate the dual directly.

use alloc::vec::Vec;

use nalgebra::DVector;

use super::dual::{eval_dual, split_multipliers};
use super::trace::{DualReference, RunTrace};
use crate::model::ProblemInstance;
use crate::stepsize::StepsizeTable;
use crate::{Error, Result};

const SLACK: f64 = 1e-9;

/// `ω_i(k) = θ(k)λ_i(k) − (θ(k)−1)λ_i(k−1) − λ_i*` for every agent, rebuilt from
/// the multipliers kept in `trace`.
pub fn omega(
    instance: &ProblemInstance,
    trace: &RunTrace,
    k: usize,
    reference: &DualReference,
) -> Result<Vec<DVector<f64>>> {
    let row = trace.row(k).ok_or(Error::TraceIncomplete("iteration"))?;
    let cur = trace
        .multipliers_at(k)
        .ok_or(Error::TraceIncomplete("multipliers"))?;
    let prev = trace
        .multipliers_at(k - 1)
        .ok_or(Error::TraceIncomplete("multipliers"))?;
    let w = cur * row.theta - prev * (row.theta - 1.0) - &reference.multipliers;
    Ok(split_multipliers(instance, &w))
}

/// `V(k) = Σ_i ‖ω_i(k)‖² / (2 α_i η_i)`.
pub fn lyapunov_value(
    instance: &ProblemInstance,
    trace: &RunTrace,
    k: usize,
    reference: &DualReference,
) -> Result<f64> {
    Ok(omega(instance, trace, k, reference)?
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_empty())
        .map(|(i, w)| w.norm_squared() / (2.0 * trace.alpha[i] * trace.step[i]))
        .sum())
}

/// One step of the Lyapunov inequality along a full-information run:
///
/// `Σ_i (‖ω_i(k+1)‖² − ‖ω_i(k)‖²)/(2η_i) ≤ θ(k)²(q* − q(λ(k))) − θ(k+1)²(q* − q(λ(k+1)))`
///
/// with slack `1e−9·(1 + |q*|)`. Needs kept multipliers and dual values.
pub fn check_lyapunov_step(
    instance: &ProblemInstance,
    trace: &RunTrace,
    k: usize,
    reference: &DualReference,
) -> Result<bool> {
    let now = omega(instance, trace, k, reference)?;
    let next = omega(instance, trace, k + 1, reference)?;
    let lhs: f64 = now
        .iter()
        .zip(&next)
        .enumerate()
        .filter(|(_, (w, _))| !w.is_empty())
        .map(|(i, (w0, w1))| (w1.norm_squared() - w0.norm_squared()) / (2.0 * trace.step[i]))
        .sum();
    let value = |k: usize| {
        trace
            .row(k)
            .and_then(|r| r.dual_value.map(|q| (r.theta, q)))
            .ok_or(Error::TraceIncomplete("dual values"))
    };
    let (t0, q0) = value(k)?;
    let (t1, q1) = value(k + 1)?;
    let star = reference.value;
    let rhs = t0 * t0 * (star - q0) - t1 * t1 * (star - q1);
    Ok(lhs <= rhs + SLACK * (1.0 + star.abs()))
}

/// `C = 4(V(1) + q* − q(λ(1)))`, the constant of the `C/(k+1)²` gap bound.
pub fn rate_constant(
    instance: &ProblemInstance,
    trace: &RunTrace,
    reference: &DualReference,
) -> Result<f64> {
    let v1 = lyapunov_value(instance, trace, 1, reference)?;
    let q1 = trace
        .row(1)
        .and_then(|r| r.dual_value)
        .ok_or(Error::TraceIncomplete("dual values"))?;
    Ok(4.0 * (v1 + reference.value - q1))
}

/// Blockwise maximizer of the quadratic model `ψ(·, ξ)`: `ξ_i + η_i ∇_i q(ξ)`.
fn model_maximizer(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    xi: &DVector<f64>,
    gradient: &DVector<f64>,
) -> DVector<f64> {
    let mut out = xi.clone();
    for i in 0..instance.len() {
        let range = instance.dual_range(i);
        let scaled = gradient.rows_range(range.clone()) * steps.step[i];
        out.rows_range_mut(range).axpy(1.0, &scaled, 1.0);
    }
    out
}

/// Lower bound on the ascent from the point of the quadratic model:
///
/// `q(λ(ξ)) − q(µ) ≥ Σ_i ⟨ξ_i − µ_i, λ_i(ξ) − ξ_i⟩/η_i + Σ_i ‖λ_i(ξ) − ξ_i‖²/(2η_i)`
pub fn check_quadratic_model(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    xi: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<bool> {
    let at_xi = eval_dual(instance, xi)?;
    let lam = model_maximizer(instance, steps, xi, &at_xi.gradient);
    let q_lam = eval_dual(instance, &lam)?.value;
    let q_mu = eval_dual(instance, mu)?.value;
    let mut rhs = 0.0;
    for i in 0..instance.len() {
        let r = instance.dual_range(i);
        let d = lam.rows_range(r.clone()) - xi.rows_range(r.clone());
        let s = xi.rows_range(r.clone()) - mu.rows_range(r);
        rhs += s.dot(&d) / steps.step[i] + d.norm_squared() / (2.0 * steps.step[i]);
    }
    Ok(q_lam - q_mu >= rhs - SLACK)
}

/// Descent inequality with the per-agent constants:
/// `q(λ) ≥ q(µ) + ⟨λ − µ, ∇q(µ)⟩ − Σ_i L_i‖λ_i − µ_i‖²/2`.
pub fn check_descent_inequality(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    lambda: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<bool> {
    let at_mu = eval_dual(instance, mu)?;
    let q_lam = eval_dual(instance, lambda)?.value;
    let diff = lambda - mu;
    let mut penalty = 0.0;
    for i in 0..instance.len() {
        penalty += 0.5 * steps.lipschitz[i] * diff.rows_range(instance.dual_range(i)).norm_squared();
    }
    Ok(q_lam >= at_mu.value + diff.dot(&at_mu.gradient) - penalty - SLACK)
}

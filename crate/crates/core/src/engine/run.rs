use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use super::dual::{eval_dual, split_multipliers, stack_multipliers};
use super::theta::theta_next;
use super::trace::{Algorithm, RunOptions, RunTrace, TraceRow};
use crate::model::ProblemInstance;
use crate::netsim::{neighbors_active, NetworkModel};
use crate::stepsize::StepsizeTable;
use crate::subsolver::linear_term;
use crate::Result;

/// Full-information accelerated dual ascent.
///
/// Each iteration: local minimizers at the interpolated multipliers `λ̂(k)`,
/// a gradient step on every agent's rows, the `θ` update and the momentum
/// interpolation `λ̂(k+1) = λ(k) + (θ(k)−1)/θ(k+1)·(λ(k) − λ(k−1))`.
pub fn run_alg1(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    options: &RunOptions,
) -> Result<RunTrace> {
    let n = instance.len();
    let initial = options.initial(instance)?;
    let mut lam_prev = split_multipliers(instance, &initial);
    let mut lam_hat = lam_prev.clone();
    let mut theta = 1.0;
    let alpha = vec![1.0; n];
    let mut recorder = Recorder::new(instance, steps, &alpha, options);
    let mut primal = Vec::new();
    let mut converged = false;

    for k in 1..=options.max_iters {
        let u = (0..n)
            .map(|i| {
                let a = linear_term(instance, i, |j| &lam_hat[j]);
                instance.solver(i).solve(instance.agent(i), &a)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut worst: f64 = 0.0;
        let mut lam = Vec::with_capacity(n);
        for i in 0..n {
            let r = instance.row_residual(i, |j| &u[j]);
            worst = worst.max(r.norm());
            lam.push(&lam_hat[i] + r * steps.step[i]);
        }

        let next = theta_next(theta);
        let coef = (theta - 1.0) / next;
        lam_hat = lam
            .iter()
            .zip(&lam_prev)
            .map(|(l, p)| l + (l - p) * coef)
            .collect();

        recorder.push(k, theta, &lam, &lam_prev, vec![true; n], worst)?;
        lam_prev = lam;
        theta = next;
        primal = u;
        if worst < options.eps {
            converged = true;
            break;
        }
    }
    Ok(recorder.finish(Algorithm::Accelerated, converged, initial, &lam_prev, &primal))
}

/// Accelerated dual ascent over the random network `network`.
///
/// Agent `i` keeps a tracker `ξ_j^i` of every `λ_j`, `j ∈ M_i`, refreshed only
/// over links active at iteration `k`; it takes a gradient step only when all
/// of its in-neighbor links are active and otherwise keeps `λ_i(k) = ξ̂_i^i(k)`.
/// One link draw per iteration governs both exchanges.
pub fn run_alg2(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    network: &NetworkModel,
    options: &RunOptions,
) -> Result<RunTrace> {
    run_tracked(instance, steps, network, options, true)
}

/// [`run_alg2`] with `θ(k) = 1` for every `k`, so interpolation is the identity.
pub fn run_unaccelerated(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    network: &NetworkModel,
    options: &RunOptions,
) -> Result<RunTrace> {
    run_tracked(instance, steps, network, options, false)
}

fn run_tracked(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    network: &NetworkModel,
    options: &RunOptions,
    accelerated: bool,
) -> Result<RunTrace> {
    let n = instance.len();
    let initial = options.initial(instance)?;
    let start = split_multipliers(instance, &initial);
    let outs: Vec<Vec<usize>> = (0..n)
        .map(|i| instance.out_neighbors(i).iter().copied().collect())
        .collect();
    let ins: Vec<Vec<usize>> = (0..n)
        .map(|i| instance.in_neighbors(i).iter().copied().collect())
        .collect();
    let slot = |i: usize, j: usize| outs[i].binary_search(&j).expect("j ∈ M_i");

    // ξ_j^i(k−1) and ξ̂_j^i(k), indexed [i][position of j in M_i].
    let mut xi_prev: Vec<Vec<DVector<f64>>> = outs
        .iter()
        .map(|m| m.iter().map(|&j| start[j].clone()).collect())
        .collect();
    let mut xi_hat = xi_prev.clone();
    // Latest G_i^j u_j received from each in-neighbor.
    let mut received: Vec<Vec<Option<DVector<f64>>>> =
        ins.iter().map(|nb| vec![None; nb.len()]).collect();

    let mut lam_prev = start;
    let mut theta = 1.0;
    let algorithm = if accelerated {
        Algorithm::Stochastic
    } else {
        Algorithm::Unaccelerated
    };
    let mut recorder = Recorder::new(instance, steps, network.alphas(), options);
    let mut primal = Vec::new();
    let mut converged = false;

    for k in 1..=options.max_iters {
        let draw = network.draw_links(k);

        // Step 1: local minimization against the trackers.
        let u = (0..n)
            .map(|i| {
                let a = linear_term(instance, i, |j| &xi_hat[i][slot(i, j)]);
                instance.solver(i).solve(instance.agent(i), &a)
            })
            .collect::<Result<Vec<_>>>()?;

        // Steps 2-3: exchange G_i^j u_j, then gradient step or hold.
        let mut lam = Vec::with_capacity(n);
        let mut updated = Vec::with_capacity(n);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let agent = instance.agent(i);
            for (p, &j) in ins[i].iter().enumerate() {
                if draw.is_active(i, j) {
                    received[i][p] = Some(&agent.blocks[&j] * &u[j]);
                }
            }
            let complete = neighbors_active(&draw, i, &ins[i]);
            updated.push(complete);
            let own = &xi_hat[i][slot(i, i)];
            if agent.rows() == 0 {
                lam.push(own.clone());
                continue;
            }
            let local = local_residual(agent, i, &u[i], &received[i]);
            worst = worst.max(local.as_ref().map_or(f64::INFINITY, |r| r.norm()));
            match local {
                Some(r) if complete => lam.push(own + r * steps.step[i]),
                _ => lam.push(own.clone()),
            }
        }

        // Steps 4-5: exchange λ and refresh trackers over active links.
        let xi: Vec<Vec<DVector<f64>>> = (0..n)
            .map(|i| {
                outs[i]
                    .iter()
                    .enumerate()
                    .map(|(p, &j)| {
                        if draw.is_active(i, j) {
                            lam[j].clone()
                        } else {
                            xi_hat[i][p].clone()
                        }
                    })
                    .collect()
            })
            .collect();

        // Steps 6-7: momentum update and tracker interpolation.
        let (next, coef) = if accelerated {
            let next = theta_next(theta);
            (next, (theta - 1.0) / next)
        } else {
            (1.0, 0.0)
        };
        xi_hat = xi
            .iter()
            .zip(&xi_prev)
            .map(|(row, prev)| row.iter().zip(prev).map(|(x, p)| x + (x - p) * coef).collect())
            .collect();

        recorder.push(k, theta, &lam, &lam_prev, updated, worst)?;
        xi_prev = xi;
        lam_prev = lam;
        theta = next;
        primal = u;
        if worst < options.eps {
            converged = true;
            break;
        }
    }
    Ok(recorder.finish(algorithm, converged, initial, &lam_prev, &primal))
}

/// `G_i^i u_i + Σ_{j∈N_i} (latest G_i^j u_j) − g_i`, or `None` until every
/// in-neighbor has been heard from once.
fn local_residual(
    agent: &crate::AgentSpec,
    i: usize,
    own: &DVector<f64>,
    received: &[Option<DVector<f64>>],
) -> Option<DVector<f64>> {
    let mut r = &agent.blocks[&i] * own;
    for part in received {
        r += part.as_ref()?;
    }
    Some(r - &agent.rhs)
}

struct Recorder<'a> {
    instance: &'a ProblemInstance,
    step: &'a [f64],
    alpha: &'a [f64],
    options: &'a RunOptions,
    rows: Vec<TraceRow>,
}

impl<'a> Recorder<'a> {
    fn new(
        instance: &'a ProblemInstance,
        steps: &'a StepsizeTable,
        alpha: &'a [f64],
        options: &'a RunOptions,
    ) -> Self {
        Self {
            instance,
            step: &steps.step,
            alpha,
            options,
            rows: Vec::new(),
        }
    }

    fn push(
        &mut self,
        k: usize,
        theta: f64,
        lam: &[DVector<f64>],
        lam_prev: &[DVector<f64>],
        updated: Vec<bool>,
        local_residual: f64,
    ) -> Result<()> {
        let stacked = stack_multipliers(self.instance, lam);
        let (dual_value, residual) = if self.options.evaluate_dual {
            let e = eval_dual(self.instance, &stacked)?;
            (Some(e.value), Some(e.gradient.norm()))
        } else {
            (None, None)
        };
        let mut omega_sq = Vec::new();
        let (mut gap, mut lyapunov) = (None, None);
        if let Some(reference) = &self.options.reference {
            let star = split_multipliers(self.instance, &reference.multipliers);
            let mut v = 0.0;
            for i in 0..self.instance.len() {
                let w = &lam[i] * theta - &lam_prev[i] * (theta - 1.0) - &star[i];
                let sq = w.norm_squared();
                if !w.is_empty() {
                    v += sq / (2.0 * self.alpha[i] * self.step[i]);
                }
                omega_sq.push(sq);
            }
            lyapunov = Some(v);
            gap = dual_value.map(|q| reference.value - q);
        }
        self.rows.push(TraceRow {
            k,
            theta,
            dual_value,
            residual,
            gap,
            lyapunov,
            omega_sq,
            updated,
            local_residual,
            multipliers: self.options.keep_multipliers.then_some(stacked),
        });
        Ok(())
    }

    fn finish(
        self,
        algorithm: Algorithm,
        converged: bool,
        initial: DVector<f64>,
        lam: &[DVector<f64>],
        primal: &[DVector<f64>],
    ) -> RunTrace {
        let mut u = DVector::zeros(self.instance.primal_dim());
        for (i, block) in primal.iter().enumerate() {
            u.rows_range_mut(self.instance.primal_range(i)).copy_from(block);
        }
        RunTrace {
            algorithm,
            rows: self.rows,
            converged,
            initial,
            multipliers: stack_multipliers(self.instance, lam),
            primal: u,
            step: self.step.to_vec(),
            alpha: self.alpha.to_vec(),
        }
    }
}

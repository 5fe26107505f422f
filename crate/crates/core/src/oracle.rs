//! Centralized ground truth for small instances.
//!
//! Two routes that share nothing with the distributed engine: a dense KKT
//! solve (refined by a primal-dual active-set loop when boxes bind), and a
//! long plain dual ascent used when the active-set loop cannot settle.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{clip, spectral_norm};
use crate::model::ProblemInstance;
use crate::stepsize::build_stepsizes;
use crate::subsolver::{dual_value_term, linear_term};
use crate::{Error, Result};

const ACTIVE_SET_MAX_ITERS: usize = 500;
const ASCENT_MAX_ITERS: usize = 1_000_000;
const ASCENT_TOL: f64 = 1e-10;
const FEAS_MAX_ITERS: usize = 200_000;
const KKT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    /// Equality KKT system; the box was inactive.
    Kkt,
    /// Primal-dual active-set refinement.
    ActiveSet,
    /// Long-run dual gradient ascent.
    DualAscent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub primal: DVector<f64>,
    pub multipliers: DVector<f64>,
    /// `q* = Σ f_i(u*)`, equal to the dual optimum by strong duality.
    pub value: f64,
    pub method: OracleMethod,
}

impl OracleSolution {
    pub fn reference(&self) -> crate::engine::DualReference {
        crate::engine::DualReference {
            multipliers: self.multipliers.clone(),
            value: self.value,
        }
    }
}

struct Stacked {
    q: DMatrix<f64>,
    c: DVector<f64>,
    g: DMatrix<f64>,
    rhs: DVector<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl Stacked {
    fn new(instance: &ProblemInstance) -> Self {
        let n = instance.primal_dim();
        let mut q = DMatrix::zeros(n, n);
        let mut c = DVector::zeros(n);
        for (i, agent) in instance.agents().iter().enumerate() {
            let r = instance.primal_range(i);
            q.view_mut((r.start, r.start), (r.len(), r.len()))
                .copy_from(&agent.cost);
            c.rows_range_mut(r).copy_from(&agent.linear);
        }
        let (lo, hi) = instance.stacked_bounds();
        Self {
            q,
            c,
            g: instance.coupling_matrix(),
            rhs: instance.stacked_rhs(),
            lo,
            hi,
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }

    /// `Qu + c + Gᵀλ`.
    fn stationarity(&self, u: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        &self.q * u + &self.c + self.g.tr_mul(lambda)
    }

    /// Solves the KKT system with the variables in `fixed` pinned to the
    /// given values.
    fn solve_reduced(&self, fixed: &[Option<f64>]) -> Option<(DVector<f64>, DVector<f64>)> {
        let free: Vec<usize> = (0..self.n()).filter(|&j| fixed[j].is_none()).collect();
        let pinned = DVector::from_iterator(self.n(), fixed.iter().map(|f| f.unwrap_or(0.0)));
        let (nf, m) = (free.len(), self.m());
        let mut k = DMatrix::zeros(nf + m, nf + m);
        let mut rhs = DVector::zeros(nf + m);
        let q_pinned = &self.q * &pinned;
        let g_pinned = &self.g * &pinned;
        for (a, &ja) in free.iter().enumerate() {
            for (b, &jb) in free.iter().enumerate() {
                k[(a, b)] = self.q[(ja, jb)];
            }
            for r in 0..m {
                k[(a, nf + r)] = self.g[(r, ja)];
                k[(nf + r, a)] = self.g[(r, ja)];
            }
            rhs[a] = -self.c[ja] - q_pinned[ja];
        }
        for r in 0..m {
            rhs[nf + r] = self.rhs[r] - g_pinned[r];
        }
        let sol = k.lu().solve(&rhs)?;
        if sol.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mut u = pinned;
        for (a, &j) in free.iter().enumerate() {
            u[j] = sol[a];
        }
        Some((u, sol.rows_range(nf..).into_owned()))
    }

    /// Box feasibility, equality feasibility and sign conditions on the
    /// reduced gradient at active bounds.
    fn is_kkt_point(&self, u: &DVector<f64>, lambda: &DVector<f64>) -> bool {
        let scale = 1.0 + self.rhs.amax() + self.c.amax();
        if (&self.g * u - &self.rhs).amax() > KKT_TOL * scale {
            return false;
        }
        let z = self.stationarity(u, lambda);
        let zscale = scale + lambda.amax();
        (0..self.n()).all(|j| {
            let (x, l, h) = (u[j], self.lo[j], self.hi[j]);
            let tol = KKT_TOL * (1.0 + l.abs().max(h.abs()));
            if x < l - tol || x > h + tol {
                return false;
            }
            let at_lo = x <= l + tol;
            let at_hi = x >= h - tol;
            let zt = KKT_TOL * zscale;
            match (at_lo, at_hi) {
                (true, true) => true,
                (true, false) => z[j] >= -zt,
                (false, true) => z[j] <= zt,
                (false, false) => z[j].abs() <= zt,
            }
        })
    }

    /// Component ranges of `Gu` over the box; `Some(gap)` when some row cannot
    /// reach its right-hand side.
    fn interval_gap(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for r in 0..self.m() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for j in 0..self.n() {
                let a = self.g[(r, j)];
                let (p, q) = (a * self.lo[j], a * self.hi[j]);
                lo += p.min(q);
                hi += p.max(q);
            }
            let tol = 1e-12 * (1.0 + self.rhs[r].abs());
            worst = worst.max(lo - self.rhs[r] - tol).max(self.rhs[r] - hi - tol);
        }
        (worst > 0.0).then_some(worst)
    }

    /// Primal-dual active-set iteration on the projection equation
    /// `u = Π(u − D⁻¹(Qu + c + Gᵀλ))`.
    fn active_set(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.n();
        let pin_degenerate = |j: usize| (self.lo[j] == self.hi[j]).then_some(self.lo[j]);
        let mut fixed: Vec<Option<f64>> = (0..n).map(pin_degenerate).collect();
        for _ in 0..ACTIVE_SET_MAX_ITERS {
            let (u, lambda) = self.solve_reduced(&fixed)?;
            let z = self.stationarity(&u, &lambda);
            let next: Vec<Option<f64>> = (0..n)
                .map(|j| {
                    if let Some(v) = pin_degenerate(j) {
                        return Some(v);
                    }
                    let t = u[j] - z[j] / self.q[(j, j)];
                    if t < self.lo[j] {
                        Some(self.lo[j])
                    } else if t > self.hi[j] {
                        Some(self.hi[j])
                    } else {
                        None
                    }
                })
                .collect();
            if next == fixed {
                return self.is_kkt_point(&u, &lambda).then_some((u, lambda));
            }
            fixed = next;
        }
        None
    }

    /// `min ½‖Gu − g‖²` over the box by accelerated projected gradient;
    /// returns the smallest residual norm reached.
    fn least_residual(&self) -> Result<f64> {
        let norm = spectral_norm(&self.g)?;
        if norm == 0.0 {
            return Ok(self.rhs.norm());
        }
        let step = 1.0 / (norm * norm);
        let tol = 1e-10 * (1.0 + self.rhs.norm());
        let mut x = clip(&DVector::zeros(self.n()), &self.lo, &self.hi);
        let mut y = x.clone();
        let mut t: f64 = 1.0;
        let mut best = f64::INFINITY;
        for _ in 0..FEAS_MAX_ITERS {
            let grad = self.g.tr_mul(&(&self.g * &y - &self.rhs));
            let next = clip(&(&y - grad * step), &self.lo, &self.hi);
            let res = (&self.g * &next - &self.rhs).norm();
            best = best.min(res);
            if res <= tol || (&next - &x).norm() <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            y = &next + (&next - &x) * ((t - 1.0) / t_next);
            x = next;
            t = t_next;
        }
        Ok(best)
    }
}

/// Solves the equality KKT system `[Q Gᵀ; G 0][u; λ] = [−c; g]`. When `u*`
/// leaves the open box the result is refined by [`solve_active_set`].
pub fn solve_kkt(instance: &ProblemInstance) -> Result<OracleSolution> {
    let sys = Stacked::new(instance);
    let fixed = alloc::vec![None; sys.n()];
    let (u, lambda) = sys.solve_reduced(&fixed).ok_or(Error::SingularKkt)?;
    let interior = (0..sys.n()).all(|j| sys.lo[j] < u[j] && u[j] < sys.hi[j]);
    if !interior {
        return solve_active_set(instance);
    }
    Ok(OracleSolution {
        value: instance.primal_cost(&u)?,
        primal: u,
        multipliers: lambda,
        method: OracleMethod::Kkt,
    })
}

/// Box-constrained optimum. Tries the active-set loop first and falls back on
/// plain dual ascent with a tenth of the engine's step sizes.
pub fn solve_active_set(instance: &ProblemInstance) -> Result<OracleSolution> {
    let sys = Stacked::new(instance);
    if let Some(gap) = sys.interval_gap() {
        return Err(Error::Infeasible { residual: gap });
    }
    if let Some((u, lambda)) = sys.active_set() {
        return Ok(OracleSolution {
            value: instance.primal_cost(&u)?,
            primal: u,
            multipliers: lambda,
            method: OracleMethod::ActiveSet,
        });
    }
    let residual = sys.least_residual()?;
    if residual > 1e-8 * (1.0 + sys.rhs.norm()) {
        return Err(Error::Infeasible { residual });
    }
    dual_ascent(instance)
}

/// Whether the coupled problem has a feasible point.
pub fn certify_feasible(instance: &ProblemInstance) -> bool {
    if instance.dual_dim() == 0 {
        return true;
    }
    let sys = Stacked::new(instance);
    if sys.interval_gap().is_some() {
        return false;
    }
    if sys.active_set().is_some() {
        return true;
    }
    sys.least_residual()
        .is_ok_and(|r| r <= 1e-8 * (1.0 + sys.rhs.norm()))
}

fn dual_ascent(instance: &ProblemInstance) -> Result<OracleSolution> {
    let steps = build_stepsizes(instance, 0.1)?;
    let n = instance.len();
    let mut lambda: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::zeros(instance.agent(i).rows()))
        .collect();
    let mut residual = f64::INFINITY;
    for _ in 0..ASCENT_MAX_ITERS {
        let u = (0..n)
            .map(|i| {
                let a = linear_term(instance, i, |j| &lambda[j]);
                instance.solver(i).solve(instance.agent(i), &a)
            })
            .collect::<Result<Vec<_>>>()?;
        let grads: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let agent = instance.agent(i);
                let mut r = -agent.rhs.clone();
                for (&j, block) in &agent.blocks {
                    r += block * &u[j];
                }
                r
            })
            .collect();
        residual = libm::sqrt(grads.iter().map(|g| g.norm_squared()).sum());
        if residual <= ASCENT_TOL {
            let mut primal = DVector::zeros(instance.primal_dim());
            for (i, b) in u.iter().enumerate() {
                primal.rows_range_mut(instance.primal_range(i)).copy_from(b);
            }
            let mut multipliers = DVector::zeros(instance.dual_dim());
            for (i, b) in lambda.iter().enumerate() {
                multipliers.rows_range_mut(instance.dual_range(i)).copy_from(b);
            }
            return Ok(OracleSolution {
                value: instance.primal_cost(&primal)?,
                primal,
                multipliers,
                method: OracleMethod::DualAscent,
            });
        }
        for i in 0..n {
            lambda[i] += &grads[i] * steps.step[i];
        }
    }
    Err(Error::OracleStalled { residual })
}

/// Dual value computed directly from the stacked data, independent of the
/// engine's evaluation path.
pub fn dual_value(instance: &ProblemInstance, lambda: &DVector<f64>) -> Result<f64> {
    let blocks: Vec<DVector<f64>> = (0..instance.len())
        .map(|i| instance.dual_block(lambda, i))
        .collect();
    let mut total = 0.0;
    for i in 0..instance.len() {
        let agent = instance.agent(i);
        let a = linear_term(instance, i, |j| &blocks[j]);
        let u = instance.solver(i).solve(agent, &a)?;
        total += dual_value_term(agent, &blocks[i], &a, &u);
    }
    Ok(total)
}

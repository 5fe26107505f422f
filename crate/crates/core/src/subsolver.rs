//! Exact local minimization `argmin_{u∈[lo,hi]} ½uᵀQu + (c + a)ᵀu`.

use nalgebra::DVector;

use crate::linalg::{clip, is_diagonal, max_eigenvalue, min_eigenvalue};
use crate::model::{AgentSpec, ProblemInstance};
use crate::{Error, Result};

/// Fixed-point tolerance of the general (non-diagonal) path.
pub const INNER_TOL: f64 = 1e-12;
pub const INNER_MAX_ITERS: usize = 100_000;

const PD_TOL: f64 = 1e-12;

/// Per-agent solver data computed once at validation.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolver {
    agent: usize,
    sigma: f64,
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Diagonal(DVector<f64>),
    Dense { lipschitz: f64 },
}

impl LocalSolver {
    /// Classifies the cost and checks positive definiteness.
    pub fn new(index: usize, agent: &AgentSpec) -> Result<Self> {
        let sigma = min_eigenvalue(&agent.cost);
        if !(sigma > PD_TOL) {
            return Err(Error::NotPositiveDefinite {
                agent: index,
                min_eigenvalue: sigma,
            });
        }
        let kind = if is_diagonal(&agent.cost) {
            Kind::Diagonal(agent.cost.diagonal())
        } else {
            Kind::Dense {
                lipschitz: max_eigenvalue(&agent.cost),
            }
        };
        Ok(Self {
            agent: index,
            sigma,
            kind,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, Kind::Diagonal(_))
    }

    /// Unique box-constrained minimizer for the linear term `a`.
    pub fn solve(&self, agent: &AgentSpec, a: &DVector<f64>) -> Result<DVector<f64>> {
        if a.len() != agent.dim() {
            return Err(Error::DimensionMismatch {
                expected: agent.dim(),
                got: a.len(),
            });
        }
        match &self.kind {
            Kind::Diagonal(q) => Ok(solve_diagonal(q, agent, a)),
            Kind::Dense { lipschitz } => self.solve_dense(*lipschitz, agent, a),
        }
    }

    /// Projected gradient with constant strongly-convex momentum.
    fn solve_dense(
        &self,
        lipschitz: f64,
        agent: &AgentSpec,
        a: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        solve_projected(agent, a, lipschitz, self.sigma).map_err(|residual| {
            Error::LocalSolverStalled {
                agent: self.agent,
                iterations: INNER_MAX_ITERS,
                residual,
            }
        })
    }
}

fn solve_diagonal(q: &DVector<f64>, agent: &AgentSpec, a: &DVector<f64>) -> DVector<f64> {
    let free = DVector::from_iterator(
        q.len(),
        q.iter()
            .zip(agent.linear.iter().zip(a.iter()))
            .map(|(&qk, (&ck, &ak))| -(ck + ak) / qk),
    );
    clip(&free, &agent.lo, &agent.hi)
}

/// Runs the iterative path regardless of the cost structure. `Err` carries the
/// last fixed-point residual.
pub(crate) fn solve_projected(
    agent: &AgentSpec,
    a: &DVector<f64>,
    lipschitz: f64,
    sigma: f64,
) -> core::result::Result<DVector<f64>, f64> {
    let lin = &agent.linear + a;
    let grad = |u: &DVector<f64>| &agent.cost * u + &lin;
    let step = 1.0 / lipschitz;
    let (sl, ss) = (libm::sqrt(lipschitz), libm::sqrt(sigma));
    let momentum = (sl - ss) / (sl + ss);

    let diag = agent.cost.diagonal();
    let start = DVector::from_iterator(
        lin.len(),
        lin.iter().zip(diag.iter()).map(|(&l, &d)| -l / d),
    );
    let mut x = clip(&start, &agent.lo, &agent.hi);
    let mut y = x.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..INNER_MAX_ITERS {
        let next = clip(&(&y - grad(&y) * step), &agent.lo, &agent.hi);
        let fixed = clip(&(&next - grad(&next) * step), &agent.lo, &agent.hi);
        residual = (&next - fixed).norm();
        if residual <= INNER_TOL {
            return Ok(next);
        }
        y = &next + (&next - &x) * momentum;
        x = next;
    }
    Err(residual)
}

/// Solves agent `agent`'s local problem with the instance's cached solver.
pub fn solve_local(agent: &AgentSpec, a: &DVector<f64>) -> Result<DVector<f64>> {
    LocalSolver::new(0, agent)?.solve(agent, a)
}

/// `a_i = Σ_{j∈M_i} G_j^{iᵀ} μ_j`, where `multiplier(j)` yields `μ_j`.
/// Terms are accumulated in ascending `j`.
pub fn linear_term<'m>(
    instance: &ProblemInstance,
    i: usize,
    multiplier: impl Fn(usize) -> &'m DVector<f64>,
) -> DVector<f64> {
    let mut a = DVector::zeros(instance.agent(i).dim());
    for &j in instance.out_neighbors(i) {
        let owner = instance.agent(j);
        if owner.rows() == 0 {
            continue;
        }
        a += owner.blocks[&i].tr_mul(multiplier(j));
    }
    a
}

/// Agent `i`'s share of the dual function:
/// `f_i(u*) − ⟨λ_i, g_i⟩ + ⟨a_i, u*⟩` with `a_i` the linear term at `λ`.
pub fn dual_value_term(
    agent: &AgentSpec,
    own_multiplier: &DVector<f64>,
    a: &DVector<f64>,
    u: &DVector<f64>,
) -> f64 {
    agent.cost_at(u) - own_multiplier.dot(&agent.rhs) + a.dot(u)
}

//! The coupled problem: agents, their coupling blocks and the influence graph.
//!
//! Agents are addressed by their zero-based position in the instance. Primal
//! and dual vectors are stacked agent by agent in that order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::subsolver::LocalSolver;
use crate::{Error, Result};

/// One agent: `½uᵀQu + cᵀu` over the box `[lo, hi]`, plus its coupling rows
/// `Σ_j G_i^j u_j = g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub cost: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
    pub rhs: DVector<f64>,
    /// `G_i^j` keyed by the column agent `j`; the self block uses `j = i`.
    pub blocks: BTreeMap<usize, DMatrix<f64>>,
}

impl AgentSpec {
    /// An agent without coupling rows of its own.
    pub fn new(
        cost: DMatrix<f64>,
        linear: DVector<f64>,
        lo: DVector<f64>,
        hi: DVector<f64>,
    ) -> Self {
        Self {
            cost,
            linear,
            lo,
            hi,
            rhs: DVector::zeros(0),
            blocks: BTreeMap::new(),
        }
    }

    /// Diagonal cost with the given curvatures.
    pub fn diagonal(
        curvature: &[f64],
        linear: &[f64],
        lo: &[f64],
        hi: &[f64],
    ) -> Self {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(curvature)),
            DVector::from_column_slice(linear),
            DVector::from_column_slice(lo),
            DVector::from_column_slice(hi),
        )
    }

    /// Attach coupling rows with right-hand side `rhs`.
    pub fn with_constraint(
        mut self,
        rhs: DVector<f64>,
        blocks: impl IntoIterator<Item = (usize, DMatrix<f64>)>,
    ) -> Self {
        self.rhs = rhs;
        self.blocks = blocks.into_iter().collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// Number of coupling rows owned by this agent.
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn block(&self, j: usize) -> Option<&DMatrix<f64>> {
        self.blocks.get(&j)
    }

    /// `f_i(u) = ½uᵀQu + cᵀu`.
    pub fn cost_at(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.cost * u)) + self.linear.dot(u)
    }
}

/// In-neighbors `N_i` (agents whose variables enter `i`'s rows, excluding `i`)
/// and out-neighbors `M_i` (agents whose rows involve `u_i`, including `i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceGraph {
    pub in_neighbors: Vec<BTreeSet<usize>>,
    pub out_neighbors: Vec<BTreeSet<usize>>,
}

impl InfluenceGraph {
    pub fn len(&self) -> usize {
        self.in_neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_neighbors.is_empty()
    }
}

/// `N_i` are the block keys other than `i`; `M_i = {i} ∪ {j : i ∈ N_j}`.
pub fn derive_graph(agents: &[AgentSpec]) -> InfluenceGraph {
    let n = agents.len();
    let in_neighbors: Vec<BTreeSet<usize>> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| a.blocks.keys().copied().filter(|&j| j != i).collect())
        .collect();
    let mut out_neighbors: Vec<BTreeSet<usize>> =
        (0..n).map(|i| BTreeSet::from([i])).collect();
    for (i, ins) in in_neighbors.iter().enumerate() {
        for &j in ins {
            out_neighbors[j].insert(i);
        }
    }
    InfluenceGraph {
        in_neighbors,
        out_neighbors,
    }
}

/// A validated instance. Immutable once built.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    agents: Vec<AgentSpec>,
    graph: InfluenceGraph,
    solvers: Vec<LocalSolver>,
    primal_offsets: Vec<usize>,
    dual_offsets: Vec<usize>,
}

impl ProblemInstance {
    pub fn new(agents: Vec<AgentSpec>) -> Result<Self> {
        let n = agents.len();
        for (i, agent) in agents.iter().enumerate() {
            validate_agent(i, agent, &agents)?;
        }
        let solvers = agents
            .iter()
            .enumerate()
            .map(|(i, a)| LocalSolver::new(i, a))
            .collect::<Result<Vec<_>>>()?;
        let graph = derive_graph(&agents);
        let mut primal_offsets = Vec::with_capacity(n + 1);
        let mut dual_offsets = Vec::with_capacity(n + 1);
        let (mut p, mut d) = (0, 0);
        for a in &agents {
            primal_offsets.push(p);
            dual_offsets.push(d);
            p += a.dim();
            d += a.rows();
        }
        primal_offsets.push(p);
        dual_offsets.push(d);
        Ok(Self {
            agents,
            graph,
            solvers,
            primal_offsets,
            dual_offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.agents[i]
    }

    pub fn graph(&self) -> &InfluenceGraph {
        &self.graph
    }

    pub fn in_neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.graph.in_neighbors[i]
    }

    pub fn out_neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.graph.out_neighbors[i]
    }

    pub fn solver(&self, i: usize) -> &LocalSolver {
        &self.solvers[i]
    }

    /// Strong convexity parameter `σ_i` (minimum eigenvalue of `Q_i`).
    pub fn sigma(&self, i: usize) -> f64 {
        self.solvers[i].sigma()
    }

    pub fn primal_dim(&self) -> usize {
        self.primal_offsets[self.len()]
    }

    pub fn dual_dim(&self) -> usize {
        self.dual_offsets[self.len()]
    }

    pub fn primal_range(&self, i: usize) -> Range<usize> {
        self.primal_offsets[i]..self.primal_offsets[i + 1]
    }

    pub fn dual_range(&self, i: usize) -> Range<usize> {
        self.dual_offsets[i]..self.dual_offsets[i + 1]
    }

    pub fn primal_block(&self, u: &DVector<f64>, i: usize) -> DVector<f64> {
        u.rows_range(self.primal_range(i)).into_owned()
    }

    pub fn dual_block(&self, lambda: &DVector<f64>, i: usize) -> DVector<f64> {
        lambda.rows_range(self.dual_range(i)).into_owned()
    }

    fn check_primal(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.primal_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.primal_dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `Σ_i f_i(u_i)`.
    pub fn primal_cost(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_primal(u)?;
        Ok(self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.cost_at(&self.primal_block(u, i)))
            .sum())
    }

    /// Stacked `G_i^i u_i + Σ_{j∈N_i} G_i^j u_j − g_i`.
    pub fn constraint_residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_primal(u)?;
        let blocks: Vec<DVector<f64>> = (0..self.len()).map(|i| self.primal_block(u, i)).collect();
        let mut out = DVector::zeros(self.dual_dim());
        for i in 0..self.len() {
            let r = self.row_residual(i, |j| &blocks[j]);
            out.rows_range_mut(self.dual_range(i)).copy_from(&r);
        }
        Ok(out)
    }

    /// Residual of agent `i`'s rows given a lookup for the primal blocks.
    /// Terms are summed self block first, then in-neighbors ascending.
    pub(crate) fn row_residual<'u>(
        &self,
        i: usize,
        primal: impl Fn(usize) -> &'u DVector<f64>,
    ) -> DVector<f64> {
        let agent = &self.agents[i];
        if agent.rows() == 0 {
            return DVector::zeros(0);
        }
        let mut r = &agent.blocks[&i] * primal(i);
        for &j in &self.graph.in_neighbors[i] {
            r += &agent.blocks[&j] * primal(j);
        }
        r - &agent.rhs
    }

    /// Dense stacked coupling matrix `G` (Σm_i × Σn_i).
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dual_dim(), self.primal_dim());
        for (i, agent) in self.agents.iter().enumerate() {
            let rows = self.dual_range(i);
            for (&j, block) in &agent.blocks {
                let cols = self.primal_range(j);
                g.view_mut((rows.start, cols.start), (rows.len(), cols.len()))
                    .copy_from(block);
            }
        }
        g
    }

    pub fn stacked_rhs(&self) -> DVector<f64> {
        let mut g = DVector::zeros(self.dual_dim());
        for (i, a) in self.agents.iter().enumerate() {
            g.rows_range_mut(self.dual_range(i)).copy_from(&a.rhs);
        }
        g
    }

    pub fn stacked_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let mut lo = DVector::zeros(self.primal_dim());
        let mut hi = DVector::zeros(self.primal_dim());
        for (i, a) in self.agents.iter().enumerate() {
            lo.rows_range_mut(self.primal_range(i)).copy_from(&a.lo);
            hi.rows_range_mut(self.primal_range(i)).copy_from(&a.hi);
        }
        (lo, hi)
    }
}

fn invalid(agent: usize, reason: alloc::string::String) -> Error {
    Error::InvalidAgent { agent, reason }
}

fn validate_agent(i: usize, agent: &AgentSpec, all: &[AgentSpec]) -> Result<()> {
    let n = agent.dim();
    if n == 0 {
        return Err(invalid(i, "dimension must be positive".into()));
    }
    if agent.cost.shape() != (n, n) {
        return Err(invalid(
            i,
            format!("cost matrix is {:?}, expected {n}x{n}", agent.cost.shape()),
        ));
    }
    if agent.lo.len() != n || agent.hi.len() != n {
        return Err(invalid(i, format!("box bounds must have length {n}")));
    }
    if agent.cost.iter().chain(agent.linear.iter()).any(|x| !x.is_finite()) {
        return Err(invalid(i, "non-finite cost coefficient".into()));
    }
    let scale = agent.cost.amax().max(1.0);
    if (&agent.cost - agent.cost.transpose()).amax() > 1e-12 * scale {
        return Err(invalid(i, "cost matrix is not symmetric".into()));
    }
    if agent.lo.iter().chain(agent.hi.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InfiniteBound { agent: i });
    }
    if agent.lo.iter().zip(agent.hi.iter()).any(|(l, h)| l > h) {
        return Err(invalid(i, "box has lo > hi".into()));
    }
    let m = agent.rows();
    if agent.rhs.iter().any(|x| !x.is_finite()) {
        return Err(invalid(i, "non-finite right-hand side".into()));
    }
    if m == 0 {
        if !agent.blocks.is_empty() {
            return Err(invalid(i, "coupling blocks given but m = 0".into()));
        }
        return Ok(());
    }
    match agent.blocks.get(&i) {
        None => return Err(Error::ZeroDiagonalBlock { agent: i }),
        Some(b) if b.iter().all(|&x| x == 0.0) => {
            return Err(Error::ZeroDiagonalBlock { agent: i })
        }
        _ => {}
    }
    for (&j, block) in &agent.blocks {
        let Some(other) = all.get(j) else {
            return Err(invalid(i, format!("block references unknown agent {j}")));
        };
        if block.shape() != (m, other.dim()) {
            return Err(invalid(
                i,
                format!(
                    "block G^{j} is {:?}, expected {m}x{}",
                    block.shape(),
                    other.dim()
                ),
            ));
        }
        if block.iter().any(|x| !x.is_finite()) {
            return Err(invalid(i, format!("block G^{j} has non-finite entries")));
        }
        if j != i && block.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroCouplingBlock {
                agent: i,
                neighbor: j,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::vec;

    /// Two scalar agents, `u_1 + u_2 = 2` owned by agent 0, unit curvature.
    pub fn instance_a() -> ProblemInstance {
        let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-10.0], &[10.0]).with_constraint(
            DVector::from_vec(vec![2.0]),
            [
                (0, DMatrix::from_element(1, 1, 1.0)),
                (1, DMatrix::from_element(1, 1, 1.0)),
            ],
        );
        let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-10.0], &[10.0]);
        ProblemInstance::new(vec![a0, a1]).unwrap()
    }

    /// Three agents where agent 0 reads agent 1 and agent 2 reads agent 0.
    pub fn figure_one() -> ProblemInstance {
        let one = || DMatrix::from_element(1, 1, 1.0);
        let rhs = || DVector::from_vec(vec![1.0]);
        let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-5.0], &[5.0])
            .with_constraint(rhs(), [(0, one()), (1, one())]);
        let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-5.0], &[5.0])
            .with_constraint(rhs(), [(1, one())]);
        let a2 = AgentSpec::diagonal(&[1.0], &[0.0], &[-5.0], &[5.0])
            .with_constraint(rhs(), [(2, one()), (0, one())]);
        ProblemInstance::new(vec![a0, a1, a2]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use alloc::vec;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn instance_a_graph() {
        let p = instance_a();
        assert_eq!(p.len(), 2);
        assert_eq!(p.in_neighbors(0), &set(&[1]));
        assert_eq!(p.out_neighbors(0), &set(&[0]));
        assert_eq!(p.out_neighbors(1), &set(&[0, 1]));
        assert!(p.in_neighbors(1).is_empty());
    }

    #[test]
    fn figure_one_graph() {
        let p = figure_one();
        assert_eq!(p.in_neighbors(0), &set(&[1]));
        assert_eq!(p.out_neighbors(0), &set(&[0, 2]));
    }

    #[test]
    fn single_agent_graph() {
        let a = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0])
            .with_constraint(DVector::zeros(1), [(0, DMatrix::identity(1, 1))]);
        let g = derive_graph(&[a]);
        assert!(g.in_neighbors[0].is_empty());
        assert_eq!(g.out_neighbors[0], set(&[0]));
    }

    #[test]
    fn cost_and_residual() {
        let p = instance_a();
        let u = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        assert_eq!(p.primal_cost(&u(1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(p.primal_cost(&u(2.0, 0.0)).unwrap(), 2.0);
        assert_eq!(p.constraint_residual(&u(1.0, 1.0)).unwrap()[0], 0.0);
        assert_eq!(p.constraint_residual(&u(0.0, 0.0)).unwrap()[0], -2.0);
        assert!(matches!(
            p.primal_cost(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_cost_zero_residual() {
        let a = AgentSpec::diagonal(&[3.0, 1.0], &[0.0, 0.0], &[-1.0; 2], &[1.0; 2])
            .with_constraint(DVector::zeros(1), [(0, DMatrix::from_row_slice(1, 2, &[1.0, 2.0]))]);
        let p = ProblemInstance::new(vec![a]).unwrap();
        assert_eq!(p.primal_cost(&DVector::zeros(2)).unwrap(), 0.0);
        assert_eq!(p.constraint_residual(&DVector::zeros(2)).unwrap().norm(), 0.0);
    }

    #[test]
    fn rejects_zero_diagonal_block() {
        let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]).with_constraint(
            DVector::from_vec(vec![2.0]),
            [(0, DMatrix::zeros(1, 1)), (1, DMatrix::from_element(1, 1, 1.0))],
        );
        let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]);
        let err = ProblemInstance::new(vec![a0, a1]).unwrap_err();
        assert_eq!(err, Error::ZeroDiagonalBlock { agent: 0 });
        assert!(alloc::string::ToString::to_string(&err).contains("zero diagonal block"));
    }

    #[test]
    fn rejects_bad_costs_and_boxes() {
        let not_pd = AgentSpec::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            DVector::zeros(2),
            DVector::from_element(2, -1.0),
            DVector::from_element(2, 1.0),
        );
        assert!(matches!(
            ProblemInstance::new(vec![not_pd]),
            Err(Error::NotPositiveDefinite { agent: 0, .. })
        ));
        let inf = AgentSpec::diagonal(&[1.0], &[0.0], &[f64::NEG_INFINITY], &[1.0]);
        assert_eq!(
            ProblemInstance::new(vec![inf]).unwrap_err(),
            Error::InfiniteBound { agent: 0 }
        );
        let inverted = AgentSpec::diagonal(&[1.0], &[0.0], &[1.0], &[0.0]);
        assert!(ProblemInstance::new(vec![inverted]).is_err());
    }

    #[test]
    fn rejects_block_shape_mismatch() {
        let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]).with_constraint(
            DVector::from_vec(vec![2.0]),
            [(0, DMatrix::from_element(1, 1, 1.0)), (1, DMatrix::from_element(1, 2, 1.0))],
        );
        let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]);
        assert!(matches!(
            ProblemInstance::new(vec![a0, a1]),
            Err(Error::InvalidAgent { agent: 0, .. })
        ));
    }

    #[test]
    fn coupling_matrix_matches_residual() {
        let p = figure_one();
        let u = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let direct = p.coupling_matrix() * &u - p.stacked_rhs();
        assert_eq!(direct, p.constraint_residual(&u).unwrap());
    }
}

//! Intra-day DC optimal power flow as a coupled instance.
//!
//! Every bus is an agent. Its variables are the hourly outputs of the
//! generators it hosts followed by its hourly phase angles; its coupling rows
//! are the DC balance `P^g_{i,t} − P^l_{i,t} = Σ_{j∈N_i} B_ij (ψ_{i,t} − ψ_{j,t})`.
//! Angles carry a small quadratic weight so every local cost is strongly
//! convex, and the reference bus angle is pinned by a degenerate box.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::model::{AgentSpec, ProblemInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    /// `P^l_{i,t}` for `t = 1..h`.
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
}

/// Cost `a P² + b P` with `0 ≤ P ≤ pmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub a: f64,
    pub b: f64,
    pub pmax: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpfCase {
    pub horizon: usize,
    pub reference_bus: usize,
    /// Weight `ε_ψ` of `Σ_t ψ_{i,t}²`.
    pub angle_weight: f64,
    /// Angle box `[−ψ_max, ψ_max]`.
    pub angle_limit: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

fn invalid(msg: alloc::string::String) -> Error {
    Error::InvalidCase(msg)
}

/// Where each generator output and angle sits in the stacked primal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OpfLayout {
    pub horizon: usize,
    /// Bus ids in agent order (ascending id).
    pub bus_ids: Vec<usize>,
    /// Generator indices (into `OpfCase::generators`) hosted by each agent.
    pub hosted: Vec<Vec<usize>>,
}

impl OpfLayout {
    pub fn new(case: &OpfCase) -> Self {
        let mut bus_ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
        bus_ids.sort_unstable();
        let mut hosted = vec![Vec::new(); bus_ids.len()];
        for (g, gen) in case.generators.iter().enumerate() {
            if let Ok(i) = bus_ids.binary_search(&gen.bus) {
                hosted[i].push(g);
            }
        }
        Self {
            horizon: case.horizon,
            bus_ids,
            hosted,
        }
    }

    pub fn agent_of(&self, bus: usize) -> Option<usize> {
        self.bus_ids.binary_search(&bus).ok()
    }

    pub fn dim(&self, agent: usize) -> usize {
        (self.hosted[agent].len() + 1) * self.horizon
    }

    /// Local index of the `slot`-th hosted generator at hour `t` (zero-based).
    pub fn generation(&self, slot: usize, t: usize) -> usize {
        slot * self.horizon + t
    }

    /// Local index of the angle at hour `t`.
    pub fn angle(&self, agent: usize, t: usize) -> usize {
        self.hosted[agent].len() * self.horizon + t
    }

    /// `Σ_i P^g_{i,t}` read from a stacked primal vector.
    pub fn total_generation(&self, instance: &ProblemInstance, u: &DVector<f64>, t: usize) -> f64 {
        (0..self.bus_ids.len())
            .map(|i| {
                let base = instance.primal_range(i).start;
                (0..self.hosted[i].len())
                    .map(|s| u[base + self.generation(s, t)])
                    .sum::<f64>()
            })
            .sum()
    }
}

impl OpfCase {
    pub fn total_demand(&self, t: usize) -> f64 {
        self.buses.iter().map(|b| b.demand[t]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon must be positive".into()));
        }
        if !(self.angle_weight > 0.0 && self.angle_weight.is_finite()) {
            return Err(invalid("eps_psi must be positive".into()));
        }
        if !(self.angle_limit > 0.0 && self.angle_limit.is_finite()) {
            return Err(invalid("psi_max must be positive and finite".into()));
        }
        let mut ids = BTreeSet::new();
        for bus in &self.buses {
            if !ids.insert(bus.id) {
                return Err(invalid(format!("duplicate bus {}", bus.id)));
            }
            if bus.demand.len() != self.horizon {
                return Err(invalid(format!(
                    "bus {} has {} demand values, expected {}",
                    bus.id,
                    bus.demand.len(),
                    self.horizon
                )));
            }
            if bus.demand.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
                return Err(invalid(format!("bus {} has negative demand", bus.id)));
            }
        }
        if !ids.contains(&self.reference_bus) {
            return Err(invalid(format!("reference bus {} not found", self.reference_bus)));
        }
        for br in &self.branches {
            if !ids.contains(&br.from) || !ids.contains(&br.to) {
                return Err(invalid(format!("branch {}-{} has an unknown end", br.from, br.to)));
            }
            if br.from == br.to {
                return Err(invalid(format!("branch {}-{} is a self loop", br.from, br.to)));
            }
            if br.susceptance == 0.0 || !br.susceptance.is_finite() {
                return Err(invalid(format!("branch {}-{} has zero susceptance", br.from, br.to)));
            }
        }
        for g in &self.generators {
            if !ids.contains(&g.bus) {
                return Err(invalid(format!("generator at unknown bus {}", g.bus)));
            }
            if !(g.a > 0.0 && g.a.is_finite()) {
                return Err(invalid(format!("generator at bus {} needs a > 0", g.bus)));
            }
            if !(g.pmax >= 0.0 && g.pmax.is_finite()) || !g.b.is_finite() {
                return Err(invalid(format!("generator at bus {} has bad limits", g.bus)));
            }
        }
        if !self.is_connected() {
            return Err(invalid("branch graph is disconnected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut adj: BTreeMap<usize, Vec<usize>> =
            self.buses.iter().map(|b| (b.id, Vec::new())).collect();
        for br in &self.branches {
            adj.entry(br.from).or_default().push(br.to);
            adj.entry(br.to).or_default().push(br.from);
        }
        let Some(&start) = adj.keys().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[&v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == adj.len()
    }

    /// Net susceptance per unordered bus pair; parallel branches add up.
    fn susceptances(&self, layout: &OpfLayout) -> BTreeMap<(usize, usize), f64> {
        let mut out = BTreeMap::new();
        for br in &self.branches {
            let (i, j) = (layout.agent_of(br.from).unwrap(), layout.agent_of(br.to).unwrap());
            *out.entry((i.min(j), i.max(j))).or_insert(0.0) += br.susceptance;
        }
        out
    }
}

/// Builds the coupled instance; see the module docs for the layout.
pub fn build_opf_instance(case: &OpfCase) -> Result<ProblemInstance> {
    case.validate()?;
    let layout = OpfLayout::new(case);
    let h = case.horizon;
    let n = layout.bus_ids.len();
    let lines = case.susceptances(&layout);
    let mut neighbors: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (&(i, j), &b) in &lines {
        if b == 0.0 {
            return Err(invalid(format!(
                "buses {} and {} have zero net susceptance",
                layout.bus_ids[i], layout.bus_ids[j]
            )));
        }
        neighbors[i].insert(j, b);
        neighbors[j].insert(i, b);
    }
    let mut by_id: BTreeMap<usize, &Bus> = BTreeMap::new();
    for bus in &case.buses {
        by_id.insert(bus.id, bus);
    }

    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let bus = by_id[&layout.bus_ids[i]];
        let dim = layout.dim(i);
        let mut curvature = DVector::zeros(dim);
        let mut linear = DVector::zeros(dim);
        let mut lo = DVector::zeros(dim);
        let mut hi = DVector::zeros(dim);
        for (slot, &g) in layout.hosted[i].iter().enumerate() {
            let gen = &case.generators[g];
            for t in 0..h {
                let k = layout.generation(slot, t);
                curvature[k] = 2.0 * gen.a;
                linear[k] = gen.b;
                hi[k] = gen.pmax;
            }
        }
        let pinned = bus.id == case.reference_bus;
        for t in 0..h {
            let k = layout.angle(i, t);
            curvature[k] = 2.0 * case.angle_weight;
            if !pinned {
                lo[k] = -case.angle_limit;
                hi[k] = case.angle_limit;
            }
        }

        let total: f64 = neighbors[i].values().sum();
        let mut own = DMatrix::zeros(h, dim);
        for t in 0..h {
            for slot in 0..layout.hosted[i].len() {
                own[(t, layout.generation(slot, t))] = 1.0;
            }
            own[(t, layout.angle(i, t))] = -total;
        }
        let mut blocks = vec![(i, own)];
        for (&j, &b) in &neighbors[i] {
            let mut block = DMatrix::zeros(h, layout.dim(j));
            for t in 0..h {
                block[(t, layout.angle(j, t))] = b;
            }
            blocks.push((j, block));
        }
        let agent = AgentSpec::new(DMatrix::from_diagonal(&curvature), linear, lo, hi)
            .with_constraint(DVector::from_column_slice(&bus.demand), blocks);
        agents.push(agent);
    }
    ProblemInstance::new(agents)
}


#[cfg(test)]
mod tests {
    use super::fixtures::two_bus;
    use super::*;
    use crate::oracle::solve_active_set;

    #[test]
    fn two_bus_structure() {
        let case = two_bus(1);
        let p = build_opf_instance(&case).unwrap();
        assert_eq!(p.len(), 2);
        let (a0, a1) = (p.agent(0), p.agent(1));
        assert_eq!(a0.dim(), 2);
        assert_eq!(a1.dim(), 1);
        assert_eq!((a1.lo[0], a1.hi[0]), (0.0, 0.0));
        assert_eq!(a0.blocks[&0], DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(a0.blocks[&1], DMatrix::from_row_slice(1, 1, &[1.0]));
        assert_eq!(a1.blocks[&1], DMatrix::from_row_slice(1, 1, &[-1.0]));
        assert_eq!(a1.blocks[&0], DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!(a1.rhs[0], 1.0);
        assert_eq!(a0.cost[(0, 0)], 1.0);
        for i in 0..2 {
            let mut m = p.in_neighbors(i).clone();
            m.insert(i);
            assert_eq!(&m, p.out_neighbors(i));
        }
    }

    #[test]
    fn two_bus_oracle() {
        let p = build_opf_instance(&two_bus(1)).unwrap();
        let s = solve_active_set(&p).unwrap();
        assert!((s.primal[0] - 1.0).abs() < 1e-9);
        assert!((s.primal[1] - 1.0).abs() < 1e-9);
        assert!(s.primal[2].abs() < 1e-15);
    }

    #[test]
    fn horizon_decouples() {
        let case = two_bus(2);
        let p = build_opf_instance(&case).unwrap();
        let layout = OpfLayout::new(&case);
        let s = solve_active_set(&p).unwrap();
        for t in 0..2 {
            let mut single = two_bus(1);
            single.buses[1].demand = vec![case.buses[1].demand[t]];
            let one = solve_active_set(&build_opf_instance(&single).unwrap()).unwrap();
            let base = p.primal_range(0).start;
            assert!((s.primal[base + layout.generation(0, t)] - one.primal[0]).abs() < 1e-9);
            assert!((s.primal[base + layout.angle(0, t)] - one.primal[1]).abs() < 1e-9);
            let gen = layout.total_generation(&p, &s.primal, t);
            assert!((gen - case.total_demand(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let mut case = two_bus(3);
        case.buses.push(Bus { id: 3, demand: vec![0.2; 3] });
        case.branches.push(Branch { from: 2, to: 3, susceptance: 4.0 });
        case.branches.push(Branch { from: 1, to: 3, susceptance: 2.5 });
        let layout = OpfLayout::new(&case);
        let p = build_opf_instance(&case).unwrap();
        for i in 0..p.len() {
            let agent = p.agent(i);
            for t in 0..3 {
                let mut sum = 0.0;
                for (&j, block) in &agent.blocks {
                    sum += block[(t, layout.angle(j, t))];
                }
                assert!(sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_demand_is_trivial() {
        let mut case = two_bus(1);
        case.buses[1].demand = vec![0.0];
        let s = solve_active_set(&build_opf_instance(&case).unwrap()).unwrap();
        assert!(s.primal.amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_cases() {
        let mut c = two_bus(1);
        c.reference_bus = 9;
        assert!(build_opf_instance(&c).is_err());
        let mut c = two_bus(1);
        c.branches[0].susceptance = 0.0;
        assert!(build_opf_instance(&c).is_err());
        let mut c = two_bus(1);
        c.buses.push(Bus { id: 3, demand: vec![0.0] });
        assert!(matches!(build_opf_instance(&c), Err(Error::InvalidCase(m)) if m.contains("disconnected")));
    }
}

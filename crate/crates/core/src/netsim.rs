//! Random communication graph with i.i.d. Bernoulli link activations.
//!
//! The link between agents `i` and `j` is present in the support whenever one
//! reads the other's variables (`j ∈ N_i ∪ M_i`). At iteration `k` it is active
//! with probability `β_{i,j}`, drawn from a ChaCha stream keyed by the link and
//! positioned by `k`, so a draw depends only on `(seed, {i,j}, k)`.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::ProblemInstance;
use crate::{Error, Result};

/// Unordered link `{i, j}` stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(usize, usize);

impl Edge {
    pub fn new(i: usize, j: usize) -> Self {
        if i <= j {
            Self(i, j)
        } else {
            Self(j, i)
        }
    }

    pub fn endpoints(self) -> (usize, usize) {
        (self.0, self.1)
    }

    fn stream(self) -> u64 {
        ((self.0 as u64) << 32) | (self.1 as u64 & 0xffff_ffff)
    }
}

#[derive(Debug, Clone)]
pub struct NetworkModel {
    edges: Vec<Edge>,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    in_neighbors: Vec<Vec<usize>>,
    seed: u64,
    base: ChaCha8Rng,
}

/// Active links at one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkDraw<'a> {
    pub k: usize,
    active: Vec<bool>,
    edges: &'a [Edge],
}

impl LinkDraw<'_> {
    /// `true` for self-links and active edges; `false` for links outside the
    /// support.
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        i == j
            || self
                .edges
                .binary_search(&Edge::new(i, j))
                .is_ok_and(|e| self.active[e])
    }

    pub fn active_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(&edge, _)| edge)
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

impl NetworkModel {
    /// Uniform activation `β = 1 − γ` on every link of the support.
    pub fn build(instance: &ProblemInstance, gamma: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidFailureProbability(gamma));
        }
        let mut edges = Vec::new();
        for i in 0..instance.len() {
            let reach = instance
                .in_neighbors(i)
                .iter()
                .chain(instance.out_neighbors(i).iter());
            for &j in reach {
                if j != i {
                    edges.push(Edge::new(i, j));
                }
            }
        }
        edges.sort();
        edges.dedup();
        let beta = alloc::vec![1.0 - gamma; edges.len()];
        let in_neighbors = (0..instance.len())
            .map(|i| instance.in_neighbors(i).iter().copied().collect())
            .collect();
        let mut model = Self {
            edges,
            beta,
            alpha: Vec::new(),
            in_neighbors,
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        };
        model.refresh_alpha();
        Ok(model)
    }

    /// Overrides `β` for one link of the support.
    pub fn set_beta(&mut self, i: usize, j: usize, beta: f64) -> Result<()> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidActivation(beta));
        }
        let e = self
            .edges
            .binary_search(&Edge::new(i, j))
            .map_err(|_| Error::UnknownEdge(i, j))?;
        self.beta[e] = beta;
        self.refresh_alpha();
        Ok(())
    }

    fn refresh_alpha(&mut self) {
        self.alpha = self
            .in_neighbors
            .iter()
            .enumerate()
            .map(|(i, ins)| ins.iter().map(|&j| self.beta(i, j)).product())
            .collect();
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `β_{i,j}`; one for `i == j`, zero outside the support.
    pub fn beta(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.edges
            .binary_search(&Edge::new(i, j))
            .map_or(0.0, |e| self.beta[e])
    }

    /// Probability that every in-neighbor link of `i` is active at once.
    pub fn alpha(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    /// Links active at iteration `k`.
    pub fn draw_links(&self, k: usize) -> LinkDraw<'_> {
        let active = self
            .edges
            .iter()
            .zip(&self.beta)
            .map(|(&edge, &beta)| beta >= 1.0 || self.uniform(edge, k) < beta)
            .collect();
        LinkDraw {
            k,
            active,
            edges: &self.edges,
        }
    }

    fn uniform(&self, edge: Edge, k: usize) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(edge.stream());
        rng.set_word_pos(2 * k as u128);
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `true` iff every link `{i, j}` with `j ∈ required` is active.
pub fn neighbors_active<'a>(
    draw: &LinkDraw,
    i: usize,
    required: impl IntoIterator<Item = &'a usize>,
) -> bool {
    required.into_iter().all(|&j| draw.is_active(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{figure_one, instance_a};
    use alloc::collections::BTreeSet;

    #[test]
    fn no_failures_means_unit_probabilities() {
        let p = figure_one();
        let net = NetworkModel::build(&p, 0.0, 7).unwrap();
        assert!(net.alphas().iter().all(|&a| a == 1.0));
        for k in 0..50 {
            assert_eq!(net.draw_links(k).active_count(), net.edges().len());
        }
    }

    #[test]
    fn instance_a_network() {
        let p = instance_a();
        let net = NetworkModel::build(&p, 0.5, 1).unwrap();
        assert_eq!(net.edges(), &[Edge::new(0, 1)]);
        assert_eq!(net.beta(0, 1), 0.5);
        assert_eq!(net.alpha(0), 0.5);
        assert_eq!(net.alpha(1), 1.0);
    }

    #[test]
    fn alpha_is_product_over_in_neighbors() {
        // Agent 0 reads agents 1 and 2.
        use crate::model::AgentSpec;
        use nalgebra::{DMatrix, DVector};
        let one = || DMatrix::from_element(1, 1, 1.0);
        let a0 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0])
            .with_constraint(DVector::zeros(1), [(0, one()), (1, one()), (2, one())]);
        let a1 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]);
        let a2 = AgentSpec::diagonal(&[1.0], &[0.0], &[-1.0], &[1.0]);
        let p = ProblemInstance::new(alloc::vec![a0, a1, a2]).unwrap();
        let net = NetworkModel::build(&p, 0.1, 0).unwrap();
        assert!((net.alpha(0) - 0.81).abs() < 1e-12);
    }

    #[test]
    fn rejects_certain_failure() {
        assert!(NetworkModel::build(&instance_a(), 1.0, 0).is_err());
        assert!(NetworkModel::build(&instance_a(), -0.1, 0).is_err());
    }

    #[test]
    fn draws_are_repeatable_and_order_free() {
        let p = figure_one();
        let net = NetworkModel::build(&p, 0.4, 99).unwrap();
        let forward: alloc::vec::Vec<_> = (0..100).map(|k| net.draw_links(k)).collect();
        for k in (0..100).rev() {
            assert_eq!(net.draw_links(k), forward[k]);
        }
    }

    #[test]
    fn neighbor_check() {
        let p = instance_a();
        let mut net = NetworkModel::build(&p, 0.5, 3).unwrap();
        let empty: BTreeSet<usize> = BTreeSet::new();
        let draw = net.draw_links(0);
        assert!(neighbors_active(&draw, 0, &empty));
        let (mut seen_on, mut seen_off) = (false, false);
        for k in 0..200 {
            let d = net.draw_links(k);
            let on = d.is_active(0, 1);
            assert_eq!(neighbors_active(&d, 0, p.in_neighbors(0)), on);
            assert!(neighbors_active(&d, 1, p.in_neighbors(1)));
            seen_on |= on;
            seen_off |= !on;
        }
        assert!(seen_on && seen_off);
        net.set_beta(0, 1, 1.0).unwrap();
        assert!(net.draw_links(5).is_active(1, 0));
        assert!(net.set_beta(0, 0, 0.5).is_err());
    }

    #[test]
    fn bernoulli_frequency() {
        let net = NetworkModel::build(&instance_a(), 0.5, 2024).unwrap();
        let k_max = 100_000;
        let hits = (0..k_max).filter(|&k| net.draw_links(k).is_active(0, 1)).count();
        let freq = hits as f64 / k_max as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }
}

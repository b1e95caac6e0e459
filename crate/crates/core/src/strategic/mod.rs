//! Strategic network formation: pairwise stability and extremal equilibria
//! under non-negative externalities, simulated minimum distance, a two-step
//! estimator for directed links under private information, and a
//! sequential-meeting chain with its exponential-family stationary law.

pub mod leung;
pub mod mele;
pub mod miyauchi;

pub use leung::{cell_beliefs, leung_fit, BeliefCell, simulate_leung, LeungFit, LeungModel, LeungSimulation};
pub use mele::{ergm_exact, mele_chain, total_variation, ChainRun, MeleModel, Potential};
pub use miyauchi::{
    injective_triad_covariance, is_pairwise_stable, iterate_phi, marginal_utility, min_max_equilibria, phi,
    simulate_moments, smd_fit, utility, EquilibriumPair, MiyauchiParams, Selection, ShockDist,
    Shocks, SimulatedMoments, SmdMode, SmdResult, StabilityReport, Violation, ViolationKind,
};

use crate::graph::Graph;

/// Undirected network on `0..n` stored as adjacency bitsets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Net {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Net {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Net {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut net = Net::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                net.set(i, j, true);
            }
        }
        net
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        debug_assert!(i != j);
        for (a, b) in [(i, j), (j, i)] {
            let w = &mut self.rows[a * self.words + b / 64];
            if on {
                *w |= 1 << (b % 64);
            } else {
                *w &= !(1 << (b % 64));
            }
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    /// Number of common neighbours of `i` and `j`.
    pub fn common(&self, i: usize, j: usize) -> usize {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Edgewise inclusion.
    pub fn is_subset_of(&self, other: &Net) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn to_graph(&self) -> Graph {
        Graph::from_fn(self.n, |i, j| self.has(i, j))
    }

    pub fn from_graph(g: &Graph) -> Self {
        let mut net = Net::empty(g.n());
        for &(u, v) in g.edges() {
            net.set(u, v, true);
        }
        net
    }

    /// Bit code over dyads in lexicographic order (`n <= 11`).
    pub fn code(&self) -> u64 {
        let mut code = 0u64;
        let mut bit = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has(i, j) {
                    code |= 1 << bit;
                }
                bit += 1;
            }
        }
        code
    }

    pub fn from_code(n: usize, code: u64) -> Self {
        let mut net = Net::empty(n);
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if code >> bit & 1 == 1 {
                    net.set(i, j, true);
                }
                bit += 1;
            }
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn net_basics() {
        let mut a = Net::empty(70);
        a.set(0, 65, true);
        a.set(1, 65, true);
        a.set(0, 1, true);
        assert_eq!(a.common(0, 1), 1);
        assert_eq!(a.degree(65), 2);
        assert_eq!(a.edge_count(), 3);
        assert!(a.is_subset_of(&Net::complete(70)));
        assert!(!Net::complete(70).is_subset_of(&a));
        let g = a.to_graph();
        assert_eq!(Net::from_graph(&g), a);
        let small = Net::from_code(5, 0b1011_0010_01);
        assert_eq!(small.code(), 0b1011_0010_01);
    }
}

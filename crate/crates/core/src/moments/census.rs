//! Induced subgraph censuses of orders 2 to 4.

use super::enumerate::{choose_u128, tally_exact};
use crate::graph::{Graph, Graphlet};
use rayon::prelude::*;

/// Induced counts of every isomorphism class of a given order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub order: usize,
    /// Canonical representative and number of p-subsets inducing it.
    pub classes: Vec<(Graphlet, u64)>,
}

impl Census {
    pub fn count(&self, g: &Graphlet) -> u64 {
        let c = g.canonical();
        self.classes
            .iter()
            .find(|(k, _)| *k == c)
            .map_or(0, |(_, n)| *n)
    }

    pub fn total(&self) -> u128 {
        self.classes.iter().map(|(_, n)| *n as u128).sum()
    }

    /// Labelled copies of `s` present as partial subgraphs, summed over all
    /// p-subsets.
    pub fn injective_count(&self, s: &Graphlet) -> u64 {
        let copies = s.labelled_copies();
        self.classes
            .iter()
            .map(|(t, n)| {
                let inside = copies.iter().filter(|c| c.is_partial_subgraph_of(t)).count();
                inside as u64 * n
            })
            .sum()
    }
}

/// Canonical classes of order `p`, ordered by mask.
pub fn classes(p: usize) -> Vec<Graphlet> {
    let pairs = p * p.saturating_sub(1) / 2;
    let mut out: Vec<Graphlet> = (0..1u32 << pairs)
        .map(|m| Graphlet::from_mask(p, m).canonical())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Triad census by edge count (empty, one edge, two-star, triangle).
///
/// Every triad is classified exactly once: for each pair `i < j` the third
/// vertex ranges over `k > j`, and the three pattern counts come from
/// neighbourhood intersections restricted to that range.
pub fn triad_census(graph: &Graph) -> [u64; 4] {
    let n = graph.n();
    if n < 3 {
        return [0; 4];
    }
    (0..n - 2)
        .into_par_iter()
        .map(|i| {
            let mut c = [0u64; 4];
            for j in i + 1..n - 1 {
                let total = (n - 1 - j) as u64;
                let (ci, cj, both) = tail_counts(graph, i, j);
                let base = graph.has_edge(i, j) as usize;
                c[base + 2] += both;
                c[base + 1] += ci + cj - 2 * both;
                c[base] += total + both - ci - cj;
            }
            c
        })
        .reduce(
            || [0; 4],
            |mut a, b| {
                (0..4).for_each(|t| a[t] += b[t]);
                a
            },
        )
}

/// Neighbours of `i`, of `j`, and common neighbours, among vertices `> j`.
fn tail_counts(graph: &Graph, i: usize, j: usize) -> (u64, u64, u64) {
    match graph.bits() {
        Some(bits) => {
            let (ri, rj) = (bits.row(i), bits.row(j));
            let first = (j + 1) / 64;
            let lead = !0u64 << ((j + 1) % 64);
            let (mut ci, mut cj, mut both) = (0, 0, 0);
            for w in first..bits.words() {
                let keep = if w == first { lead } else { !0 };
                let (a, b) = (ri[w] & keep, rj[w] & keep);
                ci += a.count_ones() as u64;
                cj += b.count_ones() as u64;
                both += (a & b).count_ones() as u64;
            }
            (ci, cj, both)
        }
        None => {
            let (a, b) = (graph.neighbors(i), graph.neighbors(j));
            let a = &a[a.partition_point(|&v| v <= j)..];
            let b = &b[b.partition_point(|&v| v <= j)..];
            let (mut x, mut y, mut both) = (0, 0, 0u64);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        both += 1;
                        x += 1;
                        y += 1;
                    }
                }
            }
            (a.len() as u64, b.len() as u64, both)
        }
    }
}

/// Full induced census of order `p` (2, 3 or 4).
pub fn census(graph: &Graph, p: usize) -> Census {
    assert!((2..=4).contains(&p), "census supports orders 2 to 4");
    let cls = classes(p);
    let counts: Vec<u64> = match p {
        2 => {
            let m = graph.edge_count() as u64;
            let all = choose_u128(graph.n(), 2) as u64;
            vec![all - m, m]
        }
        3 => triad_census(graph).to_vec(),
        _ => {
            let tables: Vec<Vec<u32>> = cls
                .iter()
                .map(|c| {
                    (0..64u32)
                        .map(|m| (Graphlet::from_mask(4, m).canonical() == *c) as u32)
                        .collect()
                })
                .collect();
            tally_exact(graph, 4, &tables)
        }
    };
    Census {
        order: p,
        classes: cls.into_iter().zip(counts).collect(),
    }
}

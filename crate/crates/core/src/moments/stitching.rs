//! Graphlet stitchings and their occurrence frequencies.
//!
//! A stitching places a labelled copy of `R` on vertices `0..p` and a
//! labelled copy of `S` on `p-q..2p-q`; the two must agree on the `q` shared
//! vertices. Pairs joining an `R`-only vertex to an `S`-only vertex are left
//! unconstrained ("free").

use super::enumerate::{choose, tally_exact, tally_subsample};
use crate::error::{Error, Result};
use crate::graph::{pair_bit, Graph, Graphlet};

/// A stitched graph: edges on constrained pairs plus the mask of free pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StitchPattern {
    pub order: usize,
    pub free: u32,
    pub edges: u32,
}

impl StitchPattern {
    /// Canonical relabelling; two patterns are isomorphic (with free pairs
    /// mapped to free pairs) iff their canonical forms agree.
    pub fn canonical(&self) -> Self {
        let perms = crate::graph::graphlet_permutations(self.order);
        let (free, edges) = perms
            .iter()
            .map(|perm| {
                (
                    crate::graph::graphlet_permute_mask(self.free, self.order, perm),
                    crate::graph::graphlet_permute_mask(self.edges, self.order, perm),
                )
            })
            .min()
            .expect("at least one permutation");
        StitchPattern {
            order: self.order,
            free,
            edges,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones() as usize
    }

    /// Number of constrained pairs (edges plus required non-edges).
    pub fn constrained_pairs(&self) -> usize {
        self.order * (self.order - 1) / 2 - self.free.count_ones() as usize
    }

    /// The edges as an ordinary graphlet, ignoring the free mask.
    pub fn graphlet(&self) -> Graphlet {
        Graphlet::from_mask(self.order, self.edges)
    }
}

/// Non-isomorphic stitchings of `R` and `S` on `q` shared vertices, with the
/// number of labelled placements falling in each class.
#[derive(Clone, Debug)]
pub struct StitchingMultiset {
    pub r: Graphlet,
    pub s: Graphlet,
    pub q: usize,
    pub entries: Vec<(StitchPattern, usize)>,
}

impl StitchingMultiset {
    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn multiplicity_of(&self, pattern: &StitchPattern) -> usize {
        let c = pattern.canonical();
        self.entries
            .iter()
            .find(|(p, _)| *p == c)
            .map_or(0, |e| e.1)
    }

    /// Stitching probability under an Erdos-Renyi graph with edge
    /// probability `rho`, divided by `|iso(R)| |iso(S)|`.
    pub fn er_value(&self, rho: f64) -> f64 {
        let norm = (self.r.iso_count() * self.s.iso_count()) as f64;
        self.entries
            .iter()
            .map(|(w, nu)| {
                let e = w.edge_count() as i32;
                let non = (w.constrained_pairs() - w.edge_count()) as i32;
                *nu as f64 * rho.powi(e) * (1.0 - rho).powi(non)
            })
            .sum::<f64>()
            / norm
    }
}

/// Builds the stitching multiset of `(R, S)` on `q` shared vertices.
pub fn stitching_multiset(r: &Graphlet, s: &Graphlet, q: usize) -> Result<StitchingMultiset> {
    let p = r.order();
    if s.order() != p {
        return Err(Error::Config("stitched graphlets must share an order".into()));
    }
    if p > 4 {
        return Err(Error::Config(format!("stitching supports order <= 4, got {p}")));
    }
    if q < 1 || q > p {
        return Err(Error::Config(format!("overlap q={q} must lie in 1..={p}")));
    }
    let m = 2 * p - q;
    let off = p - q;
    let overlap_r: Vec<usize> = (off..p).collect();
    let overlap_s: Vec<usize> = (0..q).collect();
    let mut free = 0u32;
    for a in 0..off {
        for b in p..m {
            free |= pair_bit(a, b);
        }
    }

    let mut found: Vec<(StitchPattern, usize)> = Vec::new();
    for rc in r.labelled_copies() {
        let r_over = rc.restrict(&overlap_r);
        for sc in s.labelled_copies() {
            if sc.restrict(&overlap_s) != r_over {
                continue;
            }
            let mut edges = rc.mask();
            for (a, b) in sc.edges() {
                edges |= pair_bit(a + off, b + off);
            }
            let key = StitchPattern {
                order: m,
                free,
                edges,
            }
            .canonical();
            match found.iter_mut().find(|(k, _)| *k == key) {
                Some(e) => e.1 += 1,
                None => found.push((key, 1)),
            }
        }
    }
    found.sort();
    Ok(StitchingMultiset {
        r: *r,
        s: *s,
        q,
        entries: found,
    })
}

/// Ordered placements `(A, B)` of two p-subsets of `0..m` sharing `q`
/// vertices and covering all of `0..m`.
pub(crate) fn placements(p: usize, q: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let m = 2 * p - q;
    let mut out = Vec::new();
    for a_mask in 0u32..(1 << m) {
        if a_mask.count_ones() as usize != p {
            continue;
        }
        let rest = !a_mask & ((1 << m) - 1);
        for shared in 0u32..(1 << m) {
            if shared & !a_mask != 0 || shared.count_ones() as usize != q {
                continue;
            }
            let b_mask = rest | shared;
            let bits = |mk: u32| (0..m).filter(|&v| mk >> v & 1 == 1).collect::<Vec<_>>();
            out.push((bits(a_mask), bits(b_mask)));
        }
    }
    out
}

/// Table over induced masks on `2p-q` vertices counting placements `(A, B)`
/// with `G[A] ~ R` and `G[B] ~ S`.
pub(crate) fn stitch_table(r: &Graphlet, s: &Graphlet, q: usize) -> Vec<u32> {
    let p = r.order();
    let m = 2 * p - q;
    let pl = placements(p, q);
    let (rc, sc) = (r.canonical(), s.canonical());
    let size = 1usize << (m * (m - 1) / 2);
    (0..size as u32)
        .map(|mask| {
            let g = Graphlet::from_mask(m, mask);
            pl.iter()
                .filter(|(a, b)| {
                    g.restrict(a).canonical() == rc && g.restrict(b).canonical() == sc
                })
                .count() as u32
        })
        .collect()
}

/// How `stitching_frequency` visits the (2p-q)-subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TupleMode {
    Exact,
    Subsample { draws: usize, seed: u64 },
}

/// Estimated stitching frequency with its subsampling standard error
/// (zero in exact mode).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frequency {
    pub value: f64,
    pub se: f64,
}

/// Minimum recommended number of subsampled tuples.
pub const MIN_SUBSAMPLE: usize = 10_000;

/// Average over ordered pairs of p-subsets sharing `q` vertices of
/// `1(R ~ G[A]) 1(S ~ G[B])`, divided by `|iso(R)| |iso(S)|`.
pub fn stitching_frequency(
    graph: &Graph,
    ms: &StitchingMultiset,
    mode: TupleMode,
) -> Result<Frequency> {
    Ok(stitching_frequencies(graph, &[(ms.r, ms.s)], ms.q, mode)?[0])
}

/// `stitching_frequency` for several `(R, S)` pairs of a common order in a
/// single pass over the tuples.
pub fn stitching_frequencies(
    graph: &Graph,
    pairs: &[(Graphlet, Graphlet)],
    q: usize,
    mode: TupleMode,
) -> Result<Vec<Frequency>> {
    let Some(p) = pairs.first().map(|x| x.0.order()) else {
        return Ok(Vec::new());
    };
    if pairs
        .iter()
        .any(|(r, s)| r.order() != p || s.order() != p)
    {
        return Err(Error::Config("all stitched graphlets must share an order".into()));
    }
    if q < 1 || q > p {
        return Err(Error::Config(format!("overlap q={q} must lie in 1..={p}")));
    }
    let m = 2 * p - q;
    if graph.n() < m {
        return Err(Error::UndefinedInput(format!(
            "need at least {m} nodes for stitchings of order {p} on {q} vertices"
        )));
    }
    if m > 6 {
        return Err(Error::Config(format!(
            "stitchings on {m} vertices are not tabulated"
        )));
    }
    let tables: Vec<Vec<u32>> = pairs.iter().map(|(r, s)| stitch_table(r, s, q)).collect();
    let per_tuple = choose(m, p) * choose(p, q);
    let norms: Vec<f64> = pairs
        .iter()
        .map(|(r, s)| per_tuple * (r.iso_count() * s.iso_count()) as f64)
        .collect();
    Ok(match mode {
        TupleMode::Exact => {
            let tuples = choose(graph.n(), m);
            tally_exact(graph, m, &tables)
                .into_iter()
                .zip(&norms)
                .map(|(c, z)| Frequency {
                    value: c as f64 / (tuples * z),
                    se: 0.0,
                })
                .collect()
        }
        TupleMode::Subsample { draws, seed } => {
            if draws < 2 {
                return Err(Error::Config("subsampling needs at least 2 draws".into()));
            }
            tally_subsample(graph, m, &tables, draws, seed)
                .into_iter()
                .zip(&norms)
                .map(|((mean, se), z)| Frequency {
                    value: mean / z,
                    se: se / z,
                })
                .collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::sample_er;

    fn pattern(m: usize, free: &[(usize, usize)], edges: &[(usize, usize)]) -> StitchPattern {
        let f = free.iter().fold(0, |a, &(x, y)| a | pair_bit(x, y));
        let e = edges.iter().fold(0, |a, &(x, y)| a | pair_bit(x, y));
        StitchPattern {
            order: m,
            free: f,
            edges: e,
        }
    }

    fn free_pairs(p: usize, q: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for a in 0..p - q {
            for b in p..2 * p - q {
                v.push((a, b));
            }
        }
        v
    }

    #[test]
    fn two_star_single_overlap() {
        let w = stitching_multiset(&Graphlet::two_star(), &Graphlet::two_star(), 1).unwrap();
        assert_eq!(w.entries.len(), 3);
        assert_eq!(w.total_multiplicity(), 9);
        let f = free_pairs(3, 1);
        // R on {0,1,2}, S on {2,3,4}
        let four_star = pattern(5, &f, &[(2, 0), (2, 1), (2, 3), (2, 4)]);
        let tailed = pattern(5, &f, &[(2, 0), (2, 1), (3, 2), (3, 4)]);
        let path = pattern(5, &f, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(w.multiplicity_of(&four_star), 1);
        assert_eq!(w.multiplicity_of(&tailed), 4);
        assert_eq!(w.multiplicity_of(&path), 4);
    }

    #[test]
    fn two_star_double_overlap() {
        let w = stitching_multiset(&Graphlet::two_star(), &Graphlet::two_star(), 2).unwrap();
        let mut nus: Vec<usize> = w.entries.iter().map(|e| e.1).collect();
        nus.sort();
        assert_eq!(nus, vec![1, 2, 2]);
        let f = free_pairs(3, 2);
        // shared {1,2}; four-cycle 0-1-3-2-0 via R centre 1? use R centre 0
        let cycle = pattern(4, &f, &[(0, 1), (0, 2), (3, 1), (3, 2)]);
        assert_eq!(w.multiplicity_of(&cycle), 1);
    }

    #[test]
    fn triangle_and_mixed_multisets() {
        let t = Graphlet::triangle();
        let s = Graphlet::two_star();
        for q in 1..=3 {
            let w = stitching_multiset(&t, &t, q).unwrap();
            assert_eq!(w.entries.len(), 1);
            assert_eq!(w.total_multiplicity(), 1);
        }
        let w1 = stitching_multiset(&s, &t, 1).unwrap();
        let mut nus: Vec<usize> = w1.entries.iter().map(|e| e.1).collect();
        nus.sort();
        assert_eq!(nus, vec![1, 2]);
        let w2 = stitching_multiset(&s, &t, 2).unwrap();
        assert_eq!(w2.entries.iter().map(|e| e.1).collect::<Vec<_>>(), vec![2]);
        assert!(stitching_multiset(&s, &t, 3).unwrap().entries.is_empty());
        assert!(stitching_multiset(&s, &t, 4).is_err());
    }

    #[test]
    fn multiplicities_equal_brute_force_consistent_pairs() {
        let shapes = [
            Graphlet::two_star(),
            Graphlet::triangle(),
            Graphlet::from_edges(3, &[(0, 1)]),
            Graphlet::path(4),
            Graphlet::cycle(4),
        ];
        for r in &shapes {
            for s in shapes.iter().filter(|s| s.order() == r.order()) {
                for q in 1..=r.order() {
                    let w = stitching_multiset(r, s, q).unwrap();
                    let p = r.order();
                    let over_r: Vec<usize> = (p - q..p).collect();
                    let over_s: Vec<usize> = (0..q).collect();
                    let brute = r
                        .labelled_copies()
                        .iter()
                        .flat_map(|a| s.labelled_copies().into_iter().map(move |b| (*a, b)))
                        .filter(|(a, b)| a.restrict(&over_r) == b.restrict(&over_s))
                        .count();
                    assert_eq!(w.total_multiplicity(), brute);
                }
            }
        }
    }

    #[test]
    fn placement_counts() {
        assert_eq!(placements(3, 1).len(), 30);
        assert_eq!(placements(3, 2).len(), 12);
        assert_eq!(placements(3, 3).len(), 1);
    }

    #[test]
    fn empty_graph_has_zero_edge_stitchings() {
        let g = Graph::empty(8);
        let w = stitching_multiset(&Graphlet::two_star(), &Graphlet::two_star(), 1).unwrap();
        let f = stitching_frequency(&g, &w, TupleMode::Exact).unwrap();
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn frequency_matches_pair_enumeration() {
        // Oracle: loop over all ordered pairs of triads sharing q vertices.
        let g = sample_er(9, 0.45, 3).unwrap();
        let triads: Vec<[usize; 3]> = {
            let mut v = Vec::new();
            for a in 0..9 {
                for b in a + 1..9 {
                    for c in b + 1..9 {
                        v.push([a, b, c]);
                    }
                }
            }
            v
        };
        let ind = |t: &[usize; 3], shape: &Graphlet| {
            g.induced_subgraph(t).unwrap().is_isomorphic(shape) as u64
        };
        let (s, t) = (Graphlet::two_star(), Graphlet::triangle());
        for q in 1..=3 {
            let mut hits = 0u64;
            let mut pairs = 0u64;
            for a in &triads {
                for b in &triads {
                    let shared = a.iter().filter(|x| b.contains(x)).count();
                    if shared == q {
                        pairs += 1;
                        hits += ind(a, &s) * ind(b, &t);
                    }
                }
            }
            let want = hits as f64 / (pairs as f64 * 3.0);
            let w = stitching_multiset(&s, &t, q).unwrap();
            let got = stitching_frequency(&g, &w, TupleMode::Exact).unwrap().value;
            assert!((got - want).abs() < 1e-15, "q={q}: {got} vs {want}");
        }
    }
}

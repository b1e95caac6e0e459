//! Graph storage, degree statistics and small-graph utilities.

mod graphlet;
mod io;

pub use graphlet::{pair_bit, Graphlet, MAX_ORDER};
pub(crate) use graphlet::{permutations as graphlet_permutations, permute_mask as graphlet_permute_mask};
pub use io::{load_edgelist, write_edgelist, LoadedGraph};

use crate::error::{Error, Result};

/// Above this order the dense bit matrix is not built.
pub const DEFAULT_DENSE_THRESHOLD: usize = 4096;

/// Row-major bit matrix used for O(1) adjacency lookups and word-wise
/// neighbourhood intersections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix {
            words,
            data: vec![0; words * n],
        }
    }

    fn set(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] |= 1u64 << (c % 64);
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn words(&self) -> usize {
        self.words
    }
}

/// A simple graph on nodes `0..n` without self-loops.
///
/// Undirected graphs keep each edge once as `(u, v)` with `u < v`; directed
/// graphs keep ordered pairs. The structure is immutable once built.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    bits: Option<BitMatrix>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.directed == other.directed && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph, deduplicating repeated edges.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Self> {
        Self::with_threshold(n, directed, edges, DEFAULT_DENSE_THRESHOLD)
    }

    pub fn with_threshold(
        n: usize,
        directed: bool,
        edges: &[(usize, usize)],
        dense_threshold: usize,
    ) -> Result<Self> {
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::UndefinedInput(format!("self-loop at node {u}")));
            }
            list.push(if directed || u < v { (u, v) } else { (v, u) });
        }
        list.sort_unstable();
        list.dedup();

        let mut out = vec![Vec::new(); n];
        let mut inn = if directed { vec![Vec::new(); n] } else { Vec::new() };
        for &(u, v) in &list {
            out[u].push(v);
            if directed {
                inn[v].push(u);
            } else {
                out[v].push(u);
            }
        }
        out.iter_mut().for_each(|l| l.sort_unstable());
        inn.iter_mut().for_each(|l| l.sort_unstable());

        let bits = (n <= dense_threshold).then(|| {
            let mut b = BitMatrix::new(n);
            for &(u, v) in &list {
                b.set(u, v);
                if !directed {
                    b.set(v, u);
                }
            }
            b
        });

        Ok(Graph {
            n,
            directed,
            edges: list,
            out,
            inn,
            bits,
        })
    }

    /// Builds an undirected graph from a dense 0/1 indicator closure.
    pub fn from_fn(n: usize, mut linked: impl FnMut(usize, usize) -> bool) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if linked(i, j) {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, false, &edges).expect("indices are in range")
    }

    pub fn empty(n: usize) -> Self {
        Graph::from_fn(n, |_, _| false)
    }

    pub fn complete(n: usize) -> Self {
        Graph::from_fn(n, |_, _| true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Adjacency query; for directed graphs this asks for the arc `u -> v`.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        match &self.bits {
            Some(b) => b.get(u, v),
            None => self.has_edge_sparse(u, v),
        }
    }

    /// Adjacency query answered from the neighbour lists only.
    pub fn has_edge_sparse(&self, u: usize, v: usize) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    pub fn bits(&self) -> Option<&BitMatrix> {
        self.bits.as_ref()
    }

    /// Out-neighbours (all neighbours when undirected), sorted.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    /// In-neighbours of a directed graph; equals `neighbors` when undirected.
    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        if self.directed {
            &self.inn[u]
        } else {
            &self.out[u]
        }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.out[u].len()
    }

    /// Proportion of connected dyads (ordered dyads when directed).
    pub fn density(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::UndefinedInput(format!(
                "density needs at least 2 nodes, got {}",
                self.n
            )));
        }
        let pairs = (self.n * (self.n - 1)) as f64;
        let m = self.edges.len() as f64;
        Ok(if self.directed { m / pairs } else { 2.0 * m / pairs })
    }

    /// Out-degrees (plain degrees when undirected).
    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence(self.out.iter().map(Vec::len).collect())
    }

    /// In-degrees; equals `degree_sequence` when undirected.
    pub fn in_degree_sequence(&self) -> DegreeSequence {
        if self.directed {
            DegreeSequence(self.inn.iter().map(Vec::len).collect())
        } else {
            self.degree_sequence()
        }
    }

    /// Graph induced on `tuple`, relabelled to `0..p` in tuple order.
    pub fn induced_subgraph(&self, tuple: &[usize]) -> Result<Graphlet> {
        if tuple.len() > MAX_ORDER {
            return Err(Error::Config(format!(
                "graphlets are limited to order {MAX_ORDER}"
            )));
        }
        for (a, &u) in tuple.iter().enumerate() {
            if u >= self.n {
                return Err(Error::VertexOutOfRange { vertex: u, n: self.n });
            }
            if tuple[..a].contains(&u) {
                return Err(Error::RepeatedVertex(u));
            }
        }
        let mut mask = 0u32;
        for b in 1..tuple.len() {
            for a in 0..b {
                let (u, v) = (tuple[a], tuple[b]);
                let linked = if self.directed {
                    self.has_edge(u, v) || self.has_edge(v, u)
                } else {
                    self.has_edge(u, v)
                };
                if linked {
                    mask |= pair_bit(a, b);
                }
            }
        }
        Ok(Graphlet::from_mask(tuple.len(), mask))
    }

    /// Adjacency as a dense row-major 0/1 vector of length n*n.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut d = vec![0u8; self.n * self.n];
        for &(u, v) in &self.edges {
            d[u * self.n + v] = 1;
            if !self.directed {
                d[v * self.n + u] = 1;
            }
        }
        d
    }
}

/// Per-node degree counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.0.len() as f64
    }

    /// Degrees rearranged in ascending order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut d = self.0.clone();
        d.sort_unstable();
        d
    }
}

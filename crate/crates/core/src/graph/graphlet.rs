use std::fmt;
use std::sync::OnceLock;

/// Largest graphlet order supported (stitchings of two order-4 graphlets
/// overlapping on one vertex have seven vertices).
pub const MAX_ORDER: usize = 7;

/// Bit of the unordered pair `{a, b}` in a graphlet mask.
///
/// Pairs are laid out in colex order, so the pairs of `{0..p}` always occupy
/// the low `p(p-1)/2` bits whatever the order.
pub fn pair_bit(a: usize, b: usize) -> u32 {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(a != b && b < MAX_ORDER);
    1 << (b * (b - 1) / 2 + a)
}

/// A small labelled simple graph on vertices `0..p`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graphlet {
    p: u8,
    mask: u32,
}

impl Graphlet {
    pub fn from_mask(p: usize, mask: u32) -> Self {
        assert!(p <= MAX_ORDER, "graphlet order {p} exceeds {MAX_ORDER}");
        let full = full_mask(p);
        assert_eq!(mask & !full, 0, "mask has bits outside order {p}");
        Graphlet { p: p as u8, mask }
    }

    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Self {
        let mask = edges.iter().fold(0, |m, &(a, b)| m | pair_bit(a, b));
        Graphlet::from_mask(p, mask)
    }

    pub fn empty(p: usize) -> Self {
        Graphlet::from_mask(p, 0)
    }

    pub fn complete(p: usize) -> Self {
        Graphlet::from_mask(p, full_mask(p))
    }

    pub fn edge() -> Self {
        Graphlet::complete(2)
    }

    pub fn two_star() -> Self {
        Graphlet::k_star(2)
    }

    pub fn triangle() -> Self {
        Graphlet::complete(3)
    }

    /// Star with centre 0 and `k` leaves.
    pub fn k_star(k: usize) -> Self {
        let edges: Vec<_> = (1..=k).map(|j| (0, j)).collect();
        Graphlet::from_edges(k + 1, &edges)
    }

    pub fn path(p: usize) -> Self {
        let edges: Vec<_> = (1..p).map(|j| (j - 1, j)).collect();
        Graphlet::from_edges(p, &edges)
    }

    pub fn cycle(p: usize) -> Self {
        let mut edges: Vec<_> = (1..p).map(|j| (j - 1, j)).collect();
        edges.push((0, p - 1));
        Graphlet::from_edges(p, &edges)
    }

    pub fn order(&self) -> usize {
        self.p as usize
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn edge_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.mask & pair_bit(a, b) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.order();
        let mut out = Vec::new();
        for b in 1..p {
            for a in 0..b {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.order())
            .filter(|&u| u != v && self.has_edge(u, v))
            .count()
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[u8]) -> Self {
        Graphlet {
            p: self.p,
            mask: permute_mask(self.mask, self.order(), perm),
        }
    }

    /// Lexicographically minimal relabelling (smallest mask).
    pub fn canonical(&self) -> Self {
        let p = self.order();
        let mask = permutations(p)
            .iter()
            .map(|perm| permute_mask(self.mask, p, perm))
            .min()
            .unwrap_or(self.mask);
        Graphlet { p: self.p, mask }
    }

    pub fn is_isomorphic(&self, other: &Graphlet) -> bool {
        self.p == other.p
            && self.edge_count() == other.edge_count()
            && self.canonical() == other.canonical()
    }

    /// Distinct labelled copies of this graphlet on `p` fixed vertices.
    pub fn iso_count(&self) -> usize {
        let p = self.order();
        let mut seen: Vec<u32> = permutations(p)
            .iter()
            .map(|perm| permute_mask(self.mask, p, perm))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// All distinct labelled copies on vertices `0..p`.
    pub fn labelled_copies(&self) -> Vec<Graphlet> {
        let p = self.order();
        let mut masks: Vec<u32> = permutations(p)
            .iter()
            .map(|perm| permute_mask(self.mask, p, perm))
            .collect();
        masks.sort_unstable();
        masks.dedup();
        masks.into_iter().map(|m| Graphlet::from_mask(p, m)).collect()
    }

    /// True when every edge of `self` is present in `host` (same labels).
    pub fn is_partial_subgraph_of(&self, host: &Graphlet) -> bool {
        self.p == host.p && self.mask & !host.mask == 0
    }

    /// Restriction to the vertices listed in `keep`, relabelled in order.
    pub fn restrict(&self, keep: &[usize]) -> Graphlet {
        let mut mask = 0;
        for b in 1..keep.len() {
            for a in 0..b {
                if self.has_edge(keep[a], keep[b]) {
                    mask |= pair_bit(a, b);
                }
            }
        }
        Graphlet::from_mask(keep.len(), mask)
    }
}

impl fmt::Debug for Graphlet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graphlet(p={}, edges={:?})", self.p, self.edges())
    }
}

pub(crate) fn full_mask(p: usize) -> u32 {
    let pairs = p * p.saturating_sub(1) / 2;
    if pairs == 32 {
        u32::MAX
    } else {
        (1u32 << pairs) - 1
    }
}

pub(crate) fn permute_mask(mask: u32, p: usize, perm: &[u8]) -> u32 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros() as usize;
        m &= m - 1;
        let (a, b) = PAIRS[bit];
        debug_assert!((b as usize) < p);
        out |= pair_bit(perm[a as usize] as usize, perm[b as usize] as usize);
    }
    out
}

/// `(a, b)` for each colex pair bit.
const PAIRS: [(u8, u8); 21] = {
    let mut t = [(0u8, 0u8); 21];
    let mut b = 1;
    let mut k = 0;
    while b < MAX_ORDER {
        let mut a = 0;
        while a < b {
            t[k] = (a as u8, b as u8);
            k += 1;
            a += 1;
        }
        b += 1;
    }
    t
};

/// Every permutation of `0..p`, cached per order.
pub(crate) fn permutations(p: usize) -> &'static [Vec<u8>] {
    static CACHE: [OnceLock<Vec<Vec<u8>>>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
    CACHE[p].get_or_init(|| {
        let mut cur: Vec<u8> = (0..p as u8).collect();
        let mut out = vec![cur.clone()];
        while next_permutation(&mut cur) {
            out.push(cur.clone());
        }
        out
    })
}

fn next_permutation(v: &mut [u8]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        for (p, f) in [(0, 1), (1, 1), (3, 6), (5, 120), (7, 5040)] {
            assert_eq!(permutations(p).len(), f, "order {p}");
        }
    }

    #[test]
    fn iso_counts() {
        assert_eq!(Graphlet::two_star().iso_count(), 3);
        assert_eq!(Graphlet::triangle().iso_count(), 1);
        assert_eq!(Graphlet::k_star(3).iso_count(), 4);
        assert_eq!(Graphlet::cycle(4).iso_count(), 3);
        assert_eq!(Graphlet::path(4).iso_count(), 12);
        assert_eq!(Graphlet::empty(4).iso_count(), 1);
    }

    #[test]
    fn two_star_labellings_are_isomorphic() {
        let a = Graphlet::from_edges(3, &[(0, 1), (0, 2)]);
        let b = Graphlet::from_edges(3, &[(1, 2), (0, 2)]);
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&Graphlet::triangle()));
        assert!(!a.is_isomorphic(&Graphlet::path(4)));
    }

    #[test]
    fn restrict_and_subgraph() {
        let k4 = Graphlet::complete(4);
        assert_eq!(k4.restrict(&[0, 2, 3]), Graphlet::triangle());
        assert!(Graphlet::two_star().is_partial_subgraph_of(&Graphlet::triangle()));
        assert!(!Graphlet::triangle().is_partial_subgraph_of(&Graphlet::two_star()));
    }
}

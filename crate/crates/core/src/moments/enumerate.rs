//! Enumeration of vertex subsets with their induced adjacency masks.
//!
//! Visitors receive the induced graphlet mask of each m-subset (vertices in
//! increasing order, colex pair bits). Exact passes split the work over the
//! smallest vertex and add integer tallies, so the totals do not depend on
//! the number of threads.

use crate::graph::{pair_bit, Graph};
use crate::rng::stream;
use rand::Rng;
use rayon::prelude::*;

/// Sums `table[t][mask]` over every m-subset for each table `t`.
pub fn tally_exact(graph: &Graph, m: usize, tables: &[Vec<u32>]) -> Vec<u64> {
    let n = graph.n();
    let k = tables.len();
    if m == 0 || n < m {
        return vec![0; k];
    }
    (0..=n - m)
        .into_par_iter()
        .map(|v0| {
            let mut acc = vec![0u64; k];
            let mut verts = [0usize; 8];
            verts[0] = v0;
            if m == 1 {
                add(&mut acc, tables, 0);
            } else {
                walk(graph, m, 1, v0 + 1, 0, &mut verts, &mut |mask| {
                    add(&mut acc, tables, mask)
                });
            }
            acc
        })
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

#[inline]
fn add(acc: &mut [u64], tables: &[Vec<u32>], mask: u32) {
    for (a, t) in acc.iter_mut().zip(tables) {
        *a += t[mask as usize] as u64;
    }
}

fn walk(
    graph: &Graph,
    m: usize,
    depth: usize,
    start: usize,
    mask: u32,
    verts: &mut [usize; 8],
    visit: &mut impl FnMut(u32),
) {
    let n = graph.n();
    let last = depth + 1 == m;
    for v in start..=n - (m - depth) {
        let mut mk = mask;
        for (s, &u) in verts[..depth].iter().enumerate() {
            if graph.has_edge(u, v) {
                mk |= pair_bit(s, depth);
            }
        }
        if last {
            visit(mk);
        } else {
            verts[depth] = v;
            walk(graph, m, depth + 1, v + 1, mk, verts, visit);
        }
    }
}

/// Calls `visit` with the induced mask of every m-subset (serial order).
pub fn for_each_subset(graph: &Graph, m: usize, mut visit: impl FnMut(&[usize], u32)) {
    let n = graph.n();
    if m == 0 || n < m {
        return;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let mut mask = 0;
        for b in 1..m {
            for a in 0..b {
                if graph.has_edge(idx[a], idx[b]) {
                    mask |= pair_bit(a, b);
                }
            }
        }
        visit(&idx, mask);
        let Some(pos) = (0..m).rev().find(|&i| idx[i] < n - m + i) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..m {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Subsampled version of `tally_exact`: per-table mean and standard error
/// of `table[mask]` over `draws` uniformly chosen m-subsets.
pub fn tally_subsample(
    graph: &Graph,
    m: usize,
    tables: &[Vec<u32>],
    draws: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    const BLOCK: usize = 1 << 14;
    let blocks = draws.div_ceil(BLOCK);
    let k = tables.len();
    let n = graph.n();
    let sums = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, "moments/subsample", &[m as u64, b as u64]);
            let todo = BLOCK.min(draws - b * BLOCK);
            let mut s = vec![(0.0f64, 0.0f64); k];
            let mut verts = [0usize; 8];
            for _ in 0..todo {
                draw_subset(&mut rng, n, m, &mut verts);
                let mut mask = 0;
                for bb in 1..m {
                    for a in 0..bb {
                        if graph.has_edge(verts[a], verts[bb]) {
                            mask |= pair_bit(a, bb);
                        }
                    }
                }
                for (acc, t) in s.iter_mut().zip(tables) {
                    let x = t[mask as usize] as f64;
                    acc.0 += x;
                    acc.1 += x * x;
                }
            }
            s
        })
        .reduce(
            || vec![(0.0, 0.0); k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| {
                    x.0 += y.0;
                    x.1 += y.1
                });
                a
            },
        );
    let d = draws as f64;
    sums.into_iter()
        .map(|(s, ss)| {
            let mean = s / d;
            let var = ((ss / d) - mean * mean).max(0.0) * d / (d - 1.0).max(1.0);
            (mean, (var / d).sqrt())
        })
        .collect()
}

fn draw_subset(rng: &mut impl Rng, n: usize, m: usize, out: &mut [usize; 8]) {
    let mut k = 0;
    while k < m {
        let v = rng.random_range(0..n);
        if !out[..k].contains(&v) {
            out[k] = v;
            k += 1;
        }
    }
    out[..m].sort_unstable();
}

/// Binomial coefficient as a float (exact below 2^53).
pub fn choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact binomial coefficient in integers.
pub fn choose_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::sample_er;

    #[test]
    fn exact_tally_counts_subsets() {
        let g = sample_er(11, 0.4, 2).unwrap();
        for m in 1..=5 {
            let ones = vec![1u32; 1 << (m * (m - 1) / 2)];
            let t = tally_exact(&g, m, &[ones]);
            assert_eq!(t[0] as u128, choose_u128(11, m));
        }
    }

    #[test]
    fn parallel_walk_matches_serial() {
        let g = sample_er(13, 0.5, 8).unwrap();
        let table: Vec<u32> = (0..1024u32).map(|m| m.count_ones()).collect();
        let fast = tally_exact(&g, 5, std::slice::from_ref(&table));
        let mut slow = 0u64;
        for_each_subset(&g, 5, |_, mask| slow += table[mask as usize] as u64);
        assert_eq!(fast[0], slow);
    }

    #[test]
    fn binomials() {
        assert_eq!(choose(119, 5), 182_637_273.0);
        assert_eq!(choose_u128(119, 3), 273_819);
        assert_eq!(choose(3, 5), 0.0);
    }
}

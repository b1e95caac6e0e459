//! Moments of the degree distribution in terms of star densities.

use super::enumerate::choose;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest moment order supported.
pub const MAX_MOMENT: usize = 6;

/// Sum of multinomial coefficients `m! / (p_1! ... p_k!)` over compositions
/// of `m` into `k` positive parts, i.e. the number of surjections from an
/// m-set onto a k-set.
pub fn surjections(m: usize, k: usize) -> u64 {
    fn go(left: usize, parts: usize, denom: u64, fact: &[u64], acc: &mut u64, m: usize) {
        if parts == 0 {
            if left == 0 {
                *acc += fact[m] / denom;
            }
            return;
        }
        for first in 1..=left.saturating_sub(parts - 1) {
            go(left - first, parts - 1, denom * fact[first], fact, acc, m);
        }
    }
    if k == 0 {
        return (m == 0) as u64;
    }
    let fact: Vec<u64> = (0..=m).scan(1u64, |f, i| {
        if i > 0 {
            *f *= i as u64;
        }
        Some(*f)
    }).collect();
    let mut acc = 0;
    go(m, k, 1, &fact, &mut acc, m);
    acc
}

/// Edge density and injective k-star densities `Q(k-star)` for `k >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarDensities {
    pub edge: f64,
    /// `stars[k - 2]` holds `Q(k-star)`.
    pub stars: Vec<f64>,
}

impl StarDensities {
    fn get(&self, k: usize) -> Option<f64> {
        if k == 1 {
            Some(self.edge)
        } else {
            self.stars.get(k - 2).copied()
        }
    }

    /// Empirical densities `Q_N(k-star) = sum_i C(d_i, k) / (C(N, k+1) (k+1))`.
    pub fn from_graph(graph: &Graph, kmax: usize) -> Result<Self> {
        let n = graph.n();
        if n < kmax + 1 {
            return Err(Error::UndefinedInput(format!(
                "need at least {} nodes for {kmax}-stars",
                kmax + 1
            )));
        }
        let stars = (2..=kmax)
            .map(|k| star_count(graph, k) as f64 / (choose(n, k + 1) * (k + 1) as f64))
            .collect();
        Ok(StarDensities {
            edge: graph.density()?,
            stars,
        })
    }
}

/// Number of labelled k-stars (centre plus k leaves), `sum_i C(d_i, k)`.
pub fn star_count(graph: &Graph, k: usize) -> u128 {
    graph
        .degree_sequence()
        .as_slice()
        .iter()
        .map(|&d| super::enumerate::choose_u128(d, k))
        .sum()
}

/// `E[D^m] = sum_k C(N-1, k) surj(m, k) Q(k-star)`, with the 1-star being an
/// edge.
pub fn degree_moment_theoretical(n: usize, m: usize, dens: &StarDensities) -> Result<f64> {
    if m == 0 || m > MAX_MOMENT {
        return Err(Error::Config(format!("moment order {m} outside 1..={MAX_MOMENT}")));
    }
    let missing: Vec<String> = (1..=m)
        .filter(|&k| dens.get(k).is_none())
        .map(|k| if k == 1 { "edge".into() } else { format!("{k}-star") })
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingDensity(missing.join(", ")));
    }
    Ok((1..=m)
        .map(|k| choose(n - 1, k) * surjections(m, k) as f64 * dens.get(k).unwrap())
        .sum())
}

/// `(1/N) sum_i D_i^m`.
pub fn degree_moment_empirical(graph: &Graph, m: usize) -> f64 {
    let d = graph.degree_sequence();
    d.as_slice().iter().map(|&x| (x as f64).powi(m as i32)).sum::<f64>() / graph.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::sample_er;

    fn stirling2(m: usize, k: usize) -> u64 {
        match (m, k) {
            (0, 0) => 1,
            (_, 0) | (0, _) => 0,
            _ => k as u64 * stirling2(m - 1, k) + stirling2(m - 1, k - 1),
        }
    }

    #[test]
    fn surjections_are_k_factorial_stirling() {
        for m in 1..=MAX_MOMENT {
            for k in 1..=m {
                let kf: u64 = (1..=k as u64).product();
                assert_eq!(surjections(m, k), kf * stirling2(m, k), "m={m} k={k}");
            }
        }
        assert_eq!(surjections(2, 1), 1);
        assert_eq!(surjections(2, 2), 2);
        assert_eq!([1, 2, 3].map(|k| surjections(3, k)), [1, 6, 6]);
    }

    #[test]
    fn per_node_identity() {
        // 3^2 = 1*C(3,1) + 2*C(3,2)
        assert_eq!(3 + 2 * 3, 9);
        for d in 0..40u64 {
            for m in 1..=MAX_MOMENT {
                let rhs: u128 = (1..=m)
                    .map(|k| surjections(m, k) as u128 * super::super::enumerate::choose_u128(d as usize, k))
                    .sum();
                assert_eq!(rhs, (d as u128).pow(m as u32));
            }
        }
    }

    #[test]
    fn theory_with_empirical_densities_reproduces_moments() {
        let g = sample_er(40, 0.3, 5).unwrap();
        let dens = StarDensities::from_graph(&g, 6).unwrap();
        for m in 1..=6 {
            let t = degree_moment_theoretical(40, m, &dens).unwrap();
            let e = degree_moment_empirical(&g, m);
            assert!((t - e).abs() <= 1e-9 * e.max(1.0), "m={m}: {t} vs {e}");
        }
    }

    #[test]
    fn missing_inputs_are_listed() {
        let dens = StarDensities {
            edge: 0.1,
            stars: vec![0.01],
        };
        match degree_moment_theoretical(10, 4, &dens) {
            Err(Error::MissingDensity(s)) => assert_eq!(s, "3-star, 4-star"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Samplers for exchangeable random graphs and the beta-model likelihood.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::stream;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

/// Law of the node effects in the beta-model.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeEffectLaw {
    Normal { mean: f64, sd: f64 },
    /// `low` with probability `p_low`, otherwise `high`.
    TwoPoint { low: f64, high: f64, p_low: f64 },
}

/// Edge probability function used by `sample_graph`.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphonSpec {
    Constant(f64),
    Beta(NodeEffectLaw),
    Threshold(f64),
    /// `rho_n * w(u, v)` with `w` bilinearly interpolated from a k-by-k grid
    /// whose nodes sit at `a / (k - 1)`.
    Grid { k: usize, rho_n: f64, w: Vec<f64> },
}

/// A sampled graph together with the latent node draws that produced it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub graph: Graph,
    pub latent: Vec<f64>,
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl GraphonSpec {
    /// Builds a grid graphon, symmetrising `w` by averaging with its transpose.
    pub fn grid(k: usize, rho_n: f64, w: Vec<f64>) -> Result<Self> {
        if k == 0 || w.len() != k * k {
            return Err(Error::Config(format!(
                "grid graphon needs {k}x{k} values, got {}",
                w.len()
            )));
        }
        let mut sym = w.clone();
        for a in 0..k {
            for b in 0..k {
                sym[a * k + b] = 0.5 * (w[a * k + b] + w[b * k + a]);
            }
        }
        let spec = GraphonSpec::Grid { k, rho_n, w: sym };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the grid file format: header `k rho_n`, then k rows of k values.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let mut nums = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number {t:?} in graphon grid")))
            });
        let k = nums
            .next()
            .ok_or_else(|| Error::Config("empty graphon grid".into()))??;
        let rho_n = nums
            .next()
            .ok_or_else(|| Error::Config("graphon grid lacks rho_n".into()))??;
        let w = nums.collect::<Result<Vec<f64>>>()?;
        if k < 1.0 || k.fract() != 0.0 {
            return Err(Error::Config(format!("grid size {k} is not a positive integer")));
        }
        GraphonSpec::grid(k as usize, rho_n, w)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(what));
        match self {
            GraphonSpec::Constant(r) if !(0.0..=1.0).contains(r) => {
                bad(format!("edge probability {r} outside [0,1]"))
            }
            GraphonSpec::Threshold(a) if !(0.0..=2.0).contains(a) => {
                bad(format!("threshold {a} outside [0,2]"))
            }
            GraphonSpec::Beta(NodeEffectLaw::Normal { sd, .. }) if !(*sd >= 0.0) => {
                bad(format!("node effect sd {sd} must be nonnegative"))
            }
            GraphonSpec::Beta(NodeEffectLaw::TwoPoint { p_low, .. })
                if !(0.0..=1.0).contains(p_low) =>
            {
                bad(format!("two-point probability {p_low} outside [0,1]"))
            }
            GraphonSpec::Grid { rho_n, w, .. } => {
                if w.iter().any(|x| !(0.0..=f64::INFINITY).contains(x)) {
                    return bad("graphon values must be nonnegative".into());
                }
                let max = w.iter().cloned().fold(0.0, f64::max);
                if !(0.0..=1.0).contains(&(rho_n * max)) || *rho_n < 0.0 {
                    return bad(format!("rho_n * max(w) = {} exceeds 1", rho_n * max));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn draw_latent(&self, rng: &mut impl Rng) -> f64 {
        match self {
            GraphonSpec::Beta(NodeEffectLaw::Normal { mean, sd }) => Normal::new(*mean, *sd)
                .expect("validated sd")
                .sample(rng),
            GraphonSpec::Beta(NodeEffectLaw::TwoPoint { low, high, p_low }) => {
                if rng.random::<f64>() < *p_low {
                    *low
                } else {
                    *high
                }
            }
            _ => rng.random::<f64>(),
        }
    }

    /// Link probability for latent values `u`, `v`.
    pub fn edge_probability(&self, u: f64, v: f64) -> f64 {
        match self {
            GraphonSpec::Constant(r) => *r,
            GraphonSpec::Beta(_) => logistic(u + v),
            GraphonSpec::Threshold(a) => {
                if u + v >= *a {
                    1.0
                } else {
                    0.0
                }
            }
            GraphonSpec::Grid { k, rho_n, w } => rho_n * bilinear(*k, w, u, v),
        }
    }

    /// `integral of h(u, v)` over the unit square by midpoint quadrature
    /// (only meaningful for kinds with uniform latent draws).
    pub fn mean_probability(&self, cells: usize) -> f64 {
        let h = 1.0 / cells as f64;
        let mut acc = 0.0;
        for a in 0..cells {
            for b in 0..cells {
                acc += self.edge_probability((a as f64 + 0.5) * h, (b as f64 + 0.5) * h);
            }
        }
        acc * h * h
    }
}

fn bilinear(k: usize, w: &[f64], u: f64, v: f64) -> f64 {
    if k == 1 {
        return w[0];
    }
    let scale = (k - 1) as f64;
    let (x, y) = (u.clamp(0.0, 1.0) * scale, v.clamp(0.0, 1.0) * scale);
    let (a, b) = ((x.floor() as usize).min(k - 2), (y.floor() as usize).min(k - 2));
    let (fx, fy) = (x - a as f64, y - b as f64);
    let at = |i: usize, j: usize| w[i * k + j];
    (1.0 - fx) * (1.0 - fy) * at(a, b)
        + fx * (1.0 - fy) * at(a + 1, b)
        + (1.0 - fx) * fy * at(a, b + 1)
        + fx * fy * at(a + 1, b + 1)
}

/// Draws latent node values, then links each dyad independently with
/// probability `h(U_i, U_j)`.
pub fn sample_graph(spec: &GraphonSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 nodes, got {n}")));
    }
    let mut latent_rng = stream(seed, "graphon/latent", &[]);
    let latent: Vec<f64> = (0..n).map(|_| spec.draw_latent(&mut latent_rng)).collect();
    let graph = link_independently(n, seed, |i, j| spec.edge_probability(latent[i], latent[j]));
    Ok(Sample { graph, latent })
}

/// Erdos-Renyi graph with edge probability `rho`.
pub fn sample_er(n: usize, rho: f64, seed: u64) -> Result<Graph> {
    Ok(sample_graph(&GraphonSpec::Constant(rho), n, seed)?.graph)
}

/// Random threshold graph `D_ij = 1(U_i + U_j >= alpha_t)` with uniform `U`.
pub fn sample_threshold(n: usize, alpha_t: f64, seed: u64) -> Result<Sample> {
    sample_graph(&GraphonSpec::Threshold(alpha_t), n, seed)
}

/// Independent dyads given a probability function; row `i` uses its own
/// keyed stream so the result does not depend on the thread count.
pub fn link_independently(
    n: usize,
    seed: u64,
    prob: impl Fn(usize, usize) -> f64 + Sync,
) -> Graph {
    let rows: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "graphon/dyad", &[i as u64]);
            (i + 1..n)
                .filter(|&j| rng.random::<f64>() < prob(i, j))
                .map(|j| (i, j))
                .collect()
        })
        .collect();
    let edges: Vec<_> = rows.into_iter().flatten().collect();
    Graph::from_edges(n, false, &edges).expect("indices in range")
}

/// Log-likelihood of the beta-model at node effects `u`.
pub fn beta_model_loglik(graph: &Graph, u: &[f64]) -> Result<f64> {
    if graph.is_directed() {
        return Err(Error::Config("beta-model needs an undirected graph".into()));
    }
    if u.len() != graph.n() {
        return Err(Error::Config(format!(
            "{} node effects for {} nodes",
            u.len(),
            graph.n()
        )));
    }
    let n = graph.n();
    let mut ll = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = u[i] + u[j];
            if graph.has_edge(i, j) {
                ll += s;
            }
            ll -= softplus(s);
        }
    }
    Ok(ll)
}

//! Sequential meetings with logistic link revision.
//!
//! Each period one pair meets with probability `rho_ij` and then holds a
//! link with log-odds `R_ij' alpha + (beta / N) sum_{k != i, j} (D_ik + D_jk)`.
//! This is a Gibbs update for the potential
//! `sum_{i<j} d_ij R_ij' alpha + (beta / N) sum_i C(deg_i, 2)`, so that
//! potential's exponential family is the stationary law.

use super::Net;
use crate::dyadic::{pair_index, NodeTable, Recipe};
use crate::error::{Error, Result};
use crate::graphon::logistic;
use crate::rng::stream;
use rand::Rng;
use rayon::prelude::*;

pub const MAX_EXACT_N: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct MeleModel {
    n: usize,
    /// Baseline `R_ij' alpha` per unordered pair.
    base: Vec<f64>,
    beta: f64,
    /// Cumulative meeting probabilities per unordered pair.
    cumulative: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    /// Potential whose toggle differences equal the chain's log-odds.
    Chain,
    /// Sum of agent utilities at zero shocks, with the popularity term
    /// `(beta / N) deg_j` credited to every link of `i`.
    UtilitySum,
}

impl MeleModel {
    /// `r[p]` are the regressors of the pair with lexicographic index `p`.
    pub fn new(n: usize, r: &[Vec<f64>], alpha: &[f64], beta: f64, meeting: Option<Vec<f64>>) -> Result<Self> {
        let pairs = n * n.saturating_sub(1) / 2;
        if n < 2 || r.len() != pairs {
            return Err(Error::Config(format!("need {pairs} pair regressor rows for n = {n}")));
        }
        let base = r
            .iter()
            .map(|row| {
                if row.len() != alpha.len() {
                    return Err(Error::Config("regressor and alpha lengths differ".into()));
                }
                Ok(row.iter().zip(alpha).map(|(a, b)| a * b).sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        let meeting = meeting.unwrap_or_else(|| vec![1.0 / pairs as f64; pairs]);
        if meeting.len() != pairs || meeting.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Config("meeting probabilities must be positive, one per pair".into()));
        }
        let total: f64 = meeting.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("meeting probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = meeting
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(MeleModel { n, base, beta, cumulative })
    }

    /// Regressors from a symmetric recipe over node attributes.
    pub fn from_recipe(nodes: &NodeTable, recipe: &Recipe, alpha: &[f64], beta: f64, meeting: Option<Vec<f64>>) -> Result<Self> {
        if !recipe.is_symmetric() {
            return Err(Error::Config("pair regressors must not depend on the order of the pair".into()));
        }
        let n = nodes.n();
        let mut r = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                r.push(recipe.row(nodes, i, j)?);
            }
        }
        MeleModel::new(n, &r, alpha, beta, meeting)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn pair(&self, p: usize) -> (usize, usize) {
        let mut p = p;
        for i in 0..self.n {
            let row = self.n - i - 1;
            if p < row {
                return (i, i + 1 + p);
            }
            p -= row;
        }
        unreachable!()
    }

    /// Log-odds of holding link `ij` given the rest of the network.
    pub fn log_odds(&self, net: &Net, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        let link = net.has(a, b) as usize;
        let others = net.degree(a) + net.degree(b) - 2 * link;
        self.base[pair_index(self.n, a, b)] + self.beta / self.n as f64 * others as f64
    }

    pub fn potential(&self, net: &Net, kind: Potential) -> f64 {
        let n = self.n;
        let mut q = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if net.has(i, j) {
                    q += self.base[pair_index(n, i, j)];
                }
            }
        }
        let scale = self.beta / n as f64;
        q + match kind {
            Potential::Chain => (0..n).map(|i| {
                let d = net.degree(i) as f64;
                scale * d * (d - 1.0) / 2.0
            }).sum::<f64>(),
            Potential::UtilitySum => (0..n).map(|i| scale * (net.degree(i) as f64).powi(2)).sum::<f64>(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    pub terminal: Net,
    pub steps: usize,
    pub changes: usize,
}

/// Runs `burn_in + steps` meetings from `initial`, calling `visit` on the
/// network after each post-burn-in step.
pub fn mele_chain(model: &MeleModel, initial: Net, burn_in: usize, steps: usize, seed: u64, mut visit: impl FnMut(&Net)) -> Result<ChainRun> {
    if initial.n() != model.n {
        return Err(Error::Config("initial network has the wrong size".into()));
    }
    let mut rng = stream(seed, "strategic/mele/chain", &[]);
    let mut net = initial;
    let mut changes = 0;
    for t in 0..burn_in + steps {
        let u: f64 = rng.random();
        let p = model.cumulative.partition_point(|&c| c <= u).min(model.cumulative.len() - 1);
        let (i, j) = model.pair(p);
        let on = rng.random::<f64>() < logistic(model.log_odds(&net, i, j));
        if on != net.has(i, j) {
            net.set(i, j, on);
            changes += 1;
        }
        if t >= burn_in {
            visit(&net);
        }
    }
    Ok(ChainRun { terminal: net, steps, changes })
}

/// Exact law `exp(Q(d)) / sum_v exp(Q(v))` over all networks, indexed by
/// [`Net::code`].
pub fn ergm_exact(model: &MeleModel, kind: Potential) -> Result<Vec<f64>> {
    if model.n > MAX_EXACT_N {
        return Err(Error::Config(format!(
            "exact enumeration is limited to n <= {MAX_EXACT_N}; n = {} has 2^{} states",
            model.n,
            model.n * (model.n - 1) / 2
        )));
    }
    let states = 1u64 << (model.n * (model.n - 1) / 2);
    let q: Vec<f64> = (0..states)
        .into_par_iter()
        .map(|c| model.potential(&Net::from_code(model.n, c), kind))
        .collect();
    let top = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = q.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

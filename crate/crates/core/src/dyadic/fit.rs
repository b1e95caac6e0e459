//! Composite-likelihood fits over dyads.

use super::data::DyadicDataset;
use crate::error::{Error, Result};
use crate::graphon::logistic;
use crate::numeric::{ln_norm_cdf, max_abs, mills_lower, norm_cdf, pinv, rank};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Marginal model for a single dyad outcome given its regressors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Gaussian quasi-likelihood; the estimator is least squares.
    Linear,
    Poisson,
    Logit,
    Probit,
}

impl Family {
    pub fn is_binary(self) -> bool {
        matches!(self, Family::Logit | Family::Probit)
    }

    /// Mean of the outcome at linear index `eta`.
    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Family::Linear => eta,
            Family::Poisson => eta.exp(),
            Family::Logit => logistic(eta),
            Family::Probit => norm_cdf(eta),
        }
    }

    /// Log-likelihood contribution, its derivative and second derivative
    /// with respect to the index (constants in `y` dropped).
    pub fn pieces(self, y: f64, eta: f64) -> (f64, f64, f64) {
        match self {
            Family::Linear => {
                let r = y - eta;
                (-0.5 * r * r, r, -1.0)
            }
            Family::Poisson => {
                let mu = eta.exp();
                (y * eta - mu, y - mu, -mu)
            }
            Family::Logit => {
                let p = logistic(eta);
                let ll = y * eta - crate::graphon::softplus(eta);
                (ll, y - p, -p * (1.0 - p))
            }
            Family::Probit => {
                let mut out = (0.0, 0.0, 0.0);
                for (q, wt) in [(1.0, y), (-1.0, 1.0 - y)] {
                    if wt == 0.0 {
                        continue;
                    }
                    let g = q * mills_lower(q * eta);
                    out.0 += wt * ln_norm_cdf(q * eta);
                    out.1 += wt * g;
                    out.2 -= wt * g * (g + eta);
                }
                out
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Linear => "linear",
            Family::Poisson => "poisson",
            Family::Logit => "logit",
            Family::Probit => "probit",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "ols" => Ok(Family::Linear),
            "poisson" => Ok(Family::Poisson),
            "logit" => Ok(Family::Logit),
            "probit" => Ok(Family::Probit),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub init: Option<DVector<f64>>,
    pub tol: f64,
    pub max_iter: usize,
    /// Per-node weights; dyad `(i, j)` is weighted by `v_i v_j`.
    pub node_weights: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            init: None,
            tol: 1e-10,
            max_iter: 200,
            node_weights: None,
        }
    }
}

/// Estimated coefficients with per-dyad scores and the average Hessian.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub family: Family,
    pub n: usize,
    pub directed: bool,
    pub names: Vec<String>,
    pub theta: DVector<f64>,
    /// Score of each observed dyad, rows aligned with the dataset.
    pub scores: DMatrix<f64>,
    /// Symmetrised scores `(s_ij + s_ji) / 2` for `i < j`, pairs in
    /// lexicographic order (see `pair_index`).
    pub pair_scores: DMatrix<f64>,
    /// Average Hessian of the criterion at `theta`.
    pub hessian: DMatrix<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Dyads not observed; zero for a complete census.
    pub missing_dyads: usize,
}

impl FitResult {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Mean score `S_N` over dyads.
    pub fn score_mean(&self) -> DVector<f64> {
        column_mean(&self.pair_scores)
    }
}

/// Row of pair `(i, j)`, `i < j`, in the lexicographic enumeration.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn column_mean(m: &DMatrix<f64>) -> DVector<f64> {
    let r = m.nrows().max(1) as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / r))
}

const BLOCK: usize = 2048;

struct Eval {
    ll: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// Weighted average criterion, gradient and Hessian. Blocks are reduced in
/// their natural order so results do not depend on the thread count.
fn evaluate(
    data: &DyadicDataset,
    family: Family,
    theta: &DVector<f64>,
    weights: &[f64],
    total_weight: f64,
) -> Eval {
    let k = data.dim();
    let w = data.w();
    let y = data.y();
    let rows = data.len();
    let parts: Vec<Eval> = (0..rows.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut e = Eval {
                ll: 0.0,
                grad: DVector::zeros(k),
                hess: DMatrix::zeros(k, k),
            };
            for r in b * BLOCK..((b + 1) * BLOCK).min(rows) {
                let wr = w.row(r);
                let eta = wr.dot(&theta.transpose());
                let (l, d1, d2) = family.pieces(y[r], eta);
                let om = weights[r];
                e.ll += om * l;
                e.grad += wr.transpose() * (om * d1);
                e.hess += wr.transpose() * wr * (om * d2);
            }
            e
        })
        .collect();
    let mut acc = Eval {
        ll: 0.0,
        grad: DVector::zeros(k),
        hess: DMatrix::zeros(k, k),
    };
    for p in parts {
        acc.ll += p.ll;
        acc.grad += p.grad;
        acc.hess += p.hess;
    }
    Eval {
        ll: acc.ll / total_weight,
        grad: acc.grad / total_weight,
        hess: acc.hess / total_weight,
    }
}

fn starting_value(data: &DyadicDataset, family: Family, weights: &[f64]) -> DVector<f64> {
    let mut t = DVector::zeros(data.dim());
    let Some(c) = (0..data.dim()).find(|&c| data.w().column(c).iter().all(|&x| x == 1.0)) else {
        return t;
    };
    let tw: f64 = weights.iter().sum();
    let ybar = data.y().iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / tw;
    t[c] = match family {
        Family::Linear => ybar,
        Family::Poisson => ybar.max(1e-8).ln(),
        Family::Logit => {
            let p = ybar.clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
        Family::Probit => crate::numeric::norm_quantile(ybar.clamp(1e-6, 1.0 - 1e-6)),
    };
    t
}

/// Maximises the average log-likelihood over observed dyads by Newton steps
/// with a pseudo-inverted Hessian and step halving.
pub fn fit_composite(data: &DyadicDataset, family: Family, opts: &FitOptions) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::UndefinedInput("no observed dyads".into()));
    }
    if family.is_binary() && data.y().iter().any(|&y| !(0.0..=1.0).contains(&y)) {
        return Err(Error::UndefinedInput(format!(
            "{family} outcomes must lie in [0, 1]"
        )));
    }
    if family == Family::Poisson && data.y().iter().any(|&y| y < 0.0) {
        return Err(Error::UndefinedInput("Poisson outcomes must be non-negative".into()));
    }
    let k = data.dim();
    let weights: Vec<f64> = match &opts.node_weights {
        Some(v) => {
            if v.len() != data.n() {
                return Err(Error::Config("one weight per node required".into()));
            }
            data.dyads().iter().map(|&(i, j)| v[i] * v[j]).collect()
        }
        None => vec![1.0; data.len()],
    };
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return Err(Error::UndefinedInput("all dyad weights are zero".into()));
    }
    let gram = weighted_gram(data, &weights);
    if rank(&gram) < k {
        return Err(Error::Singular(format!(
            "regressors are collinear over the observed dyads (rank {} < {k}): {}",
            rank(&gram),
            data.names().join(", ")
        )));
    }

    let mut theta = match &opts.init {
        Some(t) if t.len() == k => t.clone(),
        Some(_) => return Err(Error::Config("initial value has the wrong length".into())),
        None => starting_value(data, family, &weights),
    };
    let mut cur = evaluate(data, family, &theta, &weights, total_weight);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let step = pinv(&(-&cur.hess)) * &cur.grad;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &theta + &step * t;
            let e = evaluate(data, family, &cand, &weights, total_weight);
            if e.ll.is_finite() && e.ll >= cur.ll - 1e-14 * cur.ll.abs().max(1.0) {
                accepted = Some((cand, e));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, e)) = accepted else { break };
        let moved = max_abs(&(&cand - &theta));
        theta = cand;
        cur = e;
        if max_abs(&cur.grad) < opts.tol && moved < opts.tol.sqrt() {
            converged = true;
            break;
        }
    }
    let grad_norm = max_abs(&cur.grad);
    if !converged && grad_norm < opts.tol {
        converged = true;
    }
    if !converged {
        if family.is_binary() && separated(data, family, &theta) {
            return Err(Error::Separation);
        }
        return Err(Error::NoConvergence {
            iterations,
            grad_norm,
            last: theta.iter().copied().collect(),
        });
    }
    if family.is_binary() && separated(data, family, &theta) {
        return Err(Error::Separation);
    }

    let scores = dyad_scores(data, family, &theta);
    let pair_scores = symmetrise(data, &scores);
    Ok(FitResult {
        family,
        n: data.n(),
        directed: data.is_directed(),
        names: data.names().to_vec(),
        theta,
        scores,
        pair_scores,
        hessian: crate::numeric::symmetrize(&cur.hess),
        loglik: cur.ll,
        iterations,
        grad_norm,
        converged,
        missing_dyads: data.missing(),
    })
}

fn weighted_gram(data: &DyadicDataset, weights: &[f64]) -> DMatrix<f64> {
    let k = data.dim();
    let mut g = DMatrix::zeros(k, k);
    for (r, &om) in weights.iter().enumerate() {
        if om != 0.0 {
            let wr = data.w().row(r);
            g += wr.transpose() * wr * om;
        }
    }
    g
}

/// Fitted probabilities pinned at 0 or 1 for some dyad.
fn separated(data: &DyadicDataset, family: Family, theta: &DVector<f64>) -> bool {
    (0..data.len()).any(|r| {
        let p = family.mean(data.w().row(r).dot(&theta.transpose()));
        !(1e-12..=1.0 - 1e-12).contains(&p)
    })
}

/// Per-dyad score vectors at `theta`.
pub fn dyad_scores(data: &DyadicDataset, family: Family, theta: &DVector<f64>) -> DMatrix<f64> {
    let k = data.dim();
    let mut s = DMatrix::zeros(data.len(), k);
    for r in 0..data.len() {
        let wr = data.w().row(r);
        let (_, d1, _) = family.pieces(data.y()[r], wr.dot(&theta.transpose()));
        s.set_row(r, &(wr * d1));
    }
    s
}

/// `(s_ij + s_ji) / 2` for every unordered pair. Undirected data use
/// `s_ji = s_ij`; an unobserved direction contributes nothing and a pair
/// with a single observed direction takes that score.
pub fn symmetrise(data: &DyadicDataset, scores: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.n();
    let k = scores.ncols();
    let mut out = DMatrix::zeros(n * (n - 1) / 2, k);
    for i in 0..n {
        for j in i + 1..n {
            let p = pair_index(n, i, j);
            if data.is_directed() {
                match (data.row_of(i, j), data.row_of(j, i)) {
                    (Some(a), Some(b)) => {
                        out.set_row(p, &((scores.row(a) + scores.row(b)) * 0.5))
                    }
                    (Some(a), None) | (None, Some(a)) => out.set_row(p, &scores.row(a)),
                    (None, None) => {}
                }
            } else if let Some(a) = data.row_of(i, j) {
                out.set_row(p, &scores.row(a));
            }
        }
    }
    out
}

//! Directed link formation with private shocks and equilibrium beliefs.
//!
//! Agent `i` links to `j` when
//! `alpha + beta P_ji + gamma sum_k P_ki P_kj + t(X_i, X_j)' delta >= U_ij`
//! with standard normal `U_ij`, where `P_ij` is the common belief that
//! `i` links to `j`. Pairs with the same `t` share a belief, which the
//! first step estimates by a cell mean.

use crate::dyadic::{fit_composite, variance_report, DyadicDataset, Family, FitOptions, FitResult, NodeTable, Recipe, Term, VarianceReport};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numeric::norm_cdf;
use crate::rng::stream;
use nalgebra::DMatrix;
use rand::Rng;
use std::collections::BTreeMap;

pub const DAMPING: f64 = 0.5;
pub const BELIEF_TOL: f64 = 1e-10;
pub const BELIEF_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LeungModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Coefficients on the recipe terms.
    pub delta: Vec<f64>,
}

type CellKey = Vec<u64>;

fn key(row: &[f64]) -> CellKey {
    row.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn check_recipe(recipe: &Recipe) -> Result<()> {
    if recipe.0.contains(&Term::Const) {
        return Err(Error::Config("the intercept is added automatically; drop 'const' from the recipe".into()));
    }
    Ok(())
}

fn t_rows(nodes: &NodeTable, recipe: &Recipe) -> Result<Vec<Vec<f64>>> {
    let n = nodes.n();
    let mut rows = vec![Vec::new(); n * n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            rows[i * n + j] = recipe.row(nodes, i, j)?;
        }
    }
    Ok(rows)
}

/// `S_ij = sum_{k != i, j} P_ki P_kj`; the diagonal of `P` is zero so the
/// excluded terms vanish from `P' P`.
fn two_path(p: &DMatrix<f64>) -> DMatrix<f64> {
    p.transpose() * p
}

fn index(model: &LeungModel, p: &DMatrix<f64>, t: &[Vec<f64>]) -> DMatrix<f64> {
    let n = p.nrows();
    let s = two_path(p);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let td: f64 = t[i * n + j].iter().zip(&model.delta).map(|(a, b)| a * b).sum();
        norm_cdf(model.alpha + model.beta * p[(j, i)] + model.gamma * s[(i, j)] + td)
    })
}

#[derive(Clone, Debug)]
pub struct LeungSimulation {
    pub beliefs: DMatrix<f64>,
    pub iterations: usize,
    /// `max |P - phi(P)|` at the returned beliefs.
    pub residual: f64,
    pub graph: Graph,
}

/// Solves the belief fixed point by damped iteration from `P = 1/2`, then
/// draws a network.
pub fn simulate_leung(model: &LeungModel, nodes: &NodeTable, recipe: &Recipe, seed: u64) -> Result<LeungSimulation> {
    check_recipe(recipe)?;
    if model.delta.len() != recipe.0.len() {
        return Err(Error::Config(format!(
            "{} delta coefficients for {} recipe terms",
            model.delta.len(),
            recipe.0.len()
        )));
    }
    let n = nodes.n();
    let t = t_rows(nodes, recipe)?;
    let mut p = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.5 });
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < BELIEF_MAX_ITER {
        let next = index(model, &p, &t);
        residual = (&next - &p).amax();
        if residual < BELIEF_TOL {
            break;
        }
        p = p * (1.0 - DAMPING) + next * DAMPING;
        iterations += 1;
    }
    if residual >= BELIEF_TOL {
        return Err(Error::NoConvergence {
            iterations,
            grad_norm: residual,
            last: p.iter().copied().collect(),
        });
    }
    let phi = index(model, &p, &t);
    let mut rng = stream(seed, "strategic/leung/draw", &[]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if rng.random::<f64>() < phi[(i, j)] {
                edges.push((i, j));
            }
        }
    }
    Ok(LeungSimulation {
        beliefs: p,
        iterations,
        residual,
        graph: Graph::from_edges(n, true, &edges)?,
    })
}

#[derive(Clone, Debug)]
pub struct BeliefCell {
    pub t: Vec<f64>,
    pub dyads: usize,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct LeungFit {
    pub cells: Vec<BeliefCell>,
    pub beliefs: DMatrix<f64>,
    pub fit: FitResult,
    pub variance: Option<VarianceReport>,
}

impl LeungFit {
    /// First-step belief for a covariate configuration.
    pub fn belief_at(&self, t: &[f64]) -> Result<f64> {
        let k = key(t);
        self.cells
            .iter()
            .find(|c| key(&c.t) == k)
            .map(|c| c.mean)
            .ok_or_else(|| {
                let seen: Vec<String> = self.cells.iter().map(|c| format!("{:?}", c.t)).collect();
                Error::EmptyCells(format!("no dyads with t = {t:?}; observed cells: {}", seen.join(", ")))
            })
    }
}

/// Cell means of `D` over dyads sharing `t(X_i, X_j)`. Cells are formed
/// from observed configurations, so none is empty.
pub fn cell_beliefs(graph: &Graph, t: &[Vec<f64>]) -> (Vec<BeliefCell>, DMatrix<f64>) {
    let n = graph.n();
    let mut cells: BTreeMap<CellKey, (Vec<f64>, usize, f64)> = BTreeMap::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let row = &t[i * n + j];
            let e = cells.entry(key(row)).or_insert_with(|| (row.clone(), 0, 0.0));
            e.1 += 1;
            e.2 += graph.has_edge(i, j) as u8 as f64;
        }
    }
    let p = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let c = &cells[&key(&t[i * n + j])];
            c.2 / c.1 as f64
        }
    });
    let cells = cells
        .into_values()
        .map(|(t, dyads, sum)| BeliefCell { t, dyads, mean: sum / dyads as f64 })
        .collect();
    (cells, p)
}

/// Two-step estimator. With `interactions = false` the belief terms are
/// left out and the second step is a plain dyadic probit on `(1, t)`.
pub fn leung_fit(graph: &Graph, nodes: &NodeTable, recipe: &Recipe, interactions: bool) -> Result<LeungFit> {
    check_recipe(recipe)?;
    if !graph.is_directed() {
        return Err(Error::Config("the two-step estimator needs a directed network".into()));
    }
    let n = graph.n();
    if nodes.n() != n {
        return Err(Error::Config(format!("{} nodes in the table, {n} in the network", nodes.n())));
    }
    let t = t_rows(nodes, recipe)?;
    let (cells, p) = cell_beliefs(graph, &t);
    let s = two_path(&p);
    let mut names = vec!["const".to_string()];
    if interactions {
        names.push("belief_ji".into());
        names.push("two_path_belief".into());
    }
    names.extend(recipe.names());
    let data = DyadicDataset::complete(n, true, names, |i, j| {
        let mut row = vec![1.0];
        if interactions {
            row.push(p[(j, i)]);
            row.push(s[(i, j)]);
        }
        row.extend_from_slice(&t[i * n + j]);
        (graph.has_edge(i, j) as u8 as f64, row)
    })?;
    let fit = fit_composite(&data, Family::Probit, &FitOptions::default())?;
    let variance = variance_report(&fit).ok();
    Ok(LeungFit { cells, beliefs: p, fit, variance })
}

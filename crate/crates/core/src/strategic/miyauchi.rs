//! Transitivity preferences with non-negative externalities.
//!
//! Agent utility is `nu_i = sum_j d_ij [alpha + beta c_ij - U_ij]` with
//! `c_ij` the number of common neighbours. Dyad shocks are drawn once per
//! pair and split evenly between the two agents, so a link forms under
//! transfers when `2 alpha + 2 beta c_ij >= V_ij`.

use super::Net;
use crate::error::{Error, Result};
use crate::graph::{Graph, Graphlet};
use crate::moments::{count_patterns, moment_covariance, CovMode};
use crate::numeric::pinv;
use crate::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShockDist {
    Logistic,
    Normal,
}

impl FromStr for ShockDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ShockDist::Logistic),
            "normal" => Ok(ShockDist::Normal),
            other => Err(Error::Config(format!("unknown shock distribution '{other}'"))),
        }
    }
}

impl ShockDist {
    fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            ShockDist::Logistic => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                (u / (1.0 - u)).ln()
            }
            ShockDist::Normal => StandardNormal.sample(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiyauchiParams {
    pub alpha: f64,
    pub beta: f64,
    pub dist: ShockDist,
}

impl MiyauchiParams {
    fn check(&self) -> Result<()> {
        if self.beta < 0.0 {
            return Err(Error::Config(format!(
                "beta = {} < 0: extremal equilibria need non-negative externalities",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Ordered-pair utility shocks `U_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shocks {
    n: usize,
    u: Vec<f64>,
}

impl Shocks {
    pub fn new(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                u[i * n + j] = f(i, j);
            }
        }
        Shocks { n, u }
    }

    /// Splits dyad shocks `V_ij` evenly: `U_ij = U_ji = V_ij / 2`.
    pub fn from_dyad(n: usize, v: impl Fn(usize, usize) -> f64) -> Self {
        Shocks::new(n, |i, j| 0.5 * v(i.min(j), i.max(j)))
    }

    pub fn draw(n: usize, dist: ShockDist, seed: u64, replicate: u64) -> Self {
        let mut rng = stream(seed, "strategic/miyauchi/shocks", &[replicate]);
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                v[i * n + j] = dist.draw(&mut rng);
            }
        }
        Shocks::from_dyad(n, |i, j| v[i * n + j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.n + j]
    }
}

/// `alpha + beta c_ij - U_ij`. The count of common neighbours does not
/// involve `d_ij`, so the addition and deletion conventions agree.
pub fn marginal_utility(net: &Net, i: usize, j: usize, p: &MiyauchiParams, u: &Shocks) -> f64 {
    p.alpha + p.beta * net.common(i, j) as f64 - u.get(i, j)
}

/// `nu_i(d) = sum_j d_ij [alpha + beta c_ij - U_ij]` as written. Its
/// first difference in `d_ij` credits each common neighbour twice, once
/// through link `ij` and once through the link to that neighbour.
pub fn utility(net: &Net, i: usize, p: &MiyauchiParams, u: &Shocks) -> f64 {
    (0..net.n())
        .filter(|&j| j != i && net.has(i, j))
        .map(|j| p.alpha + p.beta * net.common(i, j) as f64 - u.get(i, j))
        .sum()
}

/// Synchronous best-response map under transfers.
pub fn phi(net: &Net, p: &MiyauchiParams, u: &Shocks) -> Net {
    let n = net.n();
    let mut out = Net::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if marginal_utility(net, i, j, p, u) + marginal_utility(net, j, i, p, u) >= 0.0 {
                out.set(i, j, true);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Present link that one side (or the pair, with transfers) would cut.
    Dissolve,
    /// Absent link the pair would form.
    Form,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub stable: bool,
    pub violations: Vec<Violation>,
}

/// Checks pairwise stability with or without transfers, reporting at most
/// `max_report` violating dyads.
pub fn is_pairwise_stable(
    net: &Net,
    p: &MiyauchiParams,
    u: &Shocks,
    transfers: bool,
    max_report: usize,
) -> StabilityReport {
    let n = net.n();
    let mut violations = Vec::new();
    let mut stable = true;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (marginal_utility(net, i, j, p, u), marginal_utility(net, j, i, p, u));
            let kind = match (net.has(i, j), transfers) {
                (true, true) if a + b < 0.0 => Some(ViolationKind::Dissolve),
                (false, true) if a + b >= 0.0 => Some(ViolationKind::Form),
                (true, false) if a < 0.0 || b < 0.0 => Some(ViolationKind::Dissolve),
                (false, false) if (a > 0.0 && b >= 0.0) || (b > 0.0 && a >= 0.0) => Some(ViolationKind::Form),
                _ => None,
            };
            if let Some(kind) = kind {
                stable = false;
                if violations.len() < max_report {
                    violations.push(Violation { i, j, kind });
                }
            }
        }
    }
    StabilityReport { stable, violations }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumPair {
    pub replicate: u64,
    pub lower: Net,
    pub upper: Net,
    pub sweeps_lower: usize,
    pub sweeps_upper: usize,
}

/// Iterates `phi` from `start` until a fixed point, calling `visit` on each
/// iterate.
pub fn iterate_phi(start: Net, p: &MiyauchiParams, u: &Shocks, mut visit: impl FnMut(&Net)) -> (Net, usize) {
    let bound = start.n() * start.n().saturating_sub(1) / 2 + 1;
    let mut d = start;
    for sweep in 1..=bound {
        let next = phi(&d, p, u);
        visit(&next);
        if next == d {
            return (d, sweep);
        }
        d = next;
    }
    unreachable!("monotone iteration settles within C(n,2) + 1 sweeps")
}

/// Minimum and maximum pairwise stable networks, by iterating from the
/// empty and the complete network.
pub fn min_max_equilibria(p: &MiyauchiParams, u: &Shocks, replicate: u64) -> Result<EquilibriumPair> {
    p.check()?;
    let n = u.n();
    let (lower, sweeps_lower) = iterate_phi(Net::empty(n), p, u, |_| ());
    let (upper, sweeps_upper) = iterate_phi(Net::complete(n), p, u, |_| ());
    Ok(EquilibriumPair {
        replicate,
        lower,
        upper,
        sweeps_lower,
        sweeps_upper,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Min,
    Max,
    Both,
}

impl FromStr for Selection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Selection::Min),
            "max" => Ok(Selection::Max),
            "both" => Ok(Selection::Both),
            other => Err(Error::Config(format!("unknown selection '{other}'"))),
        }
    }
}

pub const MIN_SIMULATIONS: usize = 50;

/// Simulated injective densities at the extremal equilibria.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedMoments {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub replicates: usize,
}

fn injective(net: &Net, patterns: &[Graphlet]) -> Result<Vec<f64>> {
    Ok(count_patterns(&net.to_graph(), patterns)?.iter().map(|m| m.q_n).collect())
}

/// Averages injective densities of the selected equilibria over
/// `replicates` shock draws.
pub fn simulate_moments(
    p: &MiyauchiParams,
    n: usize,
    replicates: usize,
    patterns: &[Graphlet],
    selection: Selection,
    seed: u64,
) -> Result<SimulatedMoments> {
    p.check()?;
    if replicates < MIN_SIMULATIONS {
        return Err(Error::Config(format!(
            "at least {MIN_SIMULATIONS} simulations are required, got {replicates}"
        )));
    }
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let u = Shocks::draw(n, p.dist, seed, b);
            let eq = min_max_equilibria(p, &u, b)?;
            let lo = if selection != Selection::Max { injective(&eq.lower, patterns)? } else { Vec::new() };
            let hi = if selection != Selection::Min { injective(&eq.upper, patterns)? } else { Vec::new() };
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    let average = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
        let mut acc = vec![0.0; patterns.len()];
        for d in &draws {
            for (a, v) in acc.iter_mut().zip(pick(d)) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / replicates as f64).collect::<Vec<f64>>()
    };
    Ok(SimulatedMoments {
        lower: (selection != Selection::Max).then(|| average(|d| &d.0)),
        upper: (selection != Selection::Min).then(|| average(|d| &d.1)),
        replicates,
    })
}

/// Covariance of the injective two-star and triangle densities, obtained
/// from the induced-density covariance through `Q(two-star) = P(two-star)
/// + P(triangle)` and `Q(triangle) = P(triangle)`.
pub fn injective_triad_covariance(graph: &Graph, mode: CovMode) -> Result<DMatrix<f64>> {
    let cov = moment_covariance(graph, &[Graphlet::two_star(), Graphlet::triangle()], mode)?;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    Ok(&a * &cov.cov * a.transpose())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmdMode {
    /// Minimize the distance to the max-selection moments.
    Equality,
    /// Keep points with `pi_lower - slack <= pi <= pi_upper + slack`.
    Inequality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmdResult {
    pub grid: Vec<(f64, f64)>,
    pub criterion: Vec<f64>,
    pub best: Option<(f64, f64)>,
    /// Grid points satisfying the moment inequalities.
    pub identified_set: Vec<(f64, f64)>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// Simulated minimum distance over a grid of `(alpha, beta)` values, with
/// common shock draws across grid points. In inequality mode, `slack`
/// multiplies the standard errors from `omega` to widen each bound.
#[allow(clippy::too_many_arguments)]
pub fn smd_fit(
    observed: &[f64],
    omega: &DMatrix<f64>,
    grid: &[(f64, f64)],
    dist: ShockDist,
    n: usize,
    replicates: usize,
    patterns: &[Graphlet],
    mode: SmdMode,
    slack: f64,
    seed: u64,
) -> Result<SmdResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let j = observed.len();
    if patterns.len() != j || omega.nrows() != j || omega.ncols() != j {
        return Err(Error::Config("moment, pattern and weight dimensions disagree".into()));
    }
    if crate::numeric::rank(omega) < j {
        return Err(Error::Singular("moment covariance is not invertible".into()));
    }
    let w = pinv(omega);
    let obs = DVector::from_column_slice(observed);
    let se: Vec<f64> = (0..j).map(|k| omega[(k, k)].max(0.0).sqrt()).collect();
    let selection = match mode {
        SmdMode::Equality => Selection::Max,
        SmdMode::Inequality => Selection::Both,
    };
    let mut criterion = Vec::with_capacity(grid.len());
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut identified_set = Vec::new();
    for &(alpha, beta) in grid {
        let p = MiyauchiParams { alpha, beta, dist };
        let sim = simulate_moments(&p, n, replicates, patterns, selection, seed)?;
        let hi = sim.upper.clone().unwrap_or_default();
        let diff = DVector::from_column_slice(&hi) - &obs;
        criterion.push((diff.transpose() * &w * &diff)[(0, 0)]);
        if let Some(lo) = &sim.lower {
            let inside = (0..j).all(|k| lo[k] - slack * se[k] <= observed[k] && observed[k] <= hi[k] + slack * se[k]);
            if inside {
                identified_set.push((alpha, beta));
            }
            lower.push(lo.clone());
        }
        upper.push(hi);
    }
    let best = criterion
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| grid[k]);
    Ok(SmdResult {
        grid: grid.to_vec(),
        criterion,
        best,
        identified_set,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64) -> MiyauchiParams {
        MiyauchiParams { alpha, beta, dist: ShockDist::Logistic }
    }

    #[test]
    fn marginal_utility_examples() {
        let p = params(1.0, 5.0);
        let zero = Shocks::new(3, |_, _| 0.0);
        assert_eq!(marginal_utility(&Net::empty(3), 0, 1, &p, &zero), 1.0);
        let mut wedge = Net::empty(3);
        wedge.set(0, 1, true);
        wedge.set(0, 2, true);
        let u = Shocks::new(3, |i, j| 0.1 * (i + 2 * j) as f64);
        assert_eq!(marginal_utility(&wedge, 1, 2, &p, &u), 1.0 + 5.0 - u.get(1, 2));
    }

    #[test]
    fn utility_difference_counts_common_neighbours_twice() {
        let p = params(0.3, 0.7);
        let mut rng = stream(1, "test", &[]);
        for _ in 0..50 {
            let n = 6;
            let u = Shocks::new(n, |_, _| 0.0);
            let code: u64 = rng.random_range(0..1 << 15);
            let mut d = Net::from_code(n, code);
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i == j {
                continue;
            }
            d.set(i, j, false);
            let base = utility(&d, i, &p, &u);
            let mut plus = d.clone();
            plus.set(i, j, true);
            let diff = utility(&plus, i, &p, &u) - base;
            let c = d.common(i, j) as f64;
            assert!((diff - (p.alpha + 2.0 * p.beta * c)).abs() < 1e-12);
            let halved = MiyauchiParams { beta: 2.0 * p.beta, ..p };
            assert!((diff - marginal_utility(&d, i, j, &halved, &u)).abs() < 1e-12);
        }
    }

    fn three_agents(v12: f64, v13: f64, v23: f64) -> Shocks {
        Shocks::from_dyad(3, |i, j| match (i, j) {
            (0, 1) => v12,
            (0, 2) => v13,
            _ => v23,
        })
    }

    fn stable_networks(p: &MiyauchiParams, u: &Shocks, transfers: bool) -> Vec<u64> {
        let n = u.n();
        (0..1u64 << (n * (n - 1) / 2))
            .filter(|&c| is_pairwise_stable(&Net::from_code(n, c), p, u, transfers, 1).stable)
            .collect()
    }

    #[test]
    fn three_agent_examples() {
        let gamma = 1.0;
        let p = params(0.0, gamma);
        let u = three_agents(-0.5, -0.2, 1.5);
        let triangle = Net::complete(3).code();
        for transfers in [true, false] {
            assert_eq!(stable_networks(&p, &u, transfers), vec![triangle]);
        }
        let eq = min_max_equilibria(&p, &u, 0).unwrap();
        assert_eq!(eq.lower, Net::complete(3));
        assert_eq!(eq.upper, Net::complete(3));

        let u = three_agents(2.5, 3.0, 1.5);
        for transfers in [true, false] {
            assert_eq!(stable_networks(&p, &u, transfers), vec![0]);
        }
    }

    #[test]
    fn beta_zero_is_dyad_by_dyad() {
        let p = params(0.2, 0.0);
        let u = Shocks::draw(8, ShockDist::Logistic, 3, 0);
        let eq = min_max_equilibria(&p, &u, 0).unwrap();
        assert_eq!(eq.lower, eq.upper);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_eq!(eq.lower.has(i, j), 2.0 * p.alpha >= u.get(i, j) + u.get(j, i));
            }
        }
    }

    #[test]
    fn extremal_equilibria_bracket_all_stable_networks() {
        let n = 5;
        for b in 0..20 {
            let p = params(-0.8, 0.9);
            let u = Shocks::draw(n, ShockDist::Logistic, 11, b);
            let eq = min_max_equilibria(&p, &u, b).unwrap();
            let stable = stable_networks(&p, &u, true);
            assert!(stable.contains(&eq.lower.code()) && stable.contains(&eq.upper.code()));
            for c in stable {
                let net = Net::from_code(n, c);
                assert!(eq.lower.is_subset_of(&net) && net.is_subset_of(&eq.upper));
            }
        }
    }

    #[test]
    fn iterates_are_monotone() {
        let p = params(-0.5, 0.6);
        let u = Shocks::draw(12, ShockDist::Normal, 2, 0);
        let mut prev = Net::empty(12);
        iterate_phi(Net::empty(12), &p, &u, |d| {
            assert!(prev.is_subset_of(d));
            prev = d.clone();
        });
        let mut prev = Net::complete(12);
        iterate_phi(Net::complete(12), &p, &u, |d| {
            assert!(d.is_subset_of(&prev));
            prev = d.clone();
        });
        assert!(min_max_equilibria(&params(0.0, -0.1), &u, 0).is_err());
    }

    #[test]
    fn phi_is_monotone() {
        let p = params(-0.3, 0.5);
        let mut rng = stream(4, "test", &[]);
        for b in 0..30 {
            let u = Shocks::draw(7, ShockDist::Logistic, 5, b);
            let small = Net::from_code(7, rng.random_range(0..1 << 21));
            let mut large = small.clone();
            for _ in 0..5 {
                let (i, j) = (rng.random_range(0..7), rng.random_range(0..7));
                if i != j {
                    large.set(i, j, true);
                }
            }
            assert!(phi(&small, &p, &u).is_subset_of(&phi(&large, &p, &u)));
        }
    }

    #[test]
    fn edge_density_at_beta_zero() {
        let p = params(0.3, 0.0);
        let sim = simulate_moments(&p, 30, 60, &[Graphlet::edge()], Selection::Both, 1).unwrap();
        let expect = crate::graphon::logistic(0.6);
        assert_eq!(sim.lower, sim.upper);
        // 60 graphs of 435 dyads each.
        let se = (expect * (1.0 - expect) / (60.0 * 435.0)).sqrt();
        assert!((sim.upper.unwrap()[0] - expect).abs() < 4.0 * se);
        assert!(simulate_moments(&p, 30, 10, &[Graphlet::edge()], Selection::Both, 1).is_err());
    }

    #[test]
    fn upper_moments_dominate() {
        let p = params(-1.0, 0.4);
        let pats = [Graphlet::edge(), Graphlet::two_star(), Graphlet::triangle()];
        let sim = simulate_moments(&p, 20, 50, &pats, Selection::Both, 2).unwrap();
        let (lo, hi) = (sim.lower.unwrap(), sim.upper.unwrap());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
    }

    #[test]
    fn single_point_grid() {
        let omega = DMatrix::identity(2, 2);
        let pats = [Graphlet::two_star(), Graphlet::triangle()];
        let r = smd_fit(&[0.1, 0.01], &omega, &[(0.1, 0.2)], ShockDist::Logistic, 10, 50, &pats, SmdMode::Equality, 2.0, 0)
            .unwrap();
        assert_eq!(r.best, Some((0.1, 0.2)));
    }
}

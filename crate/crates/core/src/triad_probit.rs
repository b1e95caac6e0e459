//! Triad probit: a correlated-random-effects composite likelihood built from
//! the joint outcome of two directed dyad pairs sharing one agent.
//!
//! For a triad with shared agent `i` the four outcomes
//! `(Y_ij, Y_ji, Y_ik, Y_ki)` are treated as orthant events of a
//! four-variate normal in correlation form. Orthant probabilities are
//! simulated by GHK with antithetic draws that are fixed per triad, so the
//! criterion is smooth in the parameters.

use crate::asf::{Basis, Pvr};
use crate::dyadic::{fit_composite, DyadicDataset, Family, FitOptions};
use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_quantile, pinv, sandwich, symmetrize};
use crate::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

pub const DEFAULT_DRAWS: usize = 512;
const COV_NAMES: [&str; 4] = ["zeta", "sigma_a", "sigma_b", "rho"];

/// Covariance parameters of the latent errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovParams {
    /// Correlation of the two idiosyncratic shocks within a dyad.
    pub zeta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// Correlation between an agent's ego and alter effects.
    pub rho: f64,
}

impl CovParams {
    pub const ZERO: CovParams = CovParams {
        zeta: 0.0,
        sigma_a: 0.0,
        sigma_b: 0.0,
        rho: 0.0,
    };

    fn from_slice(v: &[f64]) -> Self {
        CovParams {
            zeta: v[0],
            sigma_a: v[1],
            sigma_b: v[2],
            rho: v[3],
        }
    }
}

pub type Mat4 = [[f64; 4]; 4];

/// Correlation matrix of `(Y_ij, Y_ji, Y_ik, Y_ki)` latent errors.
pub fn sigma_matrix(c: CovParams) -> Result<Mat4> {
    let d = 1.0 + c.sigma_a * c.sigma_a + c.sigma_b * c.sigma_b;
    let ab = c.rho * c.sigma_a * c.sigma_b / d;
    let pair = (c.zeta + 2.0 * c.rho * c.sigma_a * c.sigma_b) / d;
    let aa = c.sigma_a * c.sigma_a / d;
    let bb = c.sigma_b * c.sigma_b / d;
    let s = [
        [1.0, pair, aa, ab],
        [pair, 1.0, ab, bb],
        [aa, ab, 1.0, pair],
        [ab, bb, pair, 1.0],
    ];
    cholesky(&s)?;
    Ok(s)
}

/// Lower Cholesky factor allowing exactly singular (semidefinite) pivots.
pub fn cholesky<const D: usize>(s: &[[f64; D]; D]) -> Result<[[f64; D]; D]> {
    let mut l = [[0.0; D]; D];
    for k in 0..D {
        let d = s[k][k] - (0..k).map(|m| l[k][m] * l[k][m]).sum::<f64>();
        if d < -1e-10 || !d.is_finite() {
            return Err(Error::NotPsd(format!("pivot {k} is {d:.3e}")));
        }
        if d <= 1e-12 {
            for i in k + 1..D {
                let v = s[i][k] - (0..k).map(|m| l[i][m] * l[k][m]).sum::<f64>();
                if v.abs() > 1e-8 {
                    return Err(Error::NotPsd(format!("degenerate pivot {k} with off-diagonal {v:.3e}")));
                }
            }
            continue;
        }
        l[k][k] = d.sqrt();
        for i in k + 1..D {
            let v = s[i][k] - (0..k).map(|m| l[i][m] * l[k][m]).sum::<f64>();
            l[i][k] = v / l[k][k];
        }
    }
    Ok(l)
}

/// One GHK path. Bounds are `(lo, hi)` with infinities allowed; `u` holds
/// `D - 1` uniforms.
fn ghk_path<const D: usize>(l: &[[f64; D]; D], lo: &[f64; D], hi: &[f64; D], u: &[f64]) -> f64 {
    let mut z = [0.0; D];
    let mut p = 1.0;
    for k in 0..D {
        let mu: f64 = (0..k).map(|m| l[k][m] * z[m]).sum();
        let d = l[k][k];
        if d == 0.0 {
            if mu < lo[k] || mu > hi[k] {
                return 0.0;
            }
            continue;
        }
        let (a, b) = ((lo[k] - mu) / d, (hi[k] - mu) / d);
        // Work in whichever tail keeps the probability mass accurate.
        let (w, flip) = if a == f64::NEG_INFINITY {
            (norm_cdf(b), false)
        } else if b == f64::INFINITY {
            (norm_cdf(-a), true)
        } else {
            (norm_cdf(b) - norm_cdf(a), false)
        };
        if w <= 0.0 {
            return 0.0;
        }
        p *= w;
        if k + 1 < D {
            let base = if flip || a == f64::NEG_INFINITY { 0.0 } else { norm_cdf(a) };
            let t = (base + u[k] * w).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            let q = norm_quantile(t);
            z[k] = if flip { -q } else { q };
        }
    }
    p
}

/// Antithetic GHK average over `u.len() / (D - 1)` uniform vectors.
fn ghk_mean<const D: usize>(l: &[[f64; D]; D], lo: &[f64; D], hi: &[f64; D], u: &[f64]) -> (f64, f64) {
    let mut anti = [0.0; 8];
    let step = D - 1;
    let pairs = u.len() / step;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for c in u.chunks_exact(step) {
        for (a, x) in anti.iter_mut().zip(c) {
            *a = 1.0 - x;
        }
        let v = 0.5 * (ghk_path(l, lo, hi, c) + ghk_path(l, lo, hi, &anti[..step]));
        sum += v;
        sq += v * v;
    }
    let m = sum / pairs as f64;
    let var = (sq / pairs as f64 - m * m).max(0.0);
    (m, (var / pairs as f64).sqrt())
}

/// Simulated rectangle probability with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthantProb {
    pub prob: f64,
    pub se: f64,
}

/// GHK estimate of `P(lo < t < hi)` for `t ~ N(0, sigma)` in four
/// dimensions. `draws` counts both members of each antithetic pair.
pub fn orthant_prob(sigma: &Mat4, lo: &[f64; 4], hi: &[f64; 4], draws: usize, seed: u64) -> Result<OrthantProb> {
    if draws < 2 {
        return Err(Error::Config("at least two draws are required".into()));
    }
    let l = cholesky(sigma)?;
    let mut rng = stream(seed, "triad/orthant", &[]);
    let u: Vec<f64> = (0..(draws / 2) * 3).map(|_| rng.random()).collect();
    let (prob, se) = ghk_mean(&l, lo, hi, &u);
    Ok(OrthantProb { prob, se })
}

#[derive(Clone, Debug)]
pub struct TriadProbitOptions {
    pub init: Option<DVector<f64>>,
    pub draws: usize,
    pub seed: u64,
    /// Convergence threshold on the largest absolute score component.
    pub tol: f64,
    pub max_iter: usize,
    /// Hold the covariance parameters fixed and estimate only the index.
    pub fixed_cov: Option<CovParams>,
}

impl Default for TriadProbitOptions {
    fn default() -> Self {
        TriadProbitOptions {
            init: None,
            draws: DEFAULT_DRAWS,
            seed: 0,
            tol: 1e-6,
            max_iter: 200,
            fixed_cov: None,
        }
    }
}

struct Prepared {
    index: Vec<f64>,
    chol: Mat4,
}

struct Problem<'a> {
    n: usize,
    k: usize,
    data: &'a DyadicDataset,
    rows: Vec<usize>,
    triads: Vec<[u32; 3]>,
    draws: usize,
    seed: u64,
    free: Vec<usize>,
    fixed: DVector<f64>,
    /// Optimizer coordinates carry `atanh(rho)` in place of `rho`.
    warped: bool,
}

impl<'a> Problem<'a> {
    fn full(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut t = self.fixed.clone();
        for (v, &p) in x.iter().zip(&self.free) {
            t[p] = if self.warped && p == self.k + 3 { v.tanh() } else { *v };
        }
        t
    }

    fn prepare(&self, x: &DVector<f64>) -> Result<Prepared> {
        let theta = self.full(x);
        let eta = theta.rows(0, self.k);
        let sigma = sigma_matrix(CovParams::from_slice(&theta.as_slice()[self.k..]))?;
        let idx_rows = self.data.w() * eta;
        let mut index = vec![0.0; self.n * self.n];
        for (cell, &r) in index.iter_mut().zip(&self.rows) {
            if r != usize::MAX {
                *cell = idx_rows[r];
            }
        }
        Ok(Prepared {
            index,
            chol: cholesky(&sigma)?,
        })
    }

    /// `l_ijk` at each prepared parameter value, with draws shared.
    fn triad_values(&self, t: [u32; 3], preps: &[Prepared]) -> Vec<f64> {
        let n = self.n;
        let y = self.data.y();
        let mut out = vec![0.0; preps.len()];
        let mut u = vec![0.0; (self.draws / 2) * 3];
        for pos in 0..3 {
            let i = t[pos] as usize;
            let others: Vec<usize> = (0..3).filter(|&q| q != pos).map(|q| t[q] as usize).collect();
            let (j, k) = (others[0], others[1]);
            let mut rng = stream(self.seed, "triad/ghk", &[t[0] as u64, t[1] as u64, t[2] as u64, pos as u64]);
            u.iter_mut().for_each(|x| *x = rng.random());
            let cells = [(i, j), (j, i), (i, k), (k, i)];
            for (o, p) in out.iter_mut().zip(preps) {
                let mut lo = [f64::NEG_INFINITY; 4];
                let mut hi = [f64::INFINITY; 4];
                for (m, &(a, b)) in cells.iter().enumerate() {
                    let idx = p.index[a * n + b];
                    if y[self.rows[a * n + b]] > 0.5 {
                        hi[m] = idx;
                    } else {
                        lo[m] = idx;
                    }
                }
                let (prob, _) = ghk_mean(&p.chol, &lo, &hi, &u);
                *o += prob.max(f64::MIN_POSITIVE).ln() / 3.0;
            }
        }
        out
    }

    /// Per-triad kernels at every prepared point, in triad order.
    fn evaluate(&self, preps: &[Prepared]) -> Vec<Vec<f64>> {
        self.triads.par_iter().map(|&t| self.triad_values(t, preps)).collect()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let p = [self.prepare(x)?];
        let v = self.evaluate(&p);
        Ok(v.iter().map(|r| r[0]).sum::<f64>() / v.len() as f64)
    }

    fn steps(x: &DVector<f64>, h: f64) -> Vec<f64> {
        x.iter().map(|v| h * v.abs().max(1.0)).collect()
    }

    /// Criterion, gradient and per-triad scores by central differences.
    fn gradient(&self, x: &DVector<f64>, h: f64) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let p = x.len();
        let hs = Self::steps(x, h);
        let mut preps = vec![self.prepare(x)?];
        for q in 0..p {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[q] += sgn * hs[q];
                preps.push(self.prepare(&y)?);
            }
        }
        let vals = self.evaluate(&preps);
        let nt = vals.len() as f64;
        let mut scores = DMatrix::zeros(vals.len(), p);
        for (r, v) in vals.iter().enumerate() {
            for q in 0..p {
                scores[(r, q)] = (v[1 + 2 * q] - v[2 + 2 * q]) / (2.0 * hs[q]);
            }
        }
        let f = vals.iter().map(|v| v[0]).sum::<f64>() / nt;
        let g = scores.row_sum().transpose() / nt;
        Ok((f, g, scores))
    }

    /// Average Hessian and per-triad scores from one shared stencil.
    fn hessian(&self, x: &DVector<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let p = x.len();
        let hs = Self::steps(x, h);
        let shifted = |moves: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(q, s) in moves {
                y[q] += s * hs[q];
            }
            self.prepare(&y)
        };
        let mut preps = vec![self.prepare(x)?];
        for q in 0..p {
            preps.push(shifted(&[(q, 1.0)])?);
            preps.push(shifted(&[(q, -1.0)])?);
        }
        let mut cross = Vec::new();
        for a in 0..p {
            for b in a + 1..p {
                cross.push((a, b, preps.len()));
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    preps.push(shifted(&[(a, sa), (b, sb)])?);
                }
            }
        }
        let vals = self.evaluate(&preps);
        let nt = vals.len() as f64;
        let mean: Vec<f64> = (0..preps.len())
            .map(|c| vals.iter().map(|v| v[c]).sum::<f64>() / nt)
            .collect();
        let mut hess = DMatrix::zeros(p, p);
        for q in 0..p {
            hess[(q, q)] = (mean[1 + 2 * q] - 2.0 * mean[0] + mean[2 + 2 * q]) / (hs[q] * hs[q]);
        }
        for (a, b, at) in cross {
            let v = (mean[at] - mean[at + 1] - mean[at + 2] + mean[at + 3]) / (4.0 * hs[a] * hs[b]);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
        let mut scores = DMatrix::zeros(vals.len(), p);
        for (r, v) in vals.iter().enumerate() {
            for q in 0..p {
                scores[(r, q)] = (v[1 + 2 * q] - v[2 + 2 * q]) / (2.0 * hs[q]);
            }
        }
        Ok((hess, scores))
    }
}

/// Score covariances for triad pairs sharing one, two and three agents.
#[derive(Clone, Debug)]
pub struct TriadScoreMoments {
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub sigma3: DMatrix<f64>,
}

/// Exact averages of `s_T s_T'` over ordered pairs of distinct triads
/// sharing exactly one or two agents, and over single triads. Node and
/// pair sums of the scores turn the pair enumeration into one pass.
pub fn triad_score_moments(n: usize, triads: &[[u32; 3]], scores: &DMatrix<f64>) -> Result<TriadScoreMoments> {
    if n < 5 {
        return Err(Error::UndefinedInput("score covariances need at least 5 agents".into()));
    }
    let p = scores.ncols();
    let mut node = vec![DVector::<f64>::zeros(p); n];
    let mut pair = vec![DVector::<f64>::zeros(p); n * n];
    let mut m3 = DMatrix::zeros(p, p);
    for (r, t) in triads.iter().enumerate() {
        let s = scores.row(r).transpose();
        m3 += &s * s.transpose();
        let [a, b, c] = t.map(|v| v as usize);
        for v in [a, b, c] {
            node[v] += &s;
        }
        for (u, v) in [(a, b), (a, c), (b, c)] {
            pair[u * n + v] += &s;
        }
    }
    let outer_sum = |vs: &[DVector<f64>]| vs.iter().fold(DMatrix::zeros(p, p), |acc, v| acc + v * v.transpose());
    let a = outer_sum(&node);
    let b = outer_sum(&pair);
    let p2 = &b - &m3 * 3.0;
    let p1 = &a - &p2 * 2.0 - &m3 * 3.0;
    let nf = n as f64;
    let c3 = nf * (nf - 1.0) * (nf - 2.0) / 6.0;
    let count1 = c3 * 3.0 * (nf - 3.0) * (nf - 4.0) / 2.0;
    let count2 = c3 * 3.0 * (nf - 3.0);
    Ok(TriadScoreMoments {
        sigma1: symmetrize(&(p1 / count1)),
        sigma2: symmetrize(&(p2 / count2)),
        sigma3: symmetrize(&(m3 / c3)),
    })
}

/// Finite-N variance of `sqrt(N) S_N` in the displayed form
/// `9 S1 + 18/(N-1) (S2 - 2 S1) + 6/((N-1)(N-2)) (S3 + 3 S1)`.
pub fn score_variance_display(n: usize, m: &TriadScoreMoments) -> DMatrix<f64> {
    let nf = n as f64;
    &m.sigma1 * 9.0
        + (&m.sigma2 - &m.sigma1 * 2.0) * (18.0 / (nf - 1.0))
        + (&m.sigma3 + &m.sigma1 * 3.0) * (6.0 / ((nf - 1.0) * (nf - 2.0)))
}

/// Finite-N variance of `sqrt(N) S_N` from the Hoeffding counts of triad
/// pairs sharing q agents.
pub fn score_variance_exact(n: usize, m: &TriadScoreMoments) -> DMatrix<f64> {
    let nf = n as f64;
    let scale = 6.0 / ((nf - 1.0) * (nf - 2.0));
    (&m.sigma1 * (1.5 * (nf - 3.0) * (nf - 4.0)) + &m.sigma2 * (3.0 * (nf - 3.0)) + &m.sigma3) * scale
}

#[derive(Clone, Debug)]
pub struct TriadProbitFit {
    pub n: usize,
    pub triads: usize,
    pub draws: usize,
    pub seed: u64,
    /// Names of all parameters: index coefficients then covariance terms.
    pub names: Vec<String>,
    pub theta: DVector<f64>,
    pub k: usize,
    /// Positions in `theta` that were estimated.
    pub free: Vec<usize>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Average Hessian over the free parameters.
    pub gamma: DMatrix<f64>,
    pub moments: Option<TriadScoreMoments>,
    /// `9 Gamma^-1 Sigma1 Gamma^-1`.
    pub avar_leading: Option<DMatrix<f64>>,
    /// `Gamma^-1 V Gamma^-1` with `V` the displayed finite-N score variance.
    pub avar_display: Option<DMatrix<f64>>,
    /// Same with the exact Hoeffding weights.
    pub avar_exact: Option<DMatrix<f64>>,
}

impl TriadProbitFit {
    pub fn eta(&self) -> DVector<f64> {
        self.theta.rows(0, self.k).into_owned()
    }

    pub fn cov(&self) -> CovParams {
        CovParams::from_slice(&self.theta.as_slice()[self.k..])
    }

    /// Standard errors of the free parameters from an asymptotic variance.
    pub fn se(&self, avar: &DMatrix<f64>) -> Vec<f64> {
        avar.diagonal()
            .iter()
            .map(|v| if *v >= 0.0 { (v / self.n as f64).sqrt() } else { f64::NAN })
            .collect()
    }

    /// Asymptotic variance block of the index coefficients.
    pub fn eta_avar(&self, avar: &DMatrix<f64>) -> DMatrix<f64> {
        let pos: Vec<usize> = self.free.iter().enumerate().filter(|(_, &p)| p < self.k).map(|(r, _)| r).collect();
        let mut out = DMatrix::zeros(self.k, self.k);
        for (a, &ra) in pos.iter().enumerate() {
            for (b, &rb) in pos.iter().enumerate() {
                out[(a, b)] = avar[(ra, rb)];
            }
        }
        out
    }
}

impl TriadProbitFit {
    /// Probit proxy-variable regression `Phi(T' eta_hat)` for the ASF, with
    /// the index block of the all-terms variance.
    pub fn pvr(&self, basis: Basis) -> Result<Pvr> {
        if basis.len() != self.k {
            return Err(Error::Config(format!(
                "basis has {} terms but the index has {}",
                basis.len(),
                self.k
            )));
        }
        let avar = self
            .avar_display
            .as_ref()
            .map(|a| self.eta_avar(a))
            .ok_or_else(|| Error::UndefinedInput("no variance estimate for fewer than 5 agents".into()))?;
        Ok(Pvr {
            family: Family::Probit,
            basis,
            gamma: self.eta(),
            avar,
            avar_label: "triad probit, all score terms".into(),
        })
    }
}

fn triad_list(n: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(n * (n - 1) * (n - 2) / 6);
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            for c in b + 1..n as u32 {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Criterion value `L_N(theta)` at a full parameter vector.
pub fn triad_loglik(data: &DyadicDataset, theta: &DVector<f64>, draws: usize, seed: u64) -> Result<f64> {
    let prob = problem(data, draws, seed, None, theta)?;
    prob.value(theta)
}

fn problem<'a>(
    data: &'a DyadicDataset,
    draws: usize,
    seed: u64,
    fixed_cov: Option<CovParams>,
    start: &DVector<f64>,
) -> Result<Problem<'a>> {
    let n = data.n();
    let k = data.dim();
    if !data.is_directed() {
        return Err(Error::Config("triad probit needs directed outcomes".into()));
    }
    if n < 4 {
        return Err(Error::UndefinedInput("triad probit needs at least 4 agents".into()));
    }
    if data.missing() > 0 {
        return Err(Error::UndefinedInput(format!("{} directed dyads are missing", data.missing())));
    }
    if data.y().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Config("outcomes must be binary".into()));
    }
    if draws < 2 || draws % 2 == 1 {
        return Err(Error::Config("draws must be a positive even number".into()));
    }
    if start.len() != k + 4 {
        return Err(Error::Config(format!("expected {} parameters, got {}", k + 4, start.len())));
    }
    let mut rows = vec![usize::MAX; n * n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            rows[i * n + j] = data.row_of(i, j).expect("complete data");
        }
    }
    let mut fixed = start.clone();
    let free: Vec<usize> = match fixed_cov {
        Some(c) => {
            fixed.as_mut_slice()[k..].copy_from_slice(&[c.zeta, c.sigma_a, c.sigma_b, c.rho]);
            (0..k).collect()
        }
        None => (0..k + 4).collect(),
    };
    Ok(Problem {
        n,
        k,
        data,
        rows,
        triads: triad_list(n),
        draws,
        seed,
        free,
        fixed,
        warped: false,
    })
}

/// Maximizes the triad composite likelihood by quasi-Newton steps with
/// finite-difference derivatives under common random numbers.
pub fn fit_triad_probit(data: &DyadicDataset, opts: &TriadProbitOptions) -> Result<TriadProbitFit> {
    let k = data.dim();
    let start = match &opts.init {
        Some(v) => v.clone(),
        None => {
            let dy = fit_composite(data, Family::Probit, &FitOptions::default())?;
            let mut v = DVector::zeros(k + 4);
            v.rows_mut(0, k).copy_from(&dy.theta);
            v[k + 1] = 0.25;
            v[k + 2] = 0.25;
            v
        }
    };
    let mut prob = problem(data, opts.draws, opts.seed, opts.fixed_cov, &start)?;
    // A bounded correlation keeps the optimizer off the ridge where both
    // effect variances vanish and rho is unidentified.
    prob.warped = true;
    let mut x = DVector::from_iterator(
        prob.free.len(),
        prob.free.iter().map(|&p| {
            if p == k + 3 {
                prob.fixed[p].clamp(-0.999, 0.999).atanh()
            } else {
                prob.fixed[p]
            }
        }),
    );
    const H_GRAD: f64 = 1e-5;
    const H_HESS: f64 = 1e-4;

    let (mut f, mut g, s0) = prob.gradient(&x, H_GRAD)?;
    // Outer-product preconditioner from the per-triad scores.
    let mut hinv = pinv(&(s0.transpose() * &s0 / s0.nrows() as f64));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if g.amax() <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = &hinv * &g;
        if d.dot(&g) <= 0.0 {
            hinv = DMatrix::identity(x.len(), x.len());
            d = g.clone();
        }
        let slope = d.dot(&g);
        let mut step = 1.0;
        let accepted = loop {
            let trial = &x + &d * step;
            match prob.value(&trial) {
                Ok(v) if v >= f + 1e-4 * step * slope => break Some(trial),
                Ok(_) | Err(Error::NotPsd(_)) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        let Some(x_new) = accepted else { break };
        let (f_new, g_new, _) = prob.gradient(&x_new, H_GRAD)?;
        let s = &x_new - &x;
        // Ascent problem: curvature pairs use the negated gradient change.
        let yv = &g - &g_new;
        let sy = s.dot(&yv);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(x.len(), x.len());
            let left = &eye - &s * yv.transpose() * rho;
            let right = &eye - &yv * s.transpose() * rho;
            hinv = &left * &hinv * &right + &s * s.transpose() * rho;
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    if !converged && g.amax() <= opts.tol {
        converged = true;
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            grad_norm: g.amax(),
            last: prob.full(&x).iter().copied().collect(),
        });
    }

    let mut theta = prob.full(&x);
    // Effects enter through squares and rho * sigma_a * sigma_b only.
    if theta[k + 1] * theta[k + 2] < 0.0 {
        theta[k + 3] = -theta[k + 3];
    }
    theta[k + 1] = theta[k + 1].abs();
    theta[k + 2] = theta[k + 2].abs();
    prob.fixed = theta.clone();
    prob.warped = false;
    let x = DVector::from_iterator(prob.free.len(), prob.free.iter().map(|&p| theta[p]));
    let (gamma, scores) = prob.hessian(&x, H_HESS)?;
    let (moments, avar_leading, avar_display, avar_exact) = match triad_score_moments(prob.n, &prob.triads, &scores) {
        Ok(m) => {
            let lead = sandwich(&gamma, &(&m.sigma1 * 9.0));
            let disp = sandwich(&gamma, &score_variance_display(prob.n, &m));
            let exact = sandwich(&gamma, &score_variance_exact(prob.n, &m));
            (Some(m), Some(lead), Some(disp), Some(exact))
        }
        Err(_) => (None, None, None, None),
    };
    let mut names: Vec<String> = data.names().to_vec();
    names.extend(COV_NAMES.iter().map(|s| s.to_string()));
    Ok(TriadProbitFit {
        n: prob.n,
        triads: prob.triads.len(),
        draws: opts.draws,
        seed: opts.seed,
        names,
        theta,
        k,
        free: prob.free.clone(),
        loglik: f,
        grad_norm: g.amax(),
        iterations,
        converged,
        gamma,
        moments,
        avar_leading,
        avar_display,
        avar_exact,
    })
}

/// Draws directed binary outcomes from the correlated-random-effects probit
/// whose normalized index is `T_ij' eta`.
pub fn simulate_cre_probit(
    n: usize,
    names: Vec<String>,
    regressors: impl Fn(usize, usize) -> Vec<f64>,
    eta: &[f64],
    cov: CovParams,
    seed: u64,
) -> Result<DyadicDataset> {
    use rand_distr::{Distribution, StandardNormal};
    sigma_matrix(cov)?;
    let scale = (1.0 + cov.sigma_a.powi(2) + cov.sigma_b.powi(2)).sqrt();
    let mut rng = stream(seed, "triad/simulate", &[]);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let effects: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let (u, v) = (z(), z());
            let a = cov.sigma_a * u;
            let b = cov.sigma_b * (cov.rho * u + (1.0 - cov.rho * cov.rho).max(0.0).sqrt() * v);
            (a, b)
        })
        .collect();
    let mut shocks = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (u, v) = (z(), z());
            shocks[i * n + j] = u;
            shocks[j * n + i] = cov.zeta * u + (1.0 - cov.zeta * cov.zeta).max(0.0).sqrt() * v;
        }
    }
    DyadicDataset::complete(n, true, names, |i, j| {
        let t = regressors(i, j);
        let idx: f64 = t.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>() * scale;
        let e = shocks[i * n + j] - effects[i].0 - effects[j].1;
        (((e <= idx) as u8) as f64, t)
    })
}

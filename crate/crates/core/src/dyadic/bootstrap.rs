//! Resampling schemes for jointly exchangeable dyadic data.

use super::data::DyadicDataset;
use super::fit::{fit_composite, FitOptions, FitResult};
use crate::error::{Error, Result};
use crate::numeric::{mean_cov, norm_quantile, quantile, sandwich};
use crate::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Node weights drawn from a unit exponential.
    Bayesian,
    /// Node weights equal to multinomial resampling counts.
    Multinomial,
    /// Resample agents; cells pairing an agent with itself are filled by a
    /// uniformly drawn observed dyad.
    Pigeonhole,
    /// Ego/alter mean decomposition with mean-zero multiplier weights.
    MenzelBsn,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weighted" | "bayesian" | "exponential" => Ok(Scheme::Bayesian),
            "multinomial" | "davezies" => Ok(Scheme::Multinomial),
            "pigeonhole" => Ok(Scheme::Pigeonhole),
            "menzel" | "menzel-bsn" => Ok(Scheme::MenzelBsn),
            other => Err(Error::Config(format!("unknown bootstrap scheme '{other}'"))),
        }
    }
}

pub const MIN_REPLICATES: usize = 100;

#[derive(Clone, Debug)]
pub struct BootstrapResult {
    pub scheme: Scheme,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates whose refit failed.
    pub dropped: usize,
    /// Coefficient draws (refitting schemes) or `sqrt(N) S_N^b` draws.
    pub draws: Vec<DVector<f64>>,
    pub mean: DVector<f64>,
    /// Bootstrap variance of `theta_hat`.
    pub vcov: DMatrix<f64>,
    /// Score-variance estimate, for the score-based scheme.
    pub omega: Option<DMatrix<f64>>,
    pub se: Vec<f64>,
    pub ci_percentile: Vec<(f64, f64)>,
    pub ci_normal: Vec<(f64, f64)>,
}

/// Two-point weights with mean 0 and unit second and third moments.
fn mammen(rng: &mut impl Rng) -> f64 {
    let s5 = 5f64.sqrt();
    let p = (s5 + 1.0) / (2.0 * s5);
    if rng.random::<f64>() < p {
        (1.0 - s5) / 2.0
    } else {
        (1.0 + s5) / 2.0
    }
}

/// Draws `B` replicates of the chosen scheme. `fit` must come from `data`.
pub fn bootstrap(
    data: &DyadicDataset,
    fit: &FitResult,
    scheme: Scheme,
    replicates: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapResult> {
    if replicates < MIN_REPLICATES {
        return Err(Error::Config(format!(
            "at least {MIN_REPLICATES} bootstrap replicates required"
        )));
    }
    let n = data.n();
    let opts = FitOptions {
        init: Some(fit.theta.clone()),
        max_iter: 100,
        ..FitOptions::default()
    };
    let draws: Vec<Option<DVector<f64>>> = match scheme {
        Scheme::Bayesian | Scheme::Multinomial => (0..replicates as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(seed, "dyadic/bootstrap/weights", &[b]);
                let v: Vec<f64> = match scheme {
                    Scheme::Bayesian => (0..n).map(|_| Exp1.sample(&mut rng)).collect(),
                    _ => {
                        let mut c = vec![0.0; n];
                        for _ in 0..n {
                            c[rng.random_range(0..n)] += 1.0;
                        }
                        c
                    }
                };
                let o = FitOptions {
                    node_weights: Some(v),
                    ..opts.clone()
                };
                fit_composite(data, fit.family, &o).ok().map(|f| f.theta)
            })
            .collect(),
        Scheme::Pigeonhole => (0..replicates as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(seed, "dyadic/bootstrap/pigeonhole", &[b]);
                let d = pigeonhole_sample(data, &mut rng).ok()?;
                fit_composite(&d, fit.family, &opts).ok().map(|f| f.theta)
            })
            .collect(),
        Scheme::MenzelBsn => {
            let parts = ego_alter(data, fit);
            (0..replicates as u64)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream(seed, "dyadic/bootstrap/menzel", &[b]);
                    Some(menzel_draw(&parts, n, &mut rng))
                })
                .collect()
        }
    };
    let dropped = draws.iter().filter(|d| d.is_none()).count();
    let draws: Vec<DVector<f64>> = draws.into_iter().flatten().collect();
    if draws.len() < 2 {
        return Err(Error::NoConvergence {
            iterations: replicates,
            grad_norm: f64::NAN,
            last: fit.theta.iter().copied().collect(),
        });
    }
    let (mean, cov) = mean_cov(&draws);
    let (vcov, omega) = match scheme {
        Scheme::MenzelBsn => {
            let v = sandwich(&fit.hessian, &cov) / n as f64;
            (v, Some(cov))
        }
        _ => (cov, None),
    };
    let k = fit.dim();
    let se: Vec<f64> = (0..k).map(|c| vcov[(c, c)].max(0.0).sqrt()).collect();
    let z = norm_quantile(0.5 + level / 2.0);
    let ci_normal = (0..k)
        .map(|c| (fit.theta[c] - z * se[c], fit.theta[c] + z * se[c]))
        .collect();
    let ci_percentile = match scheme {
        Scheme::MenzelBsn => (0..k).map(|_| (f64::NAN, f64::NAN)).collect(),
        _ => (0..k)
            .map(|c| {
                let xs: Vec<f64> = draws.iter().map(|d| d[c]).collect();
                (quantile(&xs, (1.0 - level) / 2.0), quantile(&xs, (1.0 + level) / 2.0))
            })
            .collect(),
    };
    Ok(BootstrapResult {
        scheme,
        replicates,
        seed,
        dropped,
        draws,
        mean,
        vcov,
        omega,
        se,
        ci_percentile,
        ci_normal,
    })
}

/// Dataset on resampled agents. Collision cells take a random observed
/// dyad; unobserved original dyads stay unobserved.
fn pigeonhole_sample(data: &DyadicDataset, rng: &mut impl Rng) -> Result<DyadicDataset> {
    let n = data.n();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut dyads = Vec::new();
    let mut rows = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || (!data.is_directed() && b < a) {
                continue;
            }
            let (i, j) = (idx[a], idx[b]);
            let row = if i == j {
                Some(rng.random_range(0..data.len()))
            } else {
                data.row_of(i, j)
            };
            if let Some(r) = row {
                dyads.push((a, b));
                rows.push(r);
            }
        }
    }
    data.select_rows(n, dyads, &rows)
}

struct EgoAlter {
    ego: Vec<DVector<f64>>,
    alter: Vec<DVector<f64>>,
    /// Residual scores, row `i * n + j`; the diagonal is zero.
    resid: DMatrix<f64>,
}

fn ego_alter(data: &DyadicDataset, fit: &FitResult) -> EgoAlter {
    let n = data.n();
    let k = fit.dim();
    let score = |i: usize, j: usize| -> DVector<f64> {
        data.row_of(i, j)
            .map(|r| fit.scores.row(r).transpose())
            .unwrap_or_else(|| DVector::zeros(k))
    };
    let mut ego = vec![DVector::zeros(k); n];
    let mut alter = vec![DVector::zeros(k); n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let s = score(i, j);
            ego[i] += &s;
            alter[j] += &s;
        }
    }
    let nm1 = (n - 1) as f64;
    ego.iter_mut().for_each(|v| *v /= nm1);
    alter.iter_mut().for_each(|v| *v /= nm1);
    let mut resid = DMatrix::zeros(n * n, k);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            resid.set_row(i * n + j, &(score(i, j) - &ego[i] - &alter[j]).transpose());
        }
    }
    EgoAlter { ego, alter, resid }
}

fn menzel_draw(p: &EgoAlter, n: usize, rng: &mut impl Rng) -> DVector<f64> {
    let v: Vec<f64> = (0..n).map(|_| mammen(rng)).collect();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let k = p.ego[0].len();
    let mut total = DVector::zeros(k);
    let s = |a: usize, b: usize| -> DVector<f64> {
        &p.ego[a] + &p.alter[b] + p.resid.row(a * n + b).transpose() * (v[a] * v[b])
    };
    for x in 0..n {
        for y in x + 1..n {
            let (a, b) = (idx[x], idx[y]);
            total += (s(a, b) + s(b, a)) * 0.5;
        }
    }
    let mean = total / (n * (n - 1) / 2) as f64;
    mean * (n as f64).sqrt()
}

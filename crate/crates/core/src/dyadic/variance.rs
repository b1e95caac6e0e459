//! Dyadic-robust variance estimators for composite-likelihood fits.

use super::fit::{pair_index, FitResult};
use crate::error::{Error, Result};
use crate::moments::choose;
use crate::numeric::{sandwich, symmetrize};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Which estimate of the score variance enters the sandwich.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaKind {
    /// `4 Sigma1 + 2 (Sigma23 - 2 Sigma1) / (N - 1)`.
    Analog,
    /// Pairs-of-dyads sum; algebraically the analog estimate.
    Fg,
    Jk,
    JkBc,
    /// Jackknife with the original `(N - 2) / 2` scaling.
    Sb,
    /// Leading term `4 Sigma1` only.
    Leading,
}

impl FromStr for OmegaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analog" => Ok(OmegaKind::Analog),
            "fg" => Ok(OmegaKind::Fg),
            "jk" => Ok(OmegaKind::Jk),
            "jkbc" | "jk-bc" => Ok(OmegaKind::JkBc),
            "sb" => Ok(OmegaKind::Sb),
            "leading" => Ok(OmegaKind::Leading),
            other => Err(Error::Config(format!("unknown variance estimator '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VarianceReport {
    pub n: usize,
    pub gamma: DMatrix<f64>,
    pub score_mean: DVector<f64>,
    pub sigma1: DMatrix<f64>,
    pub sigma23: DMatrix<f64>,
    /// `(1/N) sum_i sbar_i sbar_i'` from agent-level score means.
    pub sigma1_tilde: DMatrix<f64>,
    pub omega_analog: DMatrix<f64>,
    pub omega_fg: DMatrix<f64>,
    pub omega_jk: DMatrix<f64>,
    pub omega_jk_bc: DMatrix<f64>,
    pub omega_sb: DMatrix<f64>,
}

impl VarianceReport {
    pub fn omega(&self, kind: OmegaKind) -> &DMatrix<f64> {
        match kind {
            OmegaKind::Analog => &self.omega_analog,
            OmegaKind::Fg => &self.omega_fg,
            OmegaKind::Jk => &self.omega_jk,
            OmegaKind::JkBc => &self.omega_jk_bc,
            OmegaKind::Sb => &self.omega_sb,
            OmegaKind::Leading => unreachable!("leading term is formed on demand"),
        }
    }

    /// Asymptotic variance of `sqrt(N) (theta_hat - theta_0)`:
    /// `Gamma^-1 Omega Gamma^-1`, which equals `(Gamma' Omega^-1 Gamma)^-1`
    /// whenever `Omega` is invertible.
    pub fn avar(&self, kind: OmegaKind) -> DMatrix<f64> {
        match kind {
            OmegaKind::Leading => sandwich(&self.gamma, &(&self.sigma1 * 4.0)),
            k => sandwich(&self.gamma, self.omega(k)),
        }
    }

    /// Sampling variance of `theta_hat`.
    pub fn vcov(&self, kind: OmegaKind) -> DMatrix<f64> {
        self.avar(kind) / self.n as f64
    }

    /// Standard errors; negative variances (possible for the bias-corrected
    /// forms) are reported as NaN.
    pub fn se(&self, kind: OmegaKind) -> Vec<f64> {
        let v = self.vcov(kind);
        (0..v.nrows())
            .map(|k| if v[(k, k)] >= 0.0 { v[(k, k)].sqrt() } else { f64::NAN })
            .collect()
    }
}

/// Per-agent sums `b_v = sum_j a_vj` of symmetrised scores and
/// `sum_j a_vj a_vj'`.
fn agent_sums(fit: &FitResult) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let n = fit.n;
    let k = fit.dim();
    let mut b = vec![DVector::zeros(k); n];
    let mut q = vec![DMatrix::zeros(k, k); n];
    for i in 0..n {
        for j in i + 1..n {
            let a = fit.pair_scores.row(pair_index(n, i, j)).transpose();
            let aa = &a * a.transpose();
            b[i] += &a;
            b[j] += &a;
            q[i] += &aa;
            q[j] += &aa;
        }
    }
    (b, q)
}

pub fn variance_report(fit: &FitResult) -> Result<VarianceReport> {
    let n = fit.n;
    if n < 4 {
        return Err(Error::UndefinedInput(format!(
            "variance estimation needs at least 4 agents, got {n}"
        )));
    }
    if !fit.converged {
        return Err(Error::Config("fit did not converge".into()));
    }
    let k = fit.dim();
    let nf = n as f64;
    let (b, q) = agent_sums(fit);

    // Each unordered pair of dyads sharing agent v appears twice in
    // b_v b_v' - sum_j a_vj a_vj'.
    let mut shared = DMatrix::zeros(k, k);
    for v in 0..n {
        shared += &b[v] * b[v].transpose() - &q[v];
    }
    let sigma1 = symmetrize(&(shared / (6.0 * choose(n, 3))));
    let sigma23 = q.iter().fold(DMatrix::zeros(k, k), |acc, m| acc + m) / (2.0 * choose(n, 2));

    let sbar: Vec<DVector<f64>> = b.iter().map(|x| x / (nf - 1.0)).collect();
    let sigma1_tilde = sbar.iter().fold(DMatrix::zeros(k, k), |acc, s| acc + s * s.transpose()) / nf;

    let s = fit.score_mean();
    let c_n = choose(n, 2);
    let c_n1 = choose(n - 1, 2);
    let mut jk = DMatrix::zeros(k, k);
    for bi in &b {
        let d = (&s * c_n - bi) / c_n1 - &s;
        jk += &d * d.transpose();
    }
    let omega_jk = &jk * ((nf - 2.0).powi(2) / nf);
    let omega_sb = &jk * ((nf - 2.0) / 2.0);
    let omega_jk_bc = &omega_jk - &sigma23 * (2.0 / (nf - 1.0));
    let omega_analog = &sigma1 * 4.0 + (&sigma23 - &sigma1 * 2.0) * (2.0 / (nf - 1.0));
    let omega_fg = omega_analog.clone();

    Ok(VarianceReport {
        n,
        gamma: fit.hessian.clone(),
        score_mean: s,
        sigma1,
        sigma23,
        sigma1_tilde,
        omega_analog,
        omega_fg,
        omega_jk,
        omega_jk_bc,
        omega_sb,
    })
}

//! Average structural functions for dyadic policy analysis.
//!
//! A parametric proxy-variable regression `q(w, x, r, s; gamma)` is fitted
//! by dyadic composite likelihood; the ASF at an ego/alter treatment pair
//! integrates it over the empirical proxy distributions of egos and alters.

use crate::dyadic::{
    fit_composite, variance_report, DyadicDataset, Family, FitOptions, FitResult, OmegaKind,
    VarianceReport,
};
use crate::error::{Error, Result};
use crate::numeric::{norm_pdf, rank};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Node-level treatments and proxies with directed dyad outcomes.
#[derive(Clone, Debug)]
pub struct PolicyDataset {
    /// Ego treatment `W_i`.
    pub w: Vec<f64>,
    /// Alter treatment `X_i`.
    pub x: Vec<f64>,
    pub r_names: Vec<String>,
    /// Ego proxies, one vector per node.
    pub r: Vec<Vec<f64>>,
    pub s_names: Vec<String>,
    /// Alter proxies, one vector per node.
    pub s: Vec<Vec<f64>>,
    /// Ordered-dyad outcomes `(i, j, Y_ij)`.
    pub outcomes: Vec<(usize, usize, f64)>,
}

impl PolicyDataset {
    pub fn n(&self) -> usize {
        self.w.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.x.len() != n || self.r.len() != n || self.s.len() != n {
            return Err(Error::Config("node arrays differ in length".into()));
        }
        if self.r.iter().any(|v| v.len() != self.r_names.len())
            || self.s.iter().any(|v| v.len() != self.s_names.len())
        {
            return Err(Error::Config("proxy vectors do not match their names".into()));
        }
        if n < 4 {
            return Err(Error::UndefinedInput("ASF needs at least 4 nodes".into()));
        }
        Ok(())
    }
}

/// One factor of a basis term.
#[derive(Clone, Debug, PartialEq)]
enum Factor {
    W,
    X,
    R(usize),
    S(usize),
}

/// Basis `t(w, x, r, s)`: each term is `1` or a product such as `w*x` or
/// `w*r.size` where `r.<name>` and `s.<name>` pick ego and alter proxies.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    names: Vec<String>,
    terms: Vec<Vec<Factor>>,
}

impl Basis {
    pub fn parse(text: &str, r_names: &[String], s_names: &[String]) -> Result<Self> {
        let mut names = Vec::new();
        let mut terms = Vec::new();
        for raw in text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split([';', ',']))
            .map(str::trim)
            .filter(|t| !t.is_empty())
        {
            let mut factors = Vec::new();
            if raw != "1" && raw != "const" {
                for f in raw.split('*').map(str::trim) {
                    let find = |names: &[String], key: &str| {
                        names.iter().position(|n| n == key).ok_or_else(|| {
                            Error::Config(format!("basis term '{raw}': unknown proxy '{key}'"))
                        })
                    };
                    factors.push(match f {
                        "w" => Factor::W,
                        "x" => Factor::X,
                        _ => match f.split_once('.') {
                            Some(("r", k)) => Factor::R(find(r_names, k)?),
                            Some(("s", k)) => Factor::S(find(s_names, k)?),
                            _ => {
                                return Err(Error::Config(format!(
                                    "basis term '{raw}': bad factor '{f}'"
                                )))
                            }
                        },
                    });
                }
            }
            names.push(raw.to_string());
            terms.push(factors);
        }
        if !terms.iter().any(Vec::is_empty) {
            return Err(Error::Config("basis must include a constant term".into()));
        }
        Ok(Basis { names, terms })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, w: f64, x: f64, r: &[f64], s: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.terms.len(),
            self.terms.iter().map(|t| {
                t.iter()
                    .map(|f| match f {
                        Factor::W => w,
                        Factor::X => x,
                        Factor::R(k) => r[*k],
                        Factor::S(k) => s[*k],
                    })
                    .product::<f64>()
            }),
        )
    }

    /// Terms involving the treatments but no proxy.
    fn involves_treatment(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.iter().any(|f| matches!(f, Factor::W | Factor::X)))
    }
}

/// Fitted proxy-variable regression with the variance of its coefficients.
#[derive(Clone, Debug)]
pub struct Pvr {
    pub family: Family,
    pub basis: Basis,
    pub gamma: DVector<f64>,
    /// Asymptotic variance of `sqrt(N) (gamma_hat - gamma_0)`.
    pub avar: DMatrix<f64>,
    /// Which score-variance estimate produced `avar`.
    pub avar_label: String,
}

impl Pvr {
    pub fn q(&self, t: &DVector<f64>) -> f64 {
        self.family.mean(t.dot(&self.gamma))
    }

    /// Gradient of `q` in `gamma`.
    pub fn dq(&self, t: &DVector<f64>) -> DVector<f64> {
        let eta = t.dot(&self.gamma);
        let d = match self.family {
            Family::Linear => 1.0,
            Family::Poisson => eta.exp(),
            Family::Logit => {
                let p = crate::graphon::logistic(eta);
                p * (1.0 - p)
            }
            Family::Probit => norm_pdf(eta),
        };
        t * d
    }
}

/// Dyadic dataset of PVR regressors for every observed ordered dyad.
pub fn pvr_dataset(data: &PolicyDataset, basis: &Basis) -> Result<DyadicDataset> {
    data.validate()?;
    let k = basis.len();
    let mut w = Vec::with_capacity(data.outcomes.len() * k);
    for &(i, j, _) in &data.outcomes {
        if i >= data.n() || j >= data.n() {
            return Err(Error::VertexOutOfRange {
                vertex: i.max(j),
                n: data.n(),
            });
        }
        w.extend(basis.eval(data.w[i], data.x[j], &data.r[i], &data.s[j]).iter());
    }
    DyadicDataset::new(
        data.n(),
        true,
        data.outcomes.iter().map(|o| (o.0, o.1)).collect(),
        data.outcomes.iter().map(|o| o.2).collect(),
        DMatrix::from_row_slice(data.outcomes.len(), k, &w),
        basis.names().to_vec(),
    )
}

/// First-stage fit of the PVR with its dyadic-robust variance report.
pub fn fit_pvr(
    data: &PolicyDataset,
    family: Family,
    basis: &Basis,
    omega: OmegaKind,
) -> Result<(Pvr, FitResult, VarianceReport)> {
    if !basis.involves_treatment() {
        return Err(Error::Config(
            "basis has no treatment term; the ASF would not vary with (w, x)".into(),
        ));
    }
    let d = pvr_dataset(data, basis)?;
    let gram = d.w().transpose() * d.w();
    let rk = rank(&gram);
    if rk < basis.len() {
        return Err(Error::Singular(format!(
            "basis is not identified from the observed (w, x, r, s) combinations (rank {rk} < {})",
            basis.len()
        )));
    }
    let fit = fit_composite(&d, family, &FitOptions::default())?;
    let rep = variance_report(&fit)?;
    let pvr = Pvr {
        family,
        basis: basis.clone(),
        gamma: fit.theta.clone(),
        avar: rep.avar(omega),
        avar_label: format!("{omega:?}"),
    };
    Ok((pvr, fit, rep))
}

/// Estimated propensity below the threshold for some proxy cell.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapCell {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub p_w: f64,
    pub p_x: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Overlap {
    /// Smallest `p_w(r) p_x(s)` over all proxy cells.
    Passed { min_product: f64 },
    /// Proxies take too many distinct values for cell propensities; the
    /// parametric PVR extrapolates.
    Continuous,
}

fn cell_key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Checks `p_w(r) p_x(s) >= kappa` over the empirical proxy cells.
pub fn overlap(data: &PolicyDataset, w: f64, x: f64, kappa: f64) -> Result<Overlap> {
    let n = data.n();
    let cells = |proxies: &[Vec<f64>], treat: &[f64], value: f64| {
        let mut m: BTreeMap<Vec<u64>, (Vec<f64>, usize, usize)> = BTreeMap::new();
        for (p, &t) in proxies.iter().zip(treat) {
            let e = m.entry(cell_key(p)).or_insert((p.clone(), 0, 0));
            e.1 += 1;
            e.2 += (t == value) as usize;
        }
        m.into_values()
            .map(|(v, tot, hit)| (v, hit as f64 / tot as f64))
            .collect::<Vec<_>>()
    };
    let rc = cells(&data.r, &data.w, w);
    let sc = cells(&data.s, &data.x, x);
    if rc.len() > n / 2 || sc.len() > n / 2 {
        return Ok(Overlap::Continuous);
    }
    let mut bad = Vec::new();
    let mut min_product = f64::INFINITY;
    for (r, pw) in &rc {
        for (s, px) in &sc {
            let p = pw * px;
            min_product = min_product.min(p);
            if p < kappa {
                bad.push(OverlapCell {
                    r: r.clone(),
                    s: s.clone(),
                    p_w: *pw,
                    p_x: *px,
                });
            }
        }
    }
    if bad.is_empty() {
        Ok(Overlap::Passed { min_product })
    } else {
        let list: Vec<String> = bad
            .iter()
            .map(|c| format!("(w={w}, x={x}, r={:?}, s={:?}: {:.4})", c.r, c.s, c.p_w * c.p_x))
            .collect();
        Err(Error::Overlap(list.join(", ")))
    }
}

/// ASF at one treatment pair with its influence values and Jacobian.
#[derive(Clone, Debug)]
pub struct AsfEstimate {
    pub w: f64,
    pub x: f64,
    pub m: f64,
    /// `psi_i`, mean zero by construction.
    pub psi: Vec<f64>,
    /// Gradient of the ASF in `gamma`.
    pub jacobian: DVector<f64>,
    /// Variance of `sqrt(N)(m_hat - m)` from the proxy distribution.
    pub var_proxy: f64,
    /// Variance contribution of the first stage, `M V M'`.
    pub var_first_stage: f64,
    pub se: f64,
    pub n: usize,
    pub overlap: Overlap,
    pub smallest_q: f64,
    pub largest_q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsfOptions {
    pub kappa: f64,
    /// Use a pairs-of-dyads estimate for the proxy term instead of
    /// `4 (1/N) sum psi_i^2`.
    pub fg_proxy_term: bool,
}

impl Default for AsfOptions {
    fn default() -> Self {
        AsfOptions {
            kappa: 0.01,
            fg_proxy_term: false,
        }
    }
}

/// Double average of fitted values over egos and alters.
pub fn asf(pvr: &Pvr, data: &PolicyDataset, w: f64, x: f64, opts: &AsfOptions) -> Result<AsfEstimate> {
    data.validate()?;
    let ov = overlap(data, w, x, opts.kappa)?;
    let n = data.n();
    let k = pvr.gamma.len();
    // Row sums over alters for each ego and over egos for each alter.
    let rows: Vec<(Vec<f64>, DVector<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut qrow = vec![0.0; n];
            let mut grad = DVector::zeros(k);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                let t = pvr.basis.eval(w, x, &data.r[i], &data.s[j]);
                let q = pvr.q(&t);
                qrow[j] = q;
                grad += pvr.dq(&t);
                lo = lo.min(q);
                hi = hi.max(q);
            }
            (qrow, grad, lo, hi)
        })
        .collect();
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let total: f64 = rows.iter().map(|r| r.0.iter().sum::<f64>()).sum();
    let m = total / pairs;
    let jacobian = rows.iter().fold(DVector::zeros(k), |a, r| a + &r.1) / pairs;
    let ego: Vec<f64> = rows.iter().map(|r| r.0.iter().sum::<f64>()).collect();
    let alter: Vec<f64> = (0..n).map(|j| rows.iter().map(|r| r.0[j]).sum()).collect();
    let psi: Vec<f64> = (0..n)
        .map(|i| (ego[i] + alter[i]) / (2.0 * (nf - 1.0)) - m)
        .collect();
    let xi_tilde = psi.iter().map(|p| p * p).sum::<f64>() / nf;
    let var_proxy = if opts.fg_proxy_term {
        let mut s23 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let h = (rows[i].0[j] + rows[j].0[i]) / 2.0 - m;
                s23 += h * h;
            }
        }
        s23 /= nf * (nf - 1.0) / 2.0;
        let s1 = ((nf - 1.0) * xi_tilde - s23) / (nf - 2.0);
        4.0 * s1 + 2.0 / (nf - 1.0) * (s23 - 2.0 * s1)
    } else {
        4.0 * xi_tilde
    };
    let var_first_stage = (jacobian.transpose() * &pvr.avar * &jacobian)[(0, 0)];
    let se = ((var_proxy + var_first_stage).max(0.0) / nf).sqrt();
    Ok(AsfEstimate {
        w,
        x,
        m,
        psi,
        jacobian,
        var_proxy,
        var_first_stage,
        se,
        n,
        overlap: ov,
        smallest_q: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        largest_q: rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Linear combination of ASF cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastEstimate {
    pub value: f64,
    pub se: f64,
}

/// `sum_k c_k m_k` with influence values and Jacobians stacked, so shared
/// proxy and first-stage variation is accounted for.
pub fn asf_contrast(cells: &[AsfEstimate], weights: &[f64], pvr: &Pvr) -> Result<ContrastEstimate> {
    if cells.len() != weights.len() || cells.is_empty() {
        return Err(Error::Config("one weight per estimated cell required".into()));
    }
    let n = cells[0].n;
    if cells.iter().any(|c| c.n != n) {
        return Err(Error::Config("cells come from different samples".into()));
    }
    let value = cells.iter().zip(weights).map(|(c, w)| w * c.m).sum();
    let psi: Vec<f64> = (0..n)
        .map(|i| cells.iter().zip(weights).map(|(c, w)| w * c.psi[i]).sum())
        .collect();
    let jac = cells
        .iter()
        .zip(weights)
        .fold(DVector::zeros(pvr.gamma.len()), |a, (c, w)| a + &c.jacobian * *w);
    let nf = n as f64;
    let var = 4.0 * psi.iter().map(|p| p * p).sum::<f64>() / nf
        + (jac.transpose() * &pvr.avar * &jac)[(0, 0)];
    Ok(ContrastEstimate {
        value,
        se: (var.max(0.0) / nf).sqrt(),
    })
}

/// Named contrasts over binary treatments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contrast {
    /// `m(1,1) - m(0,0)`.
    Ate,
    /// `m(1,1) - m(1,0) - m(0,1) + m(0,0)`.
    Complementarity,
}

impl Contrast {
    pub fn cells(self) -> Vec<((f64, f64), f64)> {
        match self {
            Contrast::Ate => vec![((1.0, 1.0), 1.0), ((0.0, 0.0), -1.0)],
            Contrast::Complementarity => vec![
                ((1.0, 1.0), 1.0),
                ((1.0, 0.0), -1.0),
                ((0.0, 1.0), -1.0),
                ((0.0, 0.0), 1.0),
            ],
        }
    }
}

impl std::str::FromStr for Contrast {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ate" => Ok(Contrast::Ate),
            "complementarity" => Ok(Contrast::Complementarity),
            other => Err(Error::Config(format!("unknown contrast '{other}'"))),
        }
    }
}

pub fn named_contrast(
    pvr: &Pvr,
    data: &PolicyDataset,
    contrast: Contrast,
    opts: &AsfOptions,
) -> Result<(Vec<AsfEstimate>, ContrastEstimate)> {
    let spec = contrast.cells();
    let cells = spec
        .iter()
        .map(|((w, x), _)| asf(pvr, data, *w, *x, opts))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = spec.iter().map(|s| s.1).collect();
    let est = asf_contrast(&cells, &weights, pvr)?;
    Ok((cells, est))
}

/// Draws a policy dataset from a linear potential-outcome model
/// `Y_ij = a0 + b W_i + g X_j + d W_i X_j + A_i + B_j + V_ij`, where
/// treatment take-up depends on binary proxies correlated with the
/// latent effects.
pub fn simulate_linear(n: usize, coef: [f64; 4], seed: u64) -> PolicyDataset {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = crate::rng::stream(seed, "asf/simulate", &[]);
    let mut w = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let ri = (rng.random::<f64>() < 0.5) as u8 as f64;
        let si = (rng.random::<f64>() < 0.5) as u8 as f64;
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        a.push(ri + 0.5 * z1);
        b.push(-0.5 * si + 0.5 * z2);
        w.push((rng.random::<f64>() < 0.3 + 0.4 * ri) as u8 as f64);
        x.push((rng.random::<f64>() < 0.6 - 0.3 * si) as u8 as f64);
        r.push(vec![ri]);
        s.push(vec![si]);
    }
    let mut outcomes = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let v: f64 = StandardNormal.sample(&mut rng);
            let y = coef[0] + coef[1] * w[i] + coef[2] * x[j] + coef[3] * w[i] * x[j] + a[i] + b[j] + v;
            outcomes.push((i, j, y));
        }
    }
    PolicyDataset {
        w,
        x,
        r_names: vec!["r".into()],
        r,
        s_names: vec!["s".into()],
        s,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR_BASIS: &str = "1; w; x; w*x; r.r; s.s";

    fn basis(d: &PolicyDataset) -> Basis {
        Basis::parse(LINEAR_BASIS, &d.r_names, &d.s_names).unwrap()
    }

    #[test]
    fn constant_in_proxies_returns_q() {
        let d = simulate_linear(20, [1.0, 0.5, 0.3, 0.2], 1);
        let b = Basis::parse("1; w; x; w*x", &d.r_names, &d.s_names).unwrap();
        let pvr = Pvr {
            family: Family::Poisson,
            basis: b.clone(),
            gamma: DVector::from_vec(vec![0.1, 0.2, -0.3, 0.4]),
            avar: DMatrix::zeros(4, 4),
            avar_label: "fixed".into(),
        };
        let e = asf(&pvr, &d, 1.0, 1.0, &AsfOptions::default()).unwrap();
        assert!((e.m - (0.4f64).exp()).abs() < 1e-15);
        assert!(e.psi.iter().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn brute_force_double_sum() {
        let d = simulate_linear(25, [0.0, 1.0, 1.0, 1.0], 2);
        let b = basis(&d);
        let (pvr, _, _) = fit_pvr(&d, Family::Linear, &b, OmegaKind::Fg).unwrap();
        let e = asf(&pvr, &d, 1.0, 0.0, &AsfOptions::default()).unwrap();
        let n = d.n();
        let mut tot = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let qij = pvr.q(&b.eval(1.0, 0.0, &d.r[i], &d.s[j]));
                let qji = pvr.q(&b.eval(1.0, 0.0, &d.r[j], &d.s[i]));
                tot += (qij + qji) / 2.0;
            }
        }
        let brute = tot / (n * (n - 1) / 2) as f64;
        assert!((e.m - brute).abs() < 1e-12);
        assert!(e.psi.iter().sum::<f64>().abs() < 1e-12);
        assert!(e.smallest_q <= e.m && e.m <= e.largest_q);
        assert!(matches!(e.overlap, Overlap::Passed { .. }));
    }

    #[test]
    fn self_contrast_is_zero() {
        let d = simulate_linear(20, [0.0, 1.0, 1.0, 1.0], 3);
        let (pvr, _, _) = fit_pvr(&d, Family::Linear, &basis(&d), OmegaKind::Fg).unwrap();
        let c = asf(&pvr, &d, 1.0, 1.0, &AsfOptions::default()).unwrap();
        let r = asf_contrast(&[c.clone(), c], &[1.0, -1.0], &pvr).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.se, 0.0);
    }

    #[test]
    fn linear_dgp_contrasts() {
        let d = simulate_linear(80, [0.5, 1.0, 0.7, 0.4], 4);
        let (pvr, _, _) = fit_pvr(&d, Family::Linear, &basis(&d), OmegaKind::Fg).unwrap();
        let opts = AsfOptions::default();
        let (_, ate) = named_contrast(&pvr, &d, Contrast::Ate, &opts).unwrap();
        assert!((ate.value - 2.1).abs() < 4.0 * ate.se, "{ate:?}");
        let (_, comp) = named_contrast(&pvr, &d, Contrast::Complementarity, &opts).unwrap();
        assert!((comp.value - 0.4).abs() < 4.0 * comp.se, "{comp:?}");
        let fg = asf(&pvr, &d, 1.0, 1.0, &AsfOptions { fg_proxy_term: true, ..opts }).unwrap();
        assert!(fg.var_proxy.is_finite());
    }

    #[test]
    fn overlap_failure_names_cells() {
        let mut d = simulate_linear(30, [0.0, 1.0, 1.0, 1.0], 5);
        for i in 0..d.n() {
            if d.r[i][0] == 0.0 {
                d.w[i] = 0.0;
            }
        }
        let b = basis(&d);
        let pvr = Pvr {
            family: Family::Linear,
            basis: b,
            gamma: DVector::zeros(6),
            avar: DMatrix::zeros(6, 6),
            avar_label: "fixed".into(),
        };
        match asf(&pvr, &d, 1.0, 1.0, &AsfOptions::default()) {
            Err(Error::Overlap(msg)) => assert!(msg.contains("r=[0.0]")),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn unidentified_basis_flagged() {
        let d = simulate_linear(15, [0.0, 1.0, 1.0, 1.0], 6);
        let b = Basis::parse("1; w; w*x; x; w*x", &d.r_names, &d.s_names).unwrap();
        assert!(matches!(
            fit_pvr(&d, Family::Linear, &b, OmegaKind::Fg),
            Err(Error::Singular(_))
        ));
        assert!(Basis::parse("w; x", &d.r_names, &d.s_names).is_err());
        assert!(Basis::parse("1; w*r.nope", &d.r_names, &d.s_names).is_err());
    }
}

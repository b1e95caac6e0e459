//! Small numerical helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Relative singular-value cutoff used by every pseudo-inverse.
pub const PINV_TOL: f64 = 1e-10;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `phi(x) / Phi(x)`, stable far into the lower tail.
pub fn mills_lower(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        let r = 1.0 / (x * x);
        -x / (1.0 - r + 3.0 * r * r - 15.0 * r * r * r)
    }
}

/// `ln Phi(x)`, stable far into the lower tail.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() - (x * x).recip()
    }
}

/// Inverse of the standard normal cdf.
pub fn norm_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

/// Moore-Penrose inverse dropping singular values below
/// `PINV_TOL * largest`.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = PINV_TOL * smax.max(f64::MIN_POSITIVE);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// Numerical rank with the same relative cutoff as `pinv`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let cut = PINV_TOL * s.max();
    s.iter().filter(|&&x| x > cut).count()
}

/// `A^+ B A^+` for symmetric `A`.
pub fn sandwich(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ai = pinv(a);
    let v = &ai * b * &ai;
    symmetrize(&v)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Largest elementwise absolute difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

/// Sample mean and (n - 1)-denominator covariance of the rows.
pub fn mean_cov(rows: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let k = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    let mean = rows.iter().fold(DVector::zeros(k), |a, r| a + r) / n;
    let mut cov = DMatrix::zeros(k, k);
    for r in rows {
        let d = r - &mean;
        cov += &d * d.transpose();
    }
    (mean, cov / (n - 1.0).max(1.0))
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-11);
        for x in [-29.9, -31.0, -45.0] {
            let direct = norm_pdf(x) / norm_cdf(x);
            if direct.is_finite() {
                assert!((mills_lower(x) / direct - 1.0).abs() < 1e-6);
            }
            assert!(mills_lower(x) > -x);
        }
        assert!((ln_norm_cdf(-29.9) - norm_cdf(-29.9).ln()).abs() < 1e-6);
        assert!(ln_norm_cdf(-40.0).is_finite());
        assert!((norm_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pinv(&m);
        assert!(max_abs_diff(&(&m * &p * &m), &m) < 1e-14);
        assert_eq!(rank(&m), 1);
        let i = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!(max_abs_diff(&pinv(&i), &(DMatrix::identity(3, 3) * 0.5)) < 1e-15);
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
    }
}

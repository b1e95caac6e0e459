//! Closed-form stitching frequencies under the Erdos-Renyi model.

use crate::error::{Error, Result};

/// Pair of order-3 graphlets a stitching frequency refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriadPair {
    TwoStarTwoStar,
    TriangleTriangle,
    TwoStarTriangle,
}

impl TriadPair {
    pub const ALL: [TriadPair; 3] = [
        TriadPair::TwoStarTwoStar,
        TriadPair::TriangleTriangle,
        TriadPair::TwoStarTriangle,
    ];
}

/// Stitching frequencies and limiting covariance for edge probability rho.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErClosedForms {
    pub rho: f64,
    /// `xi[q - 1][pair]` in the order of `TriadPair::ALL`.
    pub xi: [[f64; 3]; 3],
    /// Overlap-2 covariance matrix of (triangle, two-star) densities.
    pub limit: [[f64; 2]; 2],
}

impl ErClosedForms {
    pub fn xi(&self, q: usize, pair: TriadPair) -> f64 {
        let j = TriadPair::ALL.iter().position(|p| *p == pair).unwrap();
        self.xi[q - 1][j]
    }
}

pub fn er_closed_forms(rho: f64) -> Result<ErClosedForms> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Config(format!("rho = {rho} must lie in (0, 1)")));
    }
    let r = rho;
    let s = 1.0 - rho;
    let xi = [
        [r.powi(4) * s * s, r.powi(6), r.powi(5) * s],
        [
            4.0 / 9.0 * r.powi(3) * s * s + r.powi(4) * s / 9.0,
            r.powi(5),
            2.0 / 3.0 * r.powi(4) * s,
        ],
        [r * r * s / 3.0, r.powi(3), 0.0],
    ];
    let c = r.powi(3) * s;
    let off = r * (2.0 - 3.0 * r) / 3.0;
    let limit = [
        [c * r * r, c * off],
        [c * off, c * (2.0 - 3.0 * r).powi(2) / 9.0],
    ];
    Ok(ErClosedForms { rho, xi, limit })
}

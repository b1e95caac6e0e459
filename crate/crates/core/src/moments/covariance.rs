//! Finite-sample covariance of induced triad densities and transitivity.

use super::census::census;
use super::enumerate::choose;
use super::stitching::{stitching_frequencies, TupleMode};
use crate::error::{Error, Result};
use crate::graph::{Graph, Graphlet};
use nalgebra::DMatrix;

/// How the pentad and tetrad terms are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovMode {
    Exact,
    Subsample { draws: usize, seed: u64 },
}

impl CovMode {
    fn tuples(self) -> TupleMode {
        match self {
            CovMode::Exact => TupleMode::Exact,
            CovMode::Subsample { draws, seed } => TupleMode::Subsample { draws, seed },
        }
    }
}

/// Estimated covariance matrix of the induced densities of order-3
/// graphlets, with the stitching frequencies it was built from.
#[derive(Clone, Debug)]
pub struct MomentCovariance {
    pub graphlets: Vec<Graphlet>,
    pub n: usize,
    pub mode: CovMode,
    pub densities: Vec<f64>,
    /// `xi[q - 1][(r, s)]`: stitching frequency of `(R, S)` on `q` vertices.
    pub xi: Vec<DMatrix<f64>>,
    /// Subsampling standard errors of `xi` (zeros for exact terms).
    pub xi_se: Vec<DMatrix<f64>>,
    pub cov: DMatrix<f64>,
    /// Set when some estimated variance came out negative.
    pub negative_variance: bool,
}

impl MomentCovariance {
    /// Standard error of the k-th density, clamped at zero.
    pub fn se(&self, k: usize) -> f64 {
        self.cov[(k, k)].max(0.0).sqrt()
    }

    pub fn index_of(&self, g: &Graphlet) -> Option<usize> {
        self.graphlets.iter().position(|h| h.is_isomorphic(g))
    }
}

/// Plugs stitching frequencies into the finite-N covariance of `P_N(R)`,
/// `P_N(S)`: every overlap size q = 1, 2, 3 is kept, together with the
/// product correction for pairs of triads sharing no vertex.
pub fn moment_covariance(
    graph: &Graph,
    graphlets: &[Graphlet],
    mode: CovMode,
) -> Result<MomentCovariance> {
    if graphlets.iter().any(|g| g.order() != 3) {
        return Err(Error::Config("moment covariance is for order-3 graphlets".into()));
    }
    let n = graph.n();
    if n < 6 {
        return Err(Error::UndefinedInput(format!(
            "covariance needs at least 6 nodes, got {n}"
        )));
    }
    let k = graphlets.len();
    let triads = census(graph, 3);
    let c3 = choose(n, 3);
    let densities: Vec<f64> = graphlets
        .iter()
        .map(|g| triads.count(g) as f64 / (c3 * g.iso_count() as f64))
        .collect();

    let pairs: Vec<(Graphlet, Graphlet)> = graphlets
        .iter()
        .flat_map(|r| graphlets.iter().map(move |s| (*r, *s)))
        .collect();
    let mut xi = Vec::with_capacity(3);
    let mut xi_se = Vec::with_capacity(3);
    for q in 1..=2 {
        let f = stitching_frequencies(graph, &pairs, q, mode.tuples())?;
        xi.push(DMatrix::from_iterator(k, k, f.iter().map(|x| x.value)).transpose());
        xi_se.push(DMatrix::from_iterator(k, k, f.iter().map(|x| x.se)).transpose());
    }
    // Same triad twice: only matching classes contribute.
    xi.push(DMatrix::from_fn(k, k, |r, s| {
        if graphlets[r].is_isomorphic(&graphlets[s]) {
            densities[r] / graphlets[r].iso_count() as f64
        } else {
            0.0
        }
    }));
    xi_se.push(DMatrix::zeros(k, k));

    let nf = n as f64;
    let disjoint = (nf - 3.0) * (nf - 4.0) * (nf - 5.0) / (nf * (nf - 1.0) * (nf - 2.0));
    let p = DMatrix::from_column_slice(k, 1, &densities);
    let mut cov = &p * p.transpose() * -(1.0 - disjoint);
    for q in 1..=3 {
        let w = choose(3, q) * choose(n - 3, 3 - q) / c3;
        cov += &xi[q - 1] * w;
    }
    cov = (&cov + cov.transpose()) * 0.5;
    let negative_variance = (0..k).any(|i| cov[(i, i)] < 0.0);
    Ok(MomentCovariance {
        graphlets: graphlets.to_vec(),
        n,
        mode,
        densities,
        xi,
        xi_se,
        cov,
        negative_variance,
    })
}

/// Transitivity index from induced triad densities, with the injective
/// form computed alongside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transitivity {
    pub p_triangle: f64,
    pub p_two_star: f64,
    /// `P(tri) / (P(two-star) + P(tri))`.
    pub index: f64,
    /// `Q(tri) / Q(two-star)`.
    pub index_injective: f64,
}

pub fn transitivity(graph: &Graph) -> Result<Transitivity> {
    let n = graph.n();
    if n < 3 {
        return Err(Error::UndefinedInput("transitivity needs 3 nodes".into()));
    }
    let t = census(graph, 3);
    let c3 = choose(n, 3);
    let tri = t.count(&Graphlet::triangle());
    let wedge = t.count(&Graphlet::two_star());
    if tri + wedge == 0 {
        return Err(Error::UndefinedInput(
            "graph has no connected triads; transitivity undefined".into(),
        ));
    }
    let p_triangle = tri as f64 / c3;
    let p_two_star = wedge as f64 / (3.0 * c3);
    let q_triangle = p_triangle;
    let q_two_star = (wedge + 3 * tri) as f64 / (3.0 * c3);
    Ok(Transitivity {
        p_triangle,
        p_two_star,
        index: transitivity_from_densities(p_triangle, p_two_star),
        index_injective: q_triangle / q_two_star,
    })
}

pub fn transitivity_from_densities(p_triangle: f64, p_two_star: f64) -> f64 {
    p_triangle / (p_two_star + p_triangle)
}

/// Delta-method standard error of the transitivity index.
pub fn transitivity_se(cov: &MomentCovariance) -> Result<f64> {
    let (Some(it), Some(iw)) = (
        cov.index_of(&Graphlet::triangle()),
        cov.index_of(&Graphlet::two_star()),
    ) else {
        return Err(Error::Config(
            "transitivity SE needs triangle and two-star in the covariance".into(),
        ));
    };
    let (pt, pw) = (cov.densities[it], cov.densities[iw]);
    let d = (pt + pw).powi(2);
    if d == 0.0 {
        return Err(Error::UndefinedInput("no connected triads".into()));
    }
    let (gt, gw) = (pw / d, -pt / d);
    let v = gt * gt * cov.cov[(it, it)]
        + 2.0 * gt * gw * cov.cov[(it, iw)]
        + gw * gw * cov.cov[(iw, iw)];
    Ok(v.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::sample_er;
    use crate::moments::enumerate::for_each_subset;

    /// Direct oracle: covariance over all ordered pairs of triads.
    fn brute(graph: &Graph, shapes: &[Graphlet]) -> DMatrix<f64> {
        let mut triads = Vec::new();
        for_each_subset(graph, 3, |v, _| triads.push([v[0], v[1], v[2]]));
        let ind: Vec<Vec<f64>> = triads
            .iter()
            .map(|t| {
                let g = graph.induced_subgraph(t).unwrap();
                shapes
                    .iter()
                    .map(|s| g.is_isomorphic(s) as u8 as f64 / s.iso_count() as f64)
                    .collect()
            })
            .collect();
        let k = shapes.len();
        let c = triads.len() as f64;
        let p: Vec<f64> = (0..k)
            .map(|r| ind.iter().map(|x| x[r]).sum::<f64>() / c)
            .collect();
        let mut m = DMatrix::zeros(k, k);
        for (a, ta) in triads.iter().enumerate() {
            for (b, tb) in triads.iter().enumerate() {
                if ta.iter().any(|x| tb.contains(x)) {
                    for r in 0..k {
                        for s in 0..k {
                            m[(r, s)] += ind[a][r] * ind[b][s] - p[r] * p[s];
                        }
                    }
                }
            }
        }
        m / (c * c)
    }

    #[test]
    fn exact_mode_matches_pair_sum() {
        let shapes = [Graphlet::triangle(), Graphlet::two_star()];
        for seed in 0..3 {
            let g = sample_er(12, 0.35, seed).unwrap();
            let cov = moment_covariance(&g, &shapes, CovMode::Exact).unwrap();
            let want = brute(&g, &shapes);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (cov.cov[(i, j)] - want[(i, j)]).abs() < 1e-15,
                        "{i}{j}: {} vs {}",
                        cov.cov[(i, j)],
                        want[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn ti_extremes() {
        let k = transitivity(&Graph::complete(7)).unwrap();
        assert_eq!(k.index, 1.0);
        let star = Graph::from_edges(6, false, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        assert_eq!(transitivity(&star).unwrap().index, 0.0);
        assert!(transitivity(&Graph::empty(5)).is_err());
    }

    #[test]
    fn paper_identity_for_reported_densities() {
        let ti = transitivity_from_densities(0.00115, 0.00496);
        assert!((ti - 0.1882).abs() < 5e-5);
    }

    #[test]
    fn small_graphs_rejected() {
        let g = Graph::complete(5);
        assert!(moment_covariance(&g, &[Graphlet::triangle()], CovMode::Exact).is_err());
    }
}

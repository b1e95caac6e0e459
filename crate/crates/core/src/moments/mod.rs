//! Subgraph densities, stitching frequencies and the covariance of induced
//! triad densities.

pub mod census;
pub mod covariance;
pub mod degree;
pub mod enumerate;
pub mod er;
pub mod stitching;

pub use census::{census, classes, triad_census, Census};
pub use covariance::{
    moment_covariance, transitivity, transitivity_from_densities, transitivity_se, CovMode,
    MomentCovariance, Transitivity,
};
pub use degree::{
    degree_moment_empirical, degree_moment_theoretical, star_count, surjections, StarDensities,
};
pub use enumerate::{choose, choose_u128};
pub use er::{er_closed_forms, ErClosedForms, TriadPair};
pub use stitching::{
    stitching_frequencies, stitching_frequency, stitching_multiset, Frequency, StitchPattern,
    StitchingMultiset, TupleMode,
};

use crate::error::{Error, Result};
use crate::graph::{Graph, Graphlet};

/// Induced and injective density of one graphlet.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub graphlet: Graphlet,
    /// Number of p-subsets whose induced subgraph is isomorphic to the graphlet.
    pub induced_count: u64,
    /// Labelled copies present as (not necessarily induced) subgraphs.
    pub injective_count: u64,
    pub p_n: f64,
    pub q_n: f64,
    pub choose_n_p: f64,
    pub iso: usize,
}

/// Exact induced and injective densities for graphlets of order 2 to 4.
///
/// One census pass is made per distinct order requested.
pub fn count_patterns(graph: &Graph, patterns: &[Graphlet]) -> Result<Vec<MomentEstimate>> {
    if graph.is_directed() {
        return Err(Error::Config("pattern counts need an undirected graph".into()));
    }
    let mut censuses: Vec<Census> = Vec::new();
    patterns
        .iter()
        .map(|g| {
            let p = g.order();
            if !(2..=4).contains(&p) {
                return Err(Error::Config(format!("graphlet order {p} not in 2..=4")));
            }
            if graph.n() < p {
                return Err(Error::UndefinedInput(format!(
                    "graph has {} nodes, fewer than graphlet order {p}",
                    graph.n()
                )));
            }
            let c = match censuses.iter().position(|c| c.order == p) {
                Some(i) => &censuses[i],
                None => {
                    censuses.push(census(graph, p));
                    censuses.last().unwrap()
                }
            };
            let iso = g.iso_count();
            let choose_n_p = choose(graph.n(), p);
            let induced_count = c.count(g);
            let injective_count = c.injective_count(g);
            Ok(MomentEstimate {
                graphlet: g.canonical(),
                induced_count,
                injective_count,
                p_n: induced_count as f64 / (choose_n_p * iso as f64),
                q_n: injective_count as f64 / (choose_n_p * iso as f64),
                choose_n_p,
                iso,
            })
        })
        .collect()
}

/// Resolves a pattern name such as `triangle`, `twostar`, `edge`,
/// `3star`, `4cycle` or `4path`.
pub fn parse_pattern(name: &str) -> Result<Graphlet> {
    let key = name.trim().to_ascii_lowercase().replace(['-', '_'], "");
    let g = match key.as_str() {
        "edge" => Graphlet::edge(),
        "nonedge" => Graphlet::empty(2),
        "empty" | "empty3" => Graphlet::empty(3),
        "oneedge" => Graphlet::from_edges(3, &[(0, 1)]),
        "twostar" | "wedge" | "2star" => Graphlet::two_star(),
        "triangle" => Graphlet::triangle(),
        "3star" | "threestar" => Graphlet::k_star(3),
        "4cycle" | "square" => Graphlet::cycle(4),
        "4path" => Graphlet::path(4),
        "k4" | "4clique" => Graphlet::complete(4),
        _ => return Err(Error::Config(format!("unknown pattern '{name}'"))),
    };
    Ok(g)
}

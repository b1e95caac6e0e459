//! Dyadic regression by composite likelihood with variance estimators that
//! allow for dependence between dyads sharing an agent.

pub mod bootstrap;
pub mod data;
pub mod fit;
pub mod variance;

pub use bootstrap::{bootstrap, BootstrapResult, Scheme};
pub use data::{great_circle_km, parse_outcomes, DyadicDataset, NodeTable, Recipe, Term};
pub use fit::{dyad_scores, fit_composite, pair_index, Family, FitOptions, FitResult};
pub use variance::{variance_report, OmegaKind, VarianceReport};

//! Econometrics of networks: exchangeable random graph simulation, subgraph
//! moments with stitching-based covariance estimates, dyadic regression with
//! dyadic-robust variances, average structural functions, the triad probit
//! and strategic network formation estimators.

pub mod error;
pub mod graph;
pub mod graphon;
pub mod asf;
pub mod cli;
pub mod dyadic;
pub mod moments;
pub mod numeric;
pub mod rng;
pub mod strategic;
pub mod triad_probit;

pub use error::{Error, Result};
pub use graph::{Graph, Graphlet};

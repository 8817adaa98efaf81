//! Robust Bayesian graphical regression.
//!
//! Estimates covariate-dependent graphs of conditional sign independence for
//! heavy-tailed multivariate data. Each node is regressed on the others with
//! thresholded, covariate-dependent coefficients and per-observation random
//! scales; the posterior is explored with an exact Gibbs sampler built on
//! [`piecewise::PiecewiseDensity`].

pub mod commands;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod metrics;
pub mod model;
pub mod piecewise;
pub mod simgen;
pub mod special;
pub mod summary;

pub use error::{Error, Result};
pub use gibbs::{run_all, NodeChain, PosteriorDraws, SamplerOptions};
pub use model::{csif_eval, theta_eval, validate_dataset, ChainConfig, Dataset, HyperParams, NodeState};
pub use piecewise::{PiecewiseDensity, PriorKernel, QuadraticPiece};

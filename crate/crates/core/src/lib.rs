//! Numerical and Monte Carlo laboratory for the Logistic recursive
//! distributional equation `X =_d min_j (ξ_j - X_j)`.
//!
//! * [`logistic`]: closed-form Logistic kernel.
//! * [`grid`]: grid-sampled tails and curves with right-cumulative quadrature.
//! * [`operators`]: the diagonal operator `T`, the RDE operator `𝔄` and the
//!   fixed-point driver.
//! * [`beta`]: the `β_n` recursion on `[0, 1]` and the limit diagnostics.
//! * [`pwit`]: recursive tree process on truncated Poisson weighted
//!   infinite trees with shared-innovation coupling.
//! * [`assignment`]: exact random assignment benchmark.

pub mod assignment;
pub mod beta;
pub mod error;
pub mod grid;
pub mod logistic;
pub mod operators;
pub mod pwit;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{
    GridSpec, QuadratureRule, QuadratureSpec, TailClosure, TailFunction, UnitIntervalCurve,
};
pub use logistic::LogisticKernel;

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

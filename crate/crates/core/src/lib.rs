//! Ordered transfer hyperparameter optimization.
//!
//! Tuning tasks arrive as a sequence in which task `i` is expected to
//! resemble task `i - 1`. This crate provides the pieces needed to study
//! that setting end to end:
//!
//! * [`space`]: search spaces and the unit-cube encoding used by numeric code.
//! * [`surrogate`]: Gaussian-process regression (Matérn 5/2, Kumaraswamy input
//!   warping, marginal-likelihood fitting).
//! * [`acquisition`]: Monte Carlo expected improvement and its inner optimizer.
//! * [`schedulers`]: the ten tuning methods behind one [`schedulers::Scheduler`] trait.
//! * [`benchmarks`]: the NewsVendor simulator, a synthetic drifting-optimum
//!   family and a tabular replay benchmark.
//! * [`harness`]: the sequential experiment protocol, result records and metrics.

pub mod acquisition;
pub mod benchmarks;
mod error;
pub mod harness;
pub mod rng;
pub mod schedulers;
pub mod space;
pub mod surrogate;

pub use error::{Error, Result};

//! Simulation models, estimators and asymptotic-law oracles for the realized
//! skewness of a discretely observed Itô semimartingale.
//!
//! The crate is organized around the Monte Carlo verification pipeline:
//!
//! * [`simkit`] simulates jump-diffusion paths, observation-time sequences and
//!   microstructure noise, and records exact oracle functionals of each path.
//! * [`kernels`] evaluates pre-averaging weight functions and computes their
//!   scalar constants by composite Simpson quadrature.
//! * [`estimators`] computes realized volatility, cubic power variations,
//!   realized skewness and the pre-averaged estimators PRV/PCV from an
//!   observed series.
//! * [`limitlaw`] samples the mixed-normal limit distributions and assembles
//!   the asymptotic covariance matrix of the pre-averaged estimator pair.
//! * [`harness`] runs seeded, replication-parallel experiments that compare
//!   estimator errors against the limit-law oracles.
//! * [`io`] reads and writes the CSV interchange formats used by the CLI.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod limitlaw;
pub mod rng;
pub mod simkit;

pub use error::{Error, Result};

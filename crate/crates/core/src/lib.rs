//! Penalized Wasserstein barycenters of probability measures on a compact box.
//!
//! The crate is organized around five building blocks:
//!
//! - [`measures`]: discrete measures, grid densities and 1-D quantile tables;
//! - [`transport`]: exact 2-Wasserstein solves with dual certificates, the
//!   closed-form 1-D distance, c-transforms and assignment distances between
//!   collections of measures;
//! - [`penalties`]: the convex penalizing functionals (quadratic, negative
//!   entropy with a positive floor, Sobolev-augmented) together with their
//!   gradients and Bregman divergences;
//! - [`solver`]: projected subgradient descent for the penalized barycenter
//!   objective, plus an exact 1-D quantile-averaging oracle;
//! - [`experiments`]: a deterministic Monte-Carlo harness for the stability
//!   bound, the bias/variance convergence rates and the error decomposition.

pub mod constants;
pub mod experiments;
pub mod io;
pub mod measures;
pub mod penalties;
pub mod solver;
pub mod transport;

pub use measures::{grid_to_discrete, validate, BoxDomain, DiscreteMeasure, GridDensity, Measure, QuantileTable};
pub use penalties::{Penalty, PenaltyKind};
pub use solver::{BarycenterProblem, BarycenterSolution, SolverConfig, StepRule};
pub use transport::TransportCertificate;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operation requires one-dimensional measures, got d={0}")]
    NotOneDimensional(usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("density outside penalty domain: {0}")]
    OutsideDomain(String),
    #[error("list length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("infeasible floor: alpha * grid volume exceeds total mass")]
    InfeasibleFloor,
    #[error("transport solve failed: {0}")]
    Transport(String),
    #[error("solver did not converge within {0} iterations")]
    NonConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Derivative-free trust-region optimization with random models.
//!
//! The crate is `no_std` (with `alloc`). It provides the quadratic model
//! type, trust-region subproblem solvers, interpolation, minimum-norm and
//! sparse ℓ1 model fitting, sample-set generation, the trust-region drivers
//! and the direct-search baselines used for comparison.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod functions;
pub mod l1;
pub mod linalg;
pub mod model;
pub mod models;
pub mod objective;
pub mod sampling;
pub mod subproblem;
pub mod trust_region;

pub use error::{Error, Result};
pub use model::{compute_rho, QuadraticModel};
pub use objective::{Function, Objective};
pub use sampling::{Archive, Rng};
pub use trust_region::{run, Driver, ModelBuilder, RunResult, Termination, TrustRegionConfig};

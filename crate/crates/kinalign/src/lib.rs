//! Kinetic alignment dynamics with non-instantaneous collisions.
//!
//! Individuals carry a one-dimensional opinion/velocity and interact in
//! groups: groups merge and split under Poisson coagulation/fragmentation
//! rates while members of a group drift toward its average. The crate
//! provides, on a shared set of kinematic primitives:
//!
//! - [`moments`]: the closed ODE hierarchies for group numbers, first
//!   moments and variances, with detailed-balance equilibria and entropy
//!   functionals;
//! - [`particle`]: an exact event-driven stochastic simulation of the
//!   interacting-group process;
//! - [`kinetic`]: deterministic grid solvers for the four-model hierarchy
//!   (truncated three-species reference, first-order pair model,
//!   instantaneous limit, delayed scalar model);
//! - [`harness`]: configuration, experiment orchestration, comparisons,
//!   convergence-order fits and CSV/JSON emission.

pub mod error;
pub mod grid;
pub mod harness;
pub mod kinematics;
pub mod kinetic;
pub mod moments;
pub mod particle;
pub mod rates;

pub use error::{Error, Result};

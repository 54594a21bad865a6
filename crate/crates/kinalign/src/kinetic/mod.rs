//! Deterministic grid solvers for the four-model hierarchy.
//!
//! - model A ([`reference`]): the truncated three-species system with a
//!   dynamic `f_3`, advanced by method of lines with upwind drift;
//! - model B ([`first_order`]): the first-order pair model, advanced through
//!   its mild (semigroup/Duhamel) formulation so the fast pair density is
//!   reconstructed from the history of `f_1` instead of being stepped on the
//!   grid;
//! - model C ([`limit`]): the instantaneous-limit binary collision equation;
//! - model D ([`scalar`]): the delayed scalar model with the
//!   non-instantaneous binary operator and the instantaneous ternary
//!   correction.

pub mod first_order;
pub mod history;
pub mod limit;
pub mod pair_gain;
pub mod quadrature;
pub mod reference;
pub mod scalar;
pub mod semigroup;
pub mod ternary;

pub use first_order::{rhs_first_order, FirstOrderSolver, KineticState};
pub use history::HistoryBuffer;
pub use limit::{f2_limit, q_limit, LimitSolver};
pub use quadrature::SemigroupQuadrature;
pub use reference::{rhs_reference, ReferenceSolver, ReferenceState};
pub use scalar::{f2_as, f2_zero, q2_delayed, q3_ternary, ScalarSolver};
pub use semigroup::{apply_s20, apply_s2eps, apply_s3};

/// Mass bookkeeping shared by the grid solvers: out-of-grid quadrature
/// losses and negativity clipping, accumulated over a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverDiagnostics {
    pub leaked_mass: f64,
    pub clipped_mass: f64,
}

impl SolverDiagnostics {
    pub fn total(&self) -> f64 {
        self.leaked_mass + self.clipped_mass
    }
}

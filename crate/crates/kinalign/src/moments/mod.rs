//! Closed moment hierarchies of the group process and their equilibria.

mod entropy;
mod mk;
mod ode;
mod pair;

pub use entropy::{
    entropy_dissipation, log_entropy, log_entropy_bound, relative_entropy,
};
pub use mk::{constant_rate_equilibrium, mass_conservation_defect, mk_rhs};
pub use ode::{integrate_ode, Trajectory};
pub use pair::{
    equilibrium_first_moments, equilibrium_masses, pair_first_moment_rhs, pair_mass_rhs,
    pair_variance_rhs, vt3_closure, PairCross,
};

/// Moment vectors of the full hierarchy up to `kmax`: group numbers `M_k`,
/// first moments `I_k`, second moments `E_k` and pair dispersions `Ṽ_k`
/// (with `Ṽ_1 = 0` by convention).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: Vec<f64>,
    pub i: Vec<f64>,
    pub e: Vec<f64>,
    pub vt: Vec<f64>,
    pub t: f64,
}

impl MomentState {
    pub fn zeros(kmax: usize) -> Self {
        Self {
            m: vec![0.0; kmax],
            i: vec![0.0; kmax],
            e: vec![0.0; kmax],
            vt: vec![0.0; kmax],
            t: 0.0,
        }
    }

    /// Total mass `Σ k M_k` (number of individuals).
    pub fn total_mass(&self) -> f64 {
        self.m
            .iter()
            .enumerate()
            .map(|(idx, &mk)| (idx + 1) as f64 * mk)
            .sum()
    }
}

/// State of the two-species (free particles + pairs) moment system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMomentState {
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub v1: f64,
    pub v2: f64,
    pub t: f64,
}

impl PairMomentState {
    /// Conserved total mass `M1 + 2 ε M2`.
    pub fn total_mass(&self, epsilon: f64) -> f64 {
        self.m1 + 2.0 * epsilon * self.m2
    }

    /// Conserved total first moment `I1 + 2 ε I2`.
    pub fn total_moment(&self, epsilon: f64) -> f64 {
        self.i1 + 2.0 * epsilon * self.i2
    }

    /// Total variance `V1 + 2 ε V2`.
    pub fn total_variance(&self, epsilon: f64) -> f64 {
        self.v1 + 2.0 * epsilon * self.v2
    }
}

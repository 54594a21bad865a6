//! Closed two-species moment ODEs (masses, first moments, variances) of the
//! first-order model and their closed-form equilibria.

use crate::error::{Error, Result};
use crate::moments::PairMomentState;
use crate::rates::RateTable;

/// `dM1 = μ11 M2 - λ11 M1²`, `dM2 = (λ11 M1² - μ11 M2) / (2ε)`.
///
/// `dM1 + 2ε dM2 = 0` holds as an algebraic identity.
pub fn pair_mass_rhs(rates: &RateTable, s: &PairMomentState) -> (f64, f64) {
    let flux = rates.m11() * s.m2 - rates.l11() * s.m1 * s.m1;
    (flux, -flux / (2.0 * rates.epsilon))
}

/// Equilibrium masses for total mass `M`:
/// `M1∞ = 2M / (1 + sqrt(1 + 8 λ11 ε M / μ11))`, `M2∞ = (λ11/μ11) M1∞²`.
pub fn equilibrium_masses(rates: &RateTable, mass_m: f64) -> (f64, f64) {
    if mass_m == 0.0 {
        return (0.0, 0.0);
    }
    let a = 8.0 * rates.l11() * rates.epsilon * mass_m / rates.m11();
    let m1 = 2.0 * mass_m / (1.0 + (1.0 + a).sqrt());
    let m2 = rates.l11() / rates.m11() * m1 * m1;
    (m1, m2)
}

/// `dI1 = -2ε dI2 = μ11 I2 - λ11 M1 I1 + (2/3) ε λ12 (M1 I2 - M2 I1)`.
pub fn pair_first_moment_rhs(rates: &RateTable, s: &PairMomentState) -> (f64, f64) {
    let di1 = rates.m11() * s.i2 - rates.l11() * s.m1 * s.i1
        + (2.0 / 3.0) * rates.epsilon * rates.l12() * (s.m1 * s.i2 - s.m2 * s.i1);
    (di1, -di1 / (2.0 * rates.epsilon))
}

/// Closed-form limits of the partial first moments given the equilibrium
/// masses; both equal `M_k^∞ v_∞` with `v_∞ = I/M`.
pub fn equilibrium_first_moments(
    rates: &RateTable,
    m1_inf: f64,
    m2_inf: f64,
    mass_m: f64,
    moment_i: f64,
) -> Result<(f64, f64)> {
    if mass_m == 0.0 {
        return Err(Error::Domain(
            "equilibrium first moments undefined: massM = 0 gives no mean opinion".into(),
        ));
    }
    let eps = rates.epsilon;
    let i1 = (3.0 * rates.m11() + 2.0 * eps * rates.l12() * m1_inf)
        / (3.0 * rates.m11() + 2.0 * eps * (3.0 * rates.l11() * m1_inf + rates.l12() * mass_m))
        * moment_i;
    let i2 = (3.0 * rates.l11() * m1_inf + 2.0 * eps * rates.l12() * m2_inf)
        / (3.0 * rates.m11() + 2.0 * eps * rates.l12() * m1_inf)
        * i1;
    // consistency with the conserved-mean representation
    let v_inf = moment_i / mass_m;
    for (lhs, rhs, tag) in [(i1, m1_inf * v_inf, "I1"), (i2, m2_inf * v_inf, "I2")] {
        let scale = rhs.abs().max(1e-30);
        if (lhs - rhs).abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::Numerical(format!(
                "{tag} limit inconsistent with M_k v_inf: {lhs} vs {rhs}"
            )));
        }
    }
    Ok((i1, i2))
}

/// Cross terms supplied to [`pair_variance_rhs`]: the centered first
/// moments `I_k - v_∞ M_k` and the pair dispersion `Ṽ2`.
#[derive(Debug, Clone, Copy)]
pub struct PairCross {
    pub c1: f64,
    pub c2: f64,
    pub vt2: f64,
}

/// Closed variance ODEs with `V3` and `Ṽ3` eliminated through their
/// quasi-stationary identities:
///
/// `μ12 Ṽ3 = (λ12/3) (2 V1 M2 + 2 V2 M1 - 4 c1 c2 + M1 Ṽ2)`
/// `μ12 V3  = (λ12/3) (V1 M2 + 2 V2 M1) - (2/3) Ṽ3`
///
/// Returns `(dV1, dV2)`. Eliminating `V3` from the pair of equations gives
/// the exact decay identity `dV1 + 2ε dV2 = -4 Ṽ2 - 2 ε Ṽ3`, which is
/// nonpositive whenever the dispersions are nonnegative; the ternary channel
/// vanishes when `λ12 = 0`.
pub fn pair_variance_rhs(rates: &RateTable, s: &PairMomentState, cross: &PairCross) -> (f64, f64) {
    let eps = rates.epsilon;
    let vt3 = if rates.l12() == 0.0 {
        0.0
    } else {
        rates.l12() / (3.0 * rates.m12())
            * (2.0 * s.v1 * s.m2 + 2.0 * s.v2 * s.m1 - 4.0 * cross.c1 * cross.c2
                + s.m1 * cross.vt2)
    };
    // mu12 * V3 as a single quantity; V3 itself is never needed
    let mu12_v3 = rates.l12() / 3.0 * (s.v1 * s.m2 + 2.0 * s.v2 * s.m1) - 2.0 / 3.0 * vt3;
    let dv1 = rates.m11() * s.v2 + eps * mu12_v3
        - rates.l11() * s.m1 * s.v1
        - eps * rates.l12() * s.m2 * s.v1;
    let dv2 = (rates.l11() * s.m1 * s.v1 + 2.0 * eps * mu12_v3
        - 2.0 * eps * rates.l12() * s.m1 * s.v2
        - rates.m11() * s.v2
        - 4.0 * cross.vt2)
        / (2.0 * eps);
    (dv1, dv2)
}

/// `Ṽ3` from the quasi-stationary closure, exposed for diagnostics.
///
/// Vanishes when the ternary channel is off.
pub fn vt3_closure(rates: &RateTable, s: &PairMomentState, cross: &PairCross) -> f64 {
    if rates.l12() == 0.0 {
        return 0.0;
    }
    rates.l12() / (3.0 * rates.m12())
        * (2.0 * s.v1 * s.m2 + 2.0 * s.v2 * s.m1 - 4.0 * cross.c1 * cross.c2 + s.m1 * cross.vt2)
}

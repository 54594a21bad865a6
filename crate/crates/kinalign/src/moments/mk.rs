//! The closed ODE system for the group numbers `M_k` and its
//! detailed-balance equilibria.
//!
//! The truncated system keeps exactly the reactions whose participants and
//! products all have size `<= kmax`: coagulation `(j,k) -> j+k` for
//! `j+k <= kmax` and fragmentation `k -> (j, k-j)` for `k <= kmax`. Every
//! kept reaction conserves `Σ k M_k`, so the truncated flow is exactly
//! mass-conserving, and against a truncated detailed-balance equilibrium the
//! relative entropy is an exact Lyapunov functional.
//! [`mass_conservation_defect`] reports the k-weighted mass flux the full
//! (untruncated) dynamics would push through the dropped coagulation
//! channels, which is the truncation's modeling error.

use crate::error::{Error, Result};
use crate::rates::RateTable;

/// Right-hand side of the truncated `M_k` system, `k = 1..=kmax` with
/// `kmax = m.len()`.
pub fn mk_rhs(rates: &RateTable, m: &[f64]) -> Vec<f64> {
    let kmax = m.len();
    let mut dm = vec![0.0; kmax];
    for k in 1..=kmax {
        let mut rhs = 0.0;
        // coagulation gain: pairs (j, k-j) merging into k
        for j in 1..k {
            rhs += 0.5 * rates.lambda(j, k - j) * m[j - 1] * m[k - j - 1];
        }
        // coagulation loss: k merging with j, kept only while j+k stays
        // in the modeled range
        for j in 1..=kmax.saturating_sub(k) {
            rhs -= rates.lambda(j, k) * m[j - 1] * m[k - 1];
        }
        // fragmentation gain from k+j
        for j in 1..=kmax.saturating_sub(k) {
            rhs += rates.mu(k, j) * m[k + j - 1];
        }
        // fragmentation loss of k into (j, k-j)
        for j in 1..k {
            rhs -= 0.5 * rates.mu(j, k - j) * m[k - 1];
        }
        dm[k - 1] = rhs;
    }
    dm
}

/// k-weighted mass flux through the coagulation channels dropped by the
/// truncation: `-(1/2) Σ_{j,k <= kmax, j+k > kmax} (j+k) λ(j,k) M_j M_k`.
///
/// Zero for rate tables that vanish whenever `j+k > kmax` and in the
/// untruncated limit; its magnitude shrinks as `kmax` grows for decaying
/// size distributions.
pub fn mass_conservation_defect(rates: &RateTable, m: &[f64]) -> f64 {
    let kmax = m.len();
    let mut defect = 0.0;
    for j in 1..=kmax {
        for k in 1..=kmax {
            if j + k > kmax {
                defect -= 0.5 * (j + k) as f64 * rates.lambda(j, k) * m[j - 1] * m[k - 1];
            }
        }
    }
    defect
}

/// Detailed-balance equilibrium for constant rates: `M_k^∞ = (μ/λ) q^k`
/// with `q ∈ (0,1)` fixed by the total mass `Σ_{k<=kmax} k M_k^∞ = massM`.
///
/// Satisfies `λ M_j^∞ M_k^∞ = μ M_{j+k}^∞` for every `j+k <= kmax`.
pub fn constant_rate_equilibrium(
    lambda: f64,
    mu: f64,
    mass_m: f64,
    kmax: usize,
) -> Result<Vec<f64>> {
    if lambda <= 0.0 || mu <= 0.0 || mass_m <= 0.0 {
        return Err(Error::Domain(format!(
            "constant_rate_equilibrium needs lambda, mu, massM > 0 (got {lambda}, {mu}, {mass_m})"
        )));
    }
    if kmax == 1 {
        // no reactions are representable; every state is an equilibrium
        return Ok(vec![mass_m]);
    }
    let prefactor = mu / lambda;
    let mass_of = |q: f64| -> f64 {
        let mut s = 0.0;
        let mut qk = 1.0;
        for k in 1..=kmax {
            qk *= q;
            s += k as f64 * qk;
        }
        prefactor * s
    };
    // mass_of is strictly increasing on (0,1); bracket then bisect
    let upper = mass_of(1.0 - 1e-15);
    if mass_m >= upper {
        return Err(Error::Domain(format!(
            "no detailed-balance root in (0,1): massM = {mass_m} >= supremum {upper}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_of(mid) < mass_m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let mut out = Vec::with_capacity(kmax);
    let mut qk = 1.0;
    for _ in 0..kmax {
        qk *= q;
        out.push(prefactor * qk);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::RateLaw;
    use approx::assert_relative_eq;

    fn const_rates(lambda: f64, mu: f64, kmax: usize) -> RateTable {
        RateTable::new(RateLaw::constant(lambda), RateLaw::constant(mu), 1.0, kmax).unwrap()
    }

    #[test]
    fn truncated_rhs_hand_value() {
        // kmax = 2, constant unit rates, M = (1, 1/2):
        // dM1 = mu*M2 - lambda*M1^2 = -1/2, dM2 = lambda*M1^2/2 - mu*M2/2 = 1/4
        let r = const_rates(1.0, 1.0, 2);
        let dm = mk_rhs(&r, &[1.0, 0.5]);
        assert_relative_eq!(dm[0], -0.5, epsilon = 1e-15);
        assert_relative_eq!(dm[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn rhs_vanishes_at_zero_and_at_detailed_balance() {
        let r = const_rates(1.3, 0.7, 12);
        let zero = mk_rhs(&r, &vec![0.0; 12]);
        assert!(zero.iter().all(|&x| x == 0.0));

        let minf = constant_rate_equilibrium(1.3, 0.7, 2.0, 12).unwrap();
        let dm = mk_rhs(&r, &minf);
        for (k, &d) in dm.iter().enumerate() {
            assert!(
                d.abs() < 1e-12 * minf[0].max(1.0),
                "residual {d} at k={}",
                k + 1
            );
        }
    }

    #[test]
    fn truncated_flow_conserves_mass_exactly() {
        let r = const_rates(0.9, 1.1, 8);
        let m: Vec<f64> = (1..=8).map(|k| 1.0 / k as f64).collect();
        let dm = mk_rhs(&r, &m);
        let flux: f64 = dm
            .iter()
            .enumerate()
            .map(|(idx, &d)| (idx + 1) as f64 * d)
            .sum();
        assert!(flux.abs() < 1e-14, "mass flux {flux}");
    }

    #[test]
    fn defect_zero_for_range_closed_tables() {
        // only the binary channel 1+1 <-> 2 is active
        let lambda = RateLaw::from_entries(2, &[(1, 1, 1.0)]).unwrap();
        let mu = RateLaw::from_entries(2, &[(1, 1, 1.0)]).unwrap();
        let r = RateTable::new(lambda, mu, 1.0, 2).unwrap();
        assert_eq!(mass_conservation_defect(&r, &[3.0, 0.4]), 0.0);
        assert_eq!(mass_conservation_defect(&r, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn defect_matches_leaky_minus_closed_bookkeeping() {
        // independent oracle: evaluate the loss-only "leaky" variant of the
        // M_k system directly and compare mass fluxes
        let kmax = 6;
        let r = const_rates(1.0, 1.0, kmax);
        let m: Vec<f64> = (1..=kmax).map(|k| 0.8f64.powi(k as i32)).collect();
        let mut leaky_flux = 0.0;
        for k in 1..=kmax {
            // extra coagulation losses the truncation drops
            for j in (kmax - k + 1)..=kmax {
                leaky_flux -= k as f64 * r.lambda(j, k) * m[j - 1] * m[k - 1];
            }
        }
        assert_relative_eq!(
            mass_conservation_defect(&r, &m),
            leaky_flux,
            epsilon = 1e-14
        );
    }

    #[test]
    fn defect_decreases_with_kmax_for_geometric_data() {
        let mut prev = f64::INFINITY;
        for kmax in [8usize, 16, 32] {
            let r = const_rates(1.0, 1.0, kmax);
            let m: Vec<f64> = (1..=kmax).map(|k| 0.5f64.powi(k as i32)).collect();
            let d = mass_conservation_defect(&r, &m).abs();
            assert!(d < prev, "defect {d} did not decrease at kmax={kmax}");
            prev = d;
        }
    }

    #[test]
    fn equilibrium_detailed_balance_identity() {
        let (lambda, mu) = (2.0, 0.5);
        let kmax = 20;
        let minf = constant_rate_equilibrium(lambda, mu, 1.5, kmax).unwrap();
        for j in 1..=kmax {
            for k in 1..=(kmax - j) {
                let lhs = lambda * minf[j - 1] * minf[k - 1];
                let rhs = mu * minf[j + k - 1];
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn equilibrium_recovers_known_q() {
        // forward-compute the mass for q = 1/2, then invert
        let kmax = 60;
        let q: f64 = 0.5;
        let mass: f64 = (1..=kmax).map(|k| k as f64 * q.powi(k as i32)).sum();
        let minf = constant_rate_equilibrium(1.0, 1.0, mass, kmax).unwrap();
        // M_1 = q for lambda = mu
        assert_relative_eq!(minf[0], q, epsilon = 1e-8);
    }

    #[test]
    fn equilibrium_kmax_one_is_mass() {
        let minf = constant_rate_equilibrium(1.0, 1.0, 3.7, 1).unwrap();
        assert_eq!(minf, vec![3.7]);
    }

    #[test]
    fn equilibrium_infeasible_mass_errors() {
        // kmax = 2: supremum of representable mass is (mu/lambda)(q + 2 q^2) -> 3 mu/lambda
        assert!(constant_rate_equilibrium(1.0, 1.0, 10.0, 2).is_err());
    }
}

//! Semi-Lagrangian application of the drift-plus-loss semigroups.
//!
//! `S_{2,0}(σ)` and `S_3(σ)` act by pulling the argument back through the
//! alignment flow run backwards for duration `σ` and weighting with the
//! exponential growth/loss factor; on the grid the pullback is evaluated by
//! multilinear interpolation, with out-of-grid points contributing zero
//! (their mass is reported as leak).

use crate::error::{Error, Result};
use crate::grid::{Density2, Density3};
#[cfg(test)]
use crate::grid::Density1;
use crate::kinetic::history::HistoryBuffer;
use crate::rates::RateTable;

/// `(S_{2,0}(σ) h)(v1,v2) = e^{(1-μ11/2)σ} h(Φ_2^{-σ}(v1,v2))`, the exact
/// solution operator of drift plus half the pair fragmentation loss.
///
/// Returns the transported density and the mass lost to out-of-grid
/// pullbacks, measured against the exact contraction `e^{-μ11 σ} ∫h`.
pub fn apply_s20(h: &Density2, sigma: f64, rates: &RateTable) -> (Density2, f64) {
    debug_assert!(sigma >= 0.0);
    let grid = h.grid;
    let n = grid.n;
    let weight = ((1.0 - 0.5 * rates.m11()) * sigma).exp();
    let es = sigma.exp();
    let mut out = Density2::zeros(grid);
    for i in 0..n {
        let v1 = grid.center(i);
        for j in 0..n {
            let v2 = grid.center(j);
            let mean = 0.5 * (v1 + v2);
            // backward flow expands deviations by e^sigma
            let y1 = mean + es * (v1 - mean);
            let y2 = mean + es * (v2 - mean);
            let val = h.interp(y1, y2);
            if val != 0.0 {
                out.values[i * n + j] = weight * val;
            }
        }
    }
    out.symmetrize();
    let expected = (-0.5 * rates.m11() * sigma).exp() * h.mass();
    let leak = (expected - out.mass()).max(0.0);
    (out, leak)
}

/// Two-particle semigroup with the slow coagulation screening factor,
/// written in fast variables: elapsed fast time `tau - sigma` plus the
/// factor `exp(-λ12 ∫_{εσ}^{ετ} M_1(r) dr)` taken from the `M_1` history.
/// Coincides with [`apply_s20`] over `tau - sigma` when `λ12 = 0`.
pub fn apply_s2eps(
    h: &Density2,
    sigma: f64,
    tau: f64,
    m1_history: &HistoryBuffer,
    rates: &RateTable,
) -> Result<(Density2, f64)> {
    if sigma > tau {
        return Err(Error::Config(format!(
            "apply_s2eps requires sigma <= tau, got {sigma} > {tau}"
        )));
    }
    let screening = if rates.l12() == 0.0 {
        1.0
    } else {
        let integral = m1_history.m1_integral(rates.epsilon * sigma, rates.epsilon * tau)?;
        (-rates.l12() * integral).exp()
    };
    let (mut out, leak) = apply_s20(h, tau - sigma, rates);
    for v in &mut out.values {
        *v *= screening;
    }
    Ok((out, leak * screening))
}

/// `(S_3(σ) h)(v) = e^{(2-μ12)σ} h(Φ_3^{-σ}(v))`: the three-particle
/// semigroup, an L1 contraction with rate `μ12`.
pub fn apply_s3(h: &Density3, sigma: f64, rates: &RateTable) -> (Density3, f64) {
    debug_assert!(sigma >= 0.0);
    let grid = h.grid;
    let n = grid.n;
    let weight = ((2.0 - rates.m12()) * sigma).exp();
    let es = sigma.exp();
    let mut out = Density3::zeros(grid);
    for i in 0..n {
        let v1 = grid.center(i);
        for j in 0..n {
            let v2 = grid.center(j);
            for k in 0..n {
                let v3 = grid.center(k);
                let mean = (v1 + v2 + v3) / 3.0;
                let y1 = mean + es * (v1 - mean);
                let y2 = mean + es * (v2 - mean);
                let y3 = mean + es * (v3 - mean);
                let val = h.interp(y1, y2, y3);
                if val != 0.0 {
                    out.values[(i * n + j) * n + k] = weight * val;
                }
            }
        }
    }
    let expected = (-rates.m12() * sigma).exp() * h.mass();
    let leak = (expected - out.mass()).max(0.0);
    (out, leak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use approx::assert_relative_eq;

    fn rates(m11: f64, m12: f64) -> RateTable {
        RateTable::pair_triple(1.0, 0.5, m11, m12, 0.1).unwrap()
    }

    #[test]
    fn s20_identity_at_zero() {
        let g = VelocityGrid::new(-2.0, 2.0, 24).unwrap();
        let mut h = Density2::from_fn(g, |a, b| (-(a * a + b * b)).exp());
        h.symmetrize();
        let (out, leak) = apply_s20(&h, 0.0, &rates(1.0, 1.0));
        for (a, b) in out.values.iter().zip(h.values.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
        assert!(leak.abs() < 1e-12);
    }

    #[test]
    fn s20_mass_contracts_within_leak() {
        // durations are kept small enough that the backward stretch leaves
        // the pulled-back field grid-resolved (pointwise pullbacks are only
        // trustworthy in that regime)
        let g = VelocityGrid::new(-4.0, 4.0, 64).unwrap();
        let mut h = Density2::from_fn(g, |a, b| (-0.8 * (a * a + b * b)).exp());
        h.symmetrize();
        let r = rates(1.0, 1.0);
        for &sigma in &[0.3, 0.8] {
            let (out, leak) = apply_s20(&h, sigma, &r);
            let bound = (-0.5 * r.m11() * sigma).exp() * h.mass();
            // lattice sampling of the pullback carries O(h^2) error on
            // either side of the exact contraction
            assert!(
                out.mass() <= bound * (1.0 + 2e-2),
                "mass {} above contraction bound {bound}",
                out.mass()
            );
            assert!(out.mass() + leak >= bound * (1.0 - 2e-2));
        }
    }

    #[test]
    fn s20_preserves_diagonal_support() {
        // data on the diagonal is a fixed set of the pair flow
        let g = VelocityGrid::new(-2.0, 2.0, 16).unwrap();
        let mut h = Density2::zeros(g);
        for i in 4..12 {
            *h.at_mut(i, i) = 1.0;
        }
        let sigma = 0.7;
        let r = rates(1.0, 1.0);
        let (out, _) = apply_s20(&h, sigma, &r);
        let w = ((1.0 - 0.5 * r.m11()) * sigma).exp();
        for i in 5..11 {
            assert_relative_eq!(out.at(i, i), w, epsilon = 1e-12);
        }
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert_eq!(out.at(i, j), 0.0, "off-diagonal value appeared at {i},{j}");
                }
            }
        }
    }

    #[test]
    fn s2eps_limits() {
        let g = VelocityGrid::new(-2.0, 2.0, 20).unwrap();
        let mut h = Density2::from_fn(g, |a, b| (-(a * a + b * b)).exp());
        h.symmetrize();
        let r = rates(1.0, 1.0);
        let f1 = Density1::from_fn(g, |v| (-v * v).exp());
        let mut hist = HistoryBuffer::new(f1.clone(), 100.0);
        for k in 1..=100 {
            hist.push(0.05 * k as f64, f1.clone());
        }
        // sigma = tau is the identity
        let (same, _) = apply_s2eps(&h, 2.0, 2.0, &hist, &r).unwrap();
        for (a, b) in same.values.iter().zip(h.values.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        // lambda12 = 0 reduces to s20
        let r0 = RateTable::pair_triple(1.0, 0.0, 1.0, 1.0, 0.1).unwrap();
        let (a, _) = apply_s2eps(&h, 1.0, 2.5, &hist, &r0).unwrap();
        let (b, _) = apply_s20(&h, 1.5, &r0);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-13);
        }
        // constant history: factor e^{-l12 c eps (tau - sigma)}
        let (c, _) = apply_s2eps(&h, 1.0, 2.5, &hist, &r).unwrap();
        let m1 = f1.mass();
        let factor = (-r.l12() * m1 * r.epsilon * 1.5).exp();
        for (x, y) in c.values.iter().zip(b.values.iter()) {
            assert_relative_eq!(*x, factor * y, max_relative = 1e-12);
        }
        // ordering violation is rejected
        assert!(apply_s2eps(&h, 3.0, 2.0, &hist, &r).is_err());
    }

    #[test]
    fn s3_identity_mass_bound_and_symmetry() {
        let g = VelocityGrid::new(-3.0, 3.0, 16).unwrap();
        let mut h = Density3::from_fn(g, |a, b, c| (-(a * a + b * b + c * c)).exp());
        h.symmetrize();
        let r = rates(1.0, 1.3);
        let (id, leak0) = apply_s3(&h, 0.0, &r);
        for (a, b) in id.values.iter().zip(h.values.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
        assert!(leak0.abs() < 1e-12);

        let sigma = 0.6;
        let (out, _) = apply_s3(&h, sigma, &r);
        assert!(out.mass() <= (-r.m12() * sigma).exp() * h.mass() * (1.0 + 3e-2));
        // symmetric input stays symmetric
        let n = g.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = out.at(i, j, k);
                    assert_relative_eq!(v, out.at(j, i, k), epsilon = 1e-12);
                    assert_relative_eq!(v, out.at(k, j, i), epsilon = 1e-12);
                }
            }
        }
    }
}

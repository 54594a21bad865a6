//! Collision kinematics shared by every solver.
//!
//! A discussion group of size `k` relaxes toward its average opinion under
//! the field `U_k`, whose exact flow is the contraction
//! `v_i ↦ v̄ + e^{-σ} (v_i - v̄)`. Running the flow backwards (negative
//! duration) reconstructs pre-collisional states; the Jacobian of the
//! backward map is what weights gain-term quadratures.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, Density3};

/// Alignment field `(U_k)_i = mean(v) - v_i`; `U_1 = 0`.
///
/// Components always sum to zero, so the group mean is invariant under the
/// induced flow.
pub fn interaction_field(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    assert!(k >= 1, "interaction_field needs at least one component");
    if k == 1 {
        return vec![0.0];
    }
    let mean = v.iter().sum::<f64>() / k as f64;
    v.iter().map(|&vi| mean - vi).collect()
}

/// Exact alignment flow for duration `sigma` (signed).
///
/// `phi_map(sigma, v)_i = v̄ + e^{-sigma} (v_i - v̄)`. Positive `sigma`
/// contracts toward the mean (forward drift); negative `sigma` expands and
/// reproduces the two- and three-particle pre-collision rules. The map is
/// inverted by flipping the sign of `sigma` and composes additively:
/// `phi(s1, phi(s2, v)) = phi(s1+s2, v)`.
pub fn phi_map(sigma: f64, v: &[f64]) -> Vec<f64> {
    let k = v.len();
    assert!(k >= 2, "phi_map needs a group of size >= 2");
    let mean = v.iter().sum::<f64>() / k as f64;
    let c = (-sigma).exp();
    v.iter().map(|&vi| mean + c * (vi - mean)).collect()
}

/// In-place variant of [`phi_map`] for hot loops.
pub fn phi_map_inplace(sigma: f64, v: &mut [f64]) {
    let k = v.len();
    debug_assert!(k >= 2);
    let mean = v.iter().sum::<f64>() / k as f64;
    let c = (-sigma).exp();
    for vi in v {
        *vi = mean + c * (*vi - mean);
    }
}

/// Jacobian determinant of `phi_map(sigma, ·)` on a group of size `k`.
///
/// The flow is linear with eigenvalue 1 along the mean direction and
/// `e^{-sigma}` on the (k-1)-dimensional complement, so the determinant is
/// `e^{-(k-1) sigma}`; evaluated at a backward duration `-σ` this is the
/// `e^σ` (pairs) and `e^{2σ}` (triples) factor of the gain quadratures.
pub fn phi_jacobian_det(k: usize, sigma: f64) -> f64 {
    assert!(k >= 2, "phi_jacobian_det needs k >= 2");
    (-((k - 1) as f64) * sigma).exp()
}

/// Exponential collision-duration law `b(σ) = (μ11/2) e^{-σ μ11/2}`.
#[derive(Debug, Clone, Copy)]
pub struct DurationWeight {
    pub mu11: f64,
}

impl DurationWeight {
    pub fn new(mu11: f64) -> Result<Self> {
        if mu11 <= 0.0 {
            return Err(Error::Config(format!(
                "duration law requires mu11 > 0, got {mu11}"
            )));
        }
        Ok(Self { mu11 })
    }

    #[inline]
    pub fn density(&self, sigma: f64) -> Result<f64> {
        duration_density(self.mu11, sigma)
    }
}

/// Collision-duration density `b(σ)`; errors for negative `σ`.
pub fn duration_density(mu11: f64, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!(
            "duration density undefined for sigma = {sigma} < 0"
        )));
    }
    Ok(0.5 * mu11 * (-0.5 * sigma * mu11).exp())
}

/// Symmetric tensor product `f_1 ⊙ f_1` (a two-particle density).
///
/// Coincides with the plain tensor product when both factors are the same
/// one-particle density; in general it is the symmetrized product.
pub fn sym_tensor_11(fa: &Density1, fb: &Density1) -> Result<Density2> {
    if fa.grid != fb.grid {
        return Err(Error::Config(
            "sym_tensor_11: factors live on different grids".into(),
        ));
    }
    let n = fa.grid.n;
    let mut out = Density2::zeros(fa.grid);
    for i in 0..n {
        for j in 0..n {
            out.values[i * n + j] = 0.5 * (fa.values[i] * fb.values[j] + fa.values[j] * fb.values[i]);
        }
    }
    Ok(out)
}

/// Symmetric tensor product `f_1 ⊙ f_2` (a three-particle density):
/// `(1/3)[f1(v1) f2(v2,v3) + f1(v2) f2(v1,v3) + f1(v3) f2(v1,v2)]`.
///
/// The result is permutation symmetric provided `f2` is, and its mass is the
/// product of the factor masses.
pub fn sym_tensor_12(f1: &Density1, f2: &Density2) -> Result<Density3> {
    if f1.grid != f2.grid {
        return Err(Error::Config(
            "sym_tensor_12: factors live on different grids".into(),
        ));
    }
    let n = f1.grid.n;
    let mut out = Density3::zeros(f1.grid);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.values[(i * n + j) * n + k] = (f1.values[i] * f2.at(j, k)
                    + f1.values[j] * f2.at(i, k)
                    + f1.values[k] * f2.at(i, j))
                    / 3.0;
            }
        }
    }
    Ok(out)
}

/// Pointwise `f_1 ⊙ f_2` at off-lattice coordinates, interpolating both
/// factors. Used by semigroup quadratures that never materialize the
/// three-dimensional array.
#[inline]
pub fn sym_tensor_12_at(f1: &Density1, f2: &Density2, v1: f64, v2: f64, v3: f64) -> f64 {
    (f1.interp(v1) * f2.interp(v2, v3)
        + f1.interp(v2) * f2.interp(v1, v3)
        + f1.interp(v3) * f2.interp(v1, v2))
        / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn field_is_zero_for_singletons() {
        assert_eq!(interaction_field(&[3.7]), vec![0.0]);
    }

    #[test]
    fn field_hand_values() {
        assert_eq!(interaction_field(&[1.0, -1.0]), vec![-1.0, 1.0]);
        assert_eq!(interaction_field(&[1.0, 0.0, -1.0]), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn field_components_sum_to_zero() {
        let u = interaction_field(&[0.3, -1.2, 4.5, 0.9]);
        assert_relative_eq!(u.iter().sum::<f64>(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn phi_reproduces_pair_precollision_rule() {
        // e^sigma = 2 backward map on (1, -1)
        let out = phi_map(-(2.0_f64.ln()), &[1.0, -1.0]);
        assert_relative_eq!(out[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(out[1], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn phi_reproduces_triple_precollision_rule() {
        let s = 2.0_f64.ln();
        let out = phi_map(-s, &[1.0, 0.0, -1.0]);
        assert_relative_eq!(out[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(out[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(out[2], -2.0, epsilon = 1e-14);
        // direct check against the explicit 3-particle coefficients
        let e = 2.0;
        let direct = (1.0 + 2.0 * e) / 3.0 * 1.0 + (1.0 - e) / 3.0 * 0.0 + (1.0 - e) / 3.0 * (-1.0);
        assert_relative_eq!(out[0], direct, epsilon = 1e-14);
    }

    #[test]
    fn aligned_states_are_fixed_points() {
        let v = vec![0.7; 5];
        let out = phi_map(1.3, &v);
        for x in out {
            assert_relative_eq!(x, 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobian_hand_values() {
        assert_relative_eq!(phi_jacobian_det(2, 0.0), 1.0);
        let s = 0.8;
        assert_relative_eq!(phi_jacobian_det(2, -s), s.exp(), epsilon = 1e-14);
        assert_relative_eq!(phi_jacobian_det(3, -(2.0_f64.ln())), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // determinant of the numerical Jacobian of phi_map for k in {2,3}
        for &k in &[2usize, 3] {
            for &sigma in &[-1.0, -0.5, 0.5, 1.0] {
                let v0: Vec<f64> = (0..k).map(|i| 0.3 + 0.7 * i as f64).collect();
                let eps = 1e-6;
                let mut jac = vec![vec![0.0; k]; k];
                for j in 0..k {
                    let mut vp = v0.clone();
                    let mut vm = v0.clone();
                    vp[j] += eps;
                    vm[j] -= eps;
                    let fp = phi_map(sigma, &vp);
                    let fm = phi_map(sigma, &vm);
                    for i in 0..k {
                        jac[i][j] = (fp[i] - fm[i]) / (2.0 * eps);
                    }
                }
                let det = match k {
                    2 => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
                    3 => {
                        jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
                    }
                    _ => unreachable!(),
                };
                let exact = phi_jacobian_det(k, sigma);
                assert_relative_eq!(det, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn duration_density_values_and_normalization() {
        assert_relative_eq!(duration_density(2.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(duration_density(1.0, 0.0).unwrap(), 0.5);
        assert!(duration_density(1.0, -0.1).is_err());
        // composite Simpson over a generous range; the law is a normalized
        // exponential
        let mu = 1.7;
        let n = 40_000; // even
        let smax = 60.0 / mu;
        let dsig = smax / n as f64;
        let mut total =
            duration_density(mu, 0.0).unwrap() + duration_density(mu, smax).unwrap();
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            total += w * duration_density(mu, i as f64 * dsig).unwrap();
        }
        total *= dsig / 3.0;
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sym_tensor_11_of_equal_factors_is_tensor_product() {
        let g = VelocityGrid::new(-1.0, 1.0, 9).unwrap();
        let f = Density1::from_fn(g, |v| (1.0 - v * v).max(0.0));
        let t = sym_tensor_11(&f, &f).unwrap();
        for i in 0..g.n {
            for j in 0..g.n {
                assert_relative_eq!(t.at(i, j), f.values[i] * f.values[j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sym_tensor_masses_multiply() {
        let g = VelocityGrid::new(-2.0, 2.0, 11).unwrap();
        let f1 = Density1::from_fn(g, |v| (-v * v).exp());
        let f2 = Density2::from_fn(g, |a, b| (-(a * a + b * b) / 2.0).exp());
        let t = sym_tensor_12(&f1, &f2).unwrap();
        assert_relative_eq!(t.mass(), f1.mass() * f2.mass(), max_relative = 1e-12);
    }

    #[test]
    fn sym_tensor_12_delta_combination() {
        // point masses: f1 at cell a, f2 at (b,b); the combination puts
        // mass 1/3 at each coordinate slot of the singleton
        let g = VelocityGrid::new(0.0, 1.0, 8).unwrap();
        let h = g.h();
        let (a, b) = (2usize, 5usize);
        let mut f1 = Density1::zeros(g);
        f1.values[a] = 1.0 / h;
        let mut f2 = Density2::zeros(g);
        *f2.at_mut(b, b) = 1.0 / (h * h);
        let t = sym_tensor_12(&f1, &f2).unwrap();
        let cell_mass = |i: usize, j: usize, k: usize| t.at(i, j, k) * h * h * h;
        assert_relative_eq!(cell_mass(a, b, b), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(cell_mass(b, a, b), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(cell_mass(b, b, a), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.mass(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn phi_preserves_group_mean(
            v in proptest::collection::vec(-10.0f64..10.0, 2..6),
            sigma in -2.0f64..2.0,
        ) {
            let before = v.iter().sum::<f64>() / v.len() as f64;
            let out = phi_map(sigma, &v);
            let after = out.iter().sum::<f64>() / out.len() as f64;
            let scale = before.abs().max(1.0);
            prop_assert!((after - before).abs() <= 1e-12 * scale);
        }

        #[test]
        fn phi_flow_property(
            v in proptest::collection::vec(-10.0f64..10.0, 2..6),
            s1 in -1.5f64..1.5,
            s2 in -1.5f64..1.5,
        ) {
            let composed = phi_map(s1, &phi_map(s2, &v));
            let direct = phi_map(s1 + s2, &v);
            for (a, b) in composed.iter().zip(direct.iter()) {
                let scale = b.abs().max(1.0);
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn phi_inverts_by_sign_flip(
            v in proptest::collection::vec(-10.0f64..10.0, 2..6),
            sigma in -2.0f64..2.0,
        ) {
            let back = phi_map(-sigma, &phi_map(sigma, &v));
            for (a, b) in back.iter().zip(v.iter()) {
                let scale = b.abs().max(1.0);
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn sym_tensor_12_output_is_symmetric(seed in 0u64..1000) {
            let g = VelocityGrid::new(-1.0, 1.0, 6).unwrap();
            // arbitrary smooth f1 and symmetric f2
            let f1 = Density1::from_fn(g, |v| ((seed % 7) as f64 + 1.0) * (-v * v).exp());
            let mut f2 = Density2::from_fn(g, |a, b| (a * b).cos() + 0.1 * (seed % 3) as f64);
            f2.symmetrize();
            let t = sym_tensor_12(&f1, &f2).unwrap();
            let n = g.n;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!((t.at(i, j, k) - t.at(j, i, k)).abs() < 1e-14);
                        prop_assert!((t.at(i, j, k) - t.at(k, j, i)).abs() < 1e-14);
                    }
                }
            }
        }
    }
}

//! Model C: the instantaneous-limit binary collision equation.
//!
//! `∂t f1 = Q(f1)` with gain given by the duration-averaged pre-collisional
//! product and loss `λ11 M1 f1`; the quasi-stationary pair density `f2^0`
//! is recovered from `f1` by the pair-semigroup quadrature.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, VelocityGrid};
use crate::kinetic::pair_gain::{gain_marginal, reconstruct_pair, GainSlice};
use crate::kinetic::quadrature::SemigroupQuadrature;
use crate::kinetic::SolverDiagnostics;
use crate::rates::RateTable;

fn limit_slices(f1: &Density1, rates: &RateTable, quad: &SemigroupQuadrature) -> Vec<GainSlice> {
    // lambda11/2 prefactor of the quasi-stationary pair density
    quad.nodes
        .iter()
        .zip(quad.weights.iter())
        .map(|(&sigma, &w)| GainSlice {
            sigma,
            prefactor: 0.5 * rates.l11() * w,
            f: f1.clone(),
        })
        .collect()
}

/// Quasi-stationary pair density `f2^0 = (λ11/2) ∫_0^∞ S_{2,0}(σ)(f1 ⊗ f1) dσ`,
/// cell-averaged in the difference direction.
pub fn f2_limit(f1: &Density1, rates: &RateTable, quad: &SemigroupQuadrature) -> Density2 {
    reconstruct_pair(&limit_slices(f1, rates, quad), rates.m11(), f1.grid)
}

/// Instantaneous binary collision operator
/// `Q(f1) = λ11 ∫∫ b(σ) [e^σ (f1 ⊗ f1)(Φ^{-σ}) - f1 ⊗ f1] dσ dv2`.
///
/// Mass and first moment of `Q` vanish up to the quadrature tail.
pub fn q_limit(f1: &Density1, rates: &RateTable, quad: &SemigroupQuadrature) -> Density1 {
    // gain: b(σ) e^σ = (μ11/2) e^{(1-μ11/2)σ}, folded into the engine
    let slices: Vec<GainSlice> = quad
        .nodes
        .iter()
        .zip(quad.weights.iter())
        .map(|(&sigma, &w)| GainSlice {
            sigma,
            prefactor: rates.l11() * 0.5 * rates.m11() * w,
            f: f1.clone(),
        })
        .collect();
    let (gain, _) = gain_marginal(&slices, rates.m11(), f1.grid);
    let m1 = f1.mass();
    let mut out = gain;
    for (q, &f) in out.values.iter_mut().zip(f1.values.iter()) {
        *q -= rates.l11() * m1 * f;
    }
    out
}

/// Time integrator for the limit model (Heun steps with negativity
/// clipping).
#[derive(Debug, Clone)]
pub struct LimitSolver {
    pub f1: Density1,
    pub t: f64,
    pub rates: RateTable,
    pub quad: SemigroupQuadrature,
    pub diagnostics: SolverDiagnostics,
}

impl LimitSolver {
    pub fn new(f1: Density1, rates: RateTable, tail_tol: f64, n_sigma: usize) -> Result<Self> {
        if rates.m11() <= 0.0 {
            return Err(Error::Config(
                "limit model requires mu11 > 0 (collision durations must end)".into(),
            ));
        }
        let quad = SemigroupQuadrature::for_decay(0.5 * rates.m11(), tail_tol, n_sigma)?;
        Ok(Self {
            f1,
            t: 0.0,
            rates,
            quad,
            diagnostics: SolverDiagnostics::default(),
        })
    }

    pub fn grid(&self) -> VelocityGrid {
        self.f1.grid
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let k1 = q_limit(&self.f1, &self.rates, &self.quad);
        let mut pred = self.f1.clone();
        for (p, &k) in pred.values.iter_mut().zip(k1.values.iter()) {
            *p += dt * k;
        }
        self.diagnostics.clipped_mass += pred.clip_negative();
        let k2 = q_limit(&pred, &self.rates, &self.quad);
        for ((f, &a), &b) in self
            .f1
            .values
            .iter_mut()
            .zip(k1.values.iter())
            .zip(k2.values.iter())
        {
            *f += 0.5 * dt * (a + b);
        }
        self.diagnostics.clipped_mass += self.f1.clip_negative();
        if self.f1.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "limit solver produced non-finite values at t = {}",
                self.t
            )));
        }
        self.t += dt;
        Ok(())
    }

    /// Quasi-stationary pair density at the current state.
    pub fn f2(&self) -> Density2 {
        f2_limit(&self.f1, &self.rates, &self.quad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> VelocityGrid {
        VelocityGrid::new(-4.0, 4.0, 96).unwrap()
    }

    fn gaussian(g: VelocityGrid, mean: f64, sd: f64, mass: f64) -> Density1 {
        let norm = mass / (sd * (2.0 * std::f64::consts::PI).sqrt());
        Density1::from_fn(g, |v| {
            let z = (v - mean) / sd;
            norm * (-0.5 * z * z).exp()
        })
    }

    fn rates() -> RateTable {
        RateTable::pair_triple(1.0, 0.0, 1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn f2_limit_zero_and_mass() {
        let g = grid();
        let r = rates();
        let quad = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let zero = f2_limit(&Density1::zeros(g), &r, &quad);
        assert!(zero.values.iter().all(|&v| v == 0.0));

        let f1 = gaussian(g, 0.3, 0.6, 1.2);
        let f2 = f2_limit(&f1, &r, &quad);
        let expected = r.l11() * f1.mass() * f1.mass() / r.m11();
        assert_relative_eq!(f2.mass(), expected, max_relative = 5e-3);
    }

    #[test]
    fn f2_limit_concentrates_for_aligned_data() {
        // delta-like but grid-resolved data concentrates at (v0, v0) with
        // the quasi-stationary mass
        let g = VelocityGrid::new(-2.0, 2.0, 96).unwrap();
        let h = g.h();
        let v0 = 0.5;
        let f1 = gaussian(g, v0, 3.0 * h, 2.0);
        let r = rates();
        let quad = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let f2 = f2_limit(&f1, &r, &quad);
        let expected = r.l11() * 4.0 / r.m11();
        assert_relative_eq!(f2.mass(), expected, max_relative = 3e-2);
        // concentrated near (v0, v0)
        let mut near = 0.0;
        for i in 0..g.n {
            for j in 0..g.n {
                if (g.center(i) - v0).abs() < 16.0 * h && (g.center(j) - v0).abs() < 16.0 * h {
                    near += f2.at(i, j) * h * h;
                }
            }
        }
        assert!(near > 0.999 * f2.mass(), "near {near} vs mass {}", f2.mass());
    }

    #[test]
    fn q_limit_conserves_mass_and_momentum() {
        let g = grid();
        let r = rates();
        let quad = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let f1 = gaussian(g, 0.25, 0.55, 1.0);
        let q = q_limit(&f1, &r, &quad);
        let m1 = f1.mass();
        let scale = r.l11() * m1 * m1;
        assert!(
            q.mass().abs() <= 1e-6 * scale,
            "mass moment {} vs scale {scale}",
            q.mass()
        );
        assert!(
            q.moment1().abs() <= 1e-6 * scale,
            "first moment {} vs scale {scale}",
            q.moment1()
        );
    }

    #[test]
    fn q_limit_pulls_separated_bumps_inward() {
        let g = grid();
        let r = rates();
        let quad = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let f1 = {
            let a = gaussian(g, -1.5, 0.3, 0.5);
            let b = gaussian(g, 1.5, 0.3, 0.5);
            let mut f = a;
            for (x, y) in f.values.iter_mut().zip(b.values.iter()) {
                *x += y;
            }
            f
        };
        let q = q_limit(&f1, &r, &quad);
        // d/dt ∫ |v| f = ∫ |v| Q < 0 for symmetric separated bumps
        let h = g.h();
        let d_abs: f64 = q
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| g.center(i).abs() * x)
            .sum::<f64>()
            * h;
        assert!(d_abs < 0.0, "absolute first moment should shrink: {d_abs}");
    }

    #[test]
    fn aligned_state_is_stationary_at_grid_scale() {
        // delta-like data stays delta-like under time stepping
        let g = VelocityGrid::new(-2.0, 2.0, 64).unwrap();
        let h = g.h();
        let mut f1 = Density1::zeros(g);
        let cell = 40;
        f1.values[cell] = 1.0 / h;
        let mut solver = LimitSolver::new(f1, rates(), 1e-8, 32).unwrap();
        for _ in 0..50 {
            solver.step(0.01).unwrap();
        }
        assert_relative_eq!(solver.f1.mass(), 1.0, max_relative = 1e-6);
        // variance stays below one cell width
        let mean = solver.f1.moment1() / solver.f1.mass();
        let var = solver.f1.moment2() / solver.f1.mass() - mean * mean;
        assert!(var <= h * h, "variance {var} exceeds h^2 {}", h * h);
        assert_relative_eq!(mean, g.center(cell), epsilon = h);
    }

    #[test]
    fn gaussian_mass_conserved_under_stepping() {
        let g = grid();
        let f1 = gaussian(g, 0.2, 0.5, 1.0);
        let mut solver = LimitSolver::new(f1, rates(), 1e-8, 32).unwrap();
        let m0 = solver.f1.mass();
        let i0 = solver.f1.moment1();
        for _ in 0..100 {
            solver.step(5e-3).unwrap();
        }
        assert_relative_eq!(solver.f1.mass(), m0, max_relative = 1e-6);
        assert_relative_eq!(solver.f1.moment1(), i0, max_relative = 1e-5);
        // variance decays under alignment
        let var =
            |f: &Density1| f.moment2() / f.mass() - (f.moment1() / f.mass()).powi(2);
        assert!(var(&solver.f1) < 0.5 * 0.5);
    }
}

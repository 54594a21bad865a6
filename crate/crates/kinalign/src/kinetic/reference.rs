//! Model A: the truncated three-species system with a dynamic triple
//! density, advanced by method of lines.
//!
//! The drift `∇·(U_k f_k)` is discretized by conservative first-order
//! upwind fluxes. The alignment field always points toward the group mean,
//! so no mass crosses the domain boundary and the flux form conserves each
//! species' mass exactly; the price is `O(h)` numerical diffusion, which is
//! why this solver serves as a structural reference rather than for the
//! `ε`-order measurements.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, Density3, VelocityGrid};
use crate::kinematics::{sym_tensor_11, sym_tensor_12};
use crate::kinetic::SolverDiagnostics;
use crate::rates::RateTable;

/// State of the truncated three-species solver.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    pub f1: Density1,
    pub f2: Density2,
    pub f3: Density3,
    pub t: f64,
}

/// Conservative upwind divergence of `(U_2 f_2)` on the pair grid.
fn upwind_div2(f2: &Density2) -> Density2 {
    let grid = f2.grid;
    let n = grid.n;
    let h = grid.h();
    let mut div = Density2::zeros(grid);
    // dimension 1: u = (v2 - v1)/2 at the face (i+1/2, j)
    for j in 0..n {
        let vj = grid.center(j);
        let mut flux = vec![0.0; n + 1]; // faces 0..=n, boundary zero
        for face in 1..n {
            let v_face = grid.v_min + face as f64 * h;
            let u = 0.5 * (vj - v_face);
            let up = if u > 0.0 {
                f2.at(face - 1, j)
            } else {
                f2.at(face, j)
            };
            flux[face] = u * up;
        }
        for i in 0..n {
            *div.at_mut(i, j) += (flux[i + 1] - flux[i]) / h;
        }
    }
    // dimension 2 by symmetry of the stencil
    for i in 0..n {
        let vi = grid.center(i);
        let mut flux = vec![0.0; n + 1];
        for face in 1..n {
            let v_face = grid.v_min + face as f64 * h;
            let u = 0.5 * (vi - v_face);
            let up = if u > 0.0 {
                f2.at(i, face - 1)
            } else {
                f2.at(i, face)
            };
            flux[face] = u * up;
        }
        for j in 0..n {
            *div.at_mut(i, j) += (flux[j + 1] - flux[j]) / h;
        }
    }
    div
}

/// Conservative upwind divergence of `(U_3 f_3)` on the triple grid.
fn upwind_div3(f3: &Density3) -> Density3 {
    let grid = f3.grid;
    let n = grid.n;
    let h = grid.h();
    let mut div = Density3::zeros(grid);
    let centers: Vec<f64> = grid.centers();
    let at = |i: usize, j: usize, k: usize| f3.at(i, j, k);
    // dimension d: u_d = mean(v) - v_d evaluated at the face
    for j in 0..n {
        for k in 0..n {
            let sum_others = centers[j] + centers[k];
            let mut flux = vec![0.0; n + 1];
            for face in 1..n {
                let v_face = grid.v_min + face as f64 * h;
                let u = (sum_others + v_face) / 3.0 - v_face;
                let up = if u > 0.0 {
                    at(face - 1, j, k)
                } else {
                    at(face, j, k)
                };
                flux[face] = u * up;
            }
            for i in 0..n {
                div.values[(i * n + j) * n + k] += (flux[i + 1] - flux[i]) / h;
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            let sum_others = centers[i] + centers[k];
            let mut flux = vec![0.0; n + 1];
            for face in 1..n {
                let v_face = grid.v_min + face as f64 * h;
                let u = (sum_others + v_face) / 3.0 - v_face;
                let up = if u > 0.0 {
                    at(i, face - 1, k)
                } else {
                    at(i, face, k)
                };
                flux[face] = u * up;
            }
            for j in 0..n {
                div.values[(i * n + j) * n + k] += (flux[j + 1] - flux[j]) / h;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let sum_others = centers[i] + centers[j];
            let mut flux = vec![0.0; n + 1];
            for face in 1..n {
                let v_face = grid.v_min + face as f64 * h;
                let u = (sum_others + v_face) / 3.0 - v_face;
                let up = if u > 0.0 {
                    at(i, j, face - 1)
                } else {
                    at(i, j, face)
                };
                flux[face] = u * up;
            }
            for k in 0..n {
                div.values[(i * n + j) * n + k] += (flux[k + 1] - flux[k]) / h;
            }
        }
    }
    div
}

/// Full truncated right-hand side `(df1, df2, df3)` with the fast equations
/// divided by `ε` and the drift discretized by conservative upwind.
pub fn rhs_reference(
    s: &ReferenceState,
    rates: &RateTable,
) -> Result<(Density1, Density2, Density3)> {
    if rates.epsilon <= 0.0 {
        return Err(Error::Config("reference model requires epsilon > 0".into()));
    }
    let eps = rates.epsilon;
    let m1 = s.f1.mass();
    let m2 = s.f2.mass();
    let grid = s.f1.grid;
    let n = grid.n;

    let marg3_12 = s.f3.marginal_v3(); // ∫ f3 dv3 on the pair grid
    let marg3_1 = marg3_12.marginal(); // ∫∫ f3 d(v2,v3)
    let marg2 = s.f2.marginal();

    let mut df1 = Density1::zeros(grid);
    for i in 0..n {
        df1.values[i] = rates.m11() * marg2.values[i] + eps * rates.m12() * marg3_1.values[i]
            - rates.l11() * m1 * s.f1.values[i]
            - eps * rates.l12() * m2 * s.f1.values[i];
    }

    let tensor11 = sym_tensor_11(&s.f1, &s.f1)?;
    let div2 = upwind_div2(&s.f2);
    let mut df2 = Density2::zeros(grid);
    for idx in 0..n * n {
        df2.values[idx] = (-div2.values[idx] + 0.5 * rates.l11() * tensor11.values[idx]
            - eps * rates.l12() * m1 * s.f2.values[idx]
            + eps * rates.m12() * marg3_12.values[idx]
            - 0.5 * rates.m11() * s.f2.values[idx])
            / eps;
    }
    df2.symmetrize();

    let tensor12 = sym_tensor_12(&s.f1, &s.f2)?;
    let div3 = upwind_div3(&s.f3);
    let mut df3 = Density3::zeros(grid);
    for idx in 0..n * n * n {
        df3.values[idx] = (-div3.values[idx] + rates.l12() * tensor12.values[idx]
            - rates.m12() * s.f3.values[idx])
            / eps;
    }
    df3.symmetrize();
    Ok((df1, df2, df3))
}

/// Reference solver with Heun stepping, CFL guard and clip accounting.
pub struct ReferenceSolver {
    pub state: ReferenceState,
    pub rates: RateTable,
    pub diagnostics: SolverDiagnostics,
    pub clip_tol: f64,
}

impl ReferenceSolver {
    pub fn new(state: ReferenceState, rates: RateTable, clip_tol: f64) -> Self {
        Self {
            state,
            rates,
            diagnostics: SolverDiagnostics::default(),
            clip_tol,
        }
    }

    pub fn grid(&self) -> VelocityGrid {
        self.state.f1.grid
    }

    /// Largest drift speed on the grid (for the CFL check): deviations from
    /// the mean are at most the domain width, so `|u| <= (v_max - v_min)`.
    fn max_speed(&self) -> f64 {
        let g = self.grid();
        g.v_max - g.v_min
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let eps = self.rates.epsilon;
        let g = self.grid();
        let cfl = dt / eps * self.max_speed() / g.h();
        if cfl > 1.0 {
            return Err(Error::Numerical(format!(
                "CFL violation: dt max|U|/(eps h) = {cfl:.3} > 1 at t = {}",
                self.state.t
            )));
        }
        let total_mass = self.state.f1.mass()
            + 2.0 * eps * self.state.f2.mass()
            + 3.0 * eps * eps * self.state.f3.mass();

        let (k1_1, k1_2, k1_3) = rhs_reference(&self.state, &self.rates)?;
        let mut pred = self.state.clone();
        pred.t += dt;
        add_scaled1(&mut pred.f1, &k1_1, dt);
        add_scaled2(&mut pred.f2, &k1_2, dt);
        add_scaled3(&mut pred.f3, &k1_3, dt);
        let mut clipped = pred.f1.clip_negative()
            + 2.0 * eps * pred.f2.clip_negative()
            + 3.0 * eps * eps * pred.f3.clip_negative();
        let (k2_1, k2_2, k2_3) = rhs_reference(&pred, &self.rates)?;
        add_scaled1(&mut self.state.f1, &k1_1, 0.5 * dt);
        add_scaled1(&mut self.state.f1, &k2_1, 0.5 * dt);
        add_scaled2(&mut self.state.f2, &k1_2, 0.5 * dt);
        add_scaled2(&mut self.state.f2, &k2_2, 0.5 * dt);
        add_scaled3(&mut self.state.f3, &k1_3, 0.5 * dt);
        add_scaled3(&mut self.state.f3, &k2_3, 0.5 * dt);
        clipped += self.state.f1.clip_negative()
            + 2.0 * eps * self.state.f2.clip_negative()
            + 3.0 * eps * eps * self.state.f3.clip_negative();
        self.diagnostics.clipped_mass += clipped;
        self.state.f2.symmetrize();
        self.state.f3.symmetrize();
        self.state.t += dt;
        if clipped > self.clip_tol * total_mass.max(1e-300) {
            return Err(Error::Numerical(format!(
                "reference step clipped {clipped:.3e} mass at t = {}",
                self.state.t
            )));
        }
        Ok(())
    }
}

fn add_scaled1(a: &mut Density1, b: &Density1, s: f64) {
    for (x, &y) in a.values.iter_mut().zip(b.values.iter()) {
        *x += s * y;
    }
}

fn add_scaled2(a: &mut Density2, b: &Density2, s: f64) {
    for (x, &y) in a.values.iter_mut().zip(b.values.iter()) {
        *x += s * y;
    }
}

fn add_scaled3(a: &mut Density3, b: &Density3, s: f64) {
    for (x, &y) in a.values.iter_mut().zip(b.values.iter()) {
        *x += s * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::quadrature::SemigroupQuadrature;
    use crate::kinetic::semigroup::apply_s3;
    use approx::assert_relative_eq;

    fn gaussian1(g: VelocityGrid, sd: f64, mass: f64) -> Density1 {
        let norm = mass / (sd * (2.0 * std::f64::consts::PI).sqrt());
        Density1::from_fn(g, |v| {
            let z = v / sd;
            norm * (-0.5 * z * z).exp()
        })
    }

    fn setup(n: usize, eps: f64) -> (ReferenceState, RateTable) {
        let g = VelocityGrid::new(-3.0, 3.0, n).unwrap();
        let f1 = gaussian1(g, 0.6, 1.0);
        let mut f2 = Density2::from_fn(g, |a, b| 0.3 * (-(a * a + b * b)).exp());
        f2.symmetrize();
        let f3 = Density3::zeros(g);
        let rates = RateTable::pair_triple(1.0, 0.5, 1.0, 1.0, eps).unwrap();
        (
            ReferenceState {
                f1,
                f2,
                f3,
                t: 0.0,
            },
            rates,
        )
    }

    #[test]
    fn upwind_drift_conserves_mass_exactly() {
        let (s, _) = setup(16, 0.1);
        let div2 = upwind_div2(&s.f2);
        assert!(div2.mass().abs() < 1e-13, "pair drift flux {}", div2.mass());
        let f3 = Density3::from_fn(s.f1.grid, |a, b, c| (-(a * a + b * b + c * c)).exp());
        let div3 = upwind_div3(&f3);
        assert!(
            div3.mass().abs() < 1e-13,
            "triple drift flux {}",
            div3.mass()
        );
    }

    #[test]
    fn rates_zero_pure_drift_contracts_variance() {
        let g = VelocityGrid::new(-3.0, 3.0, 24).unwrap();
        let mut f2 = Density2::from_fn(g, |a, b| (-(a * a + b * b)).exp());
        f2.symmetrize();
        let state = ReferenceState {
            f1: gaussian1(g, 0.5, 1.0),
            f2,
            f3: Density3::zeros(g),
            t: 0.0,
        };
        let rates = RateTable::pair_triple(0.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let mut solver = ReferenceSolver::new(state, rates, 1e-3);
        let m1_0 = solver.state.f1.mass();
        let m2_0 = solver.state.f2.mass();
        let vt_0 = solver.state.f2.pair_dispersion();
        for _ in 0..40 {
            solver.step(1e-2).unwrap();
        }
        assert_relative_eq!(solver.state.f1.mass(), m1_0, max_relative = 1e-12);
        assert_relative_eq!(solver.state.f2.mass(), m2_0, max_relative = 1e-12);
        assert!(
            solver.state.f2.pair_dispersion() < vt_0,
            "pair dispersion did not contract"
        );
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let (s, rates) = setup(16, 0.05);
        let mut solver = ReferenceSolver::new(s, rates, 1e-3);
        // dt/eps * 6 / h > 1 for dt = 0.05
        assert!(solver.step(0.05).is_err());
    }

    #[test]
    fn quasi_stationary_f3_reduces_the_residual() {
        // initializing f3 at (a stable truncation of) quasi-stationarity
        // must shrink the fast residual compared to starting empty
        let (mut s, rates) = setup(20, 0.1);
        // moderate duration cap keeps the pointwise triple pullback well
        // conditioned; the dropped tail is part of the measured residual
        let quad3 = SemigroupQuadrature::on_interval(2.5, 1e-6, 24);
        let tensor = sym_tensor_12(&s.f1, &s.f2).unwrap();
        let mut f3 = Density3::zeros(s.f1.grid);
        for (&sig, &w) in quad3.nodes.iter().zip(quad3.weights.iter()) {
            let (s3, _) = apply_s3(&tensor, sig, &rates);
            for (a, &b) in f3.values.iter_mut().zip(s3.values.iter()) {
                *a += rates.l12() * w * b;
            }
        }
        let (_, _, df3_zero) = rhs_reference(&s, &rates).unwrap();
        s.f3 = f3;
        let (_, _, df3_qs) = rhs_reference(&s, &rates).unwrap();
        let res_zero = df3_zero.l1_norm();
        let res_qs = df3_qs.l1_norm();
        assert!(
            res_qs < 0.5 * res_zero,
            "QS residual {res_qs} not below half the empty-state residual {res_zero}"
        );
    }

    #[test]
    fn channel_mass_bookkeeping() {
        // d/dt (M1 + 2 eps M2 + 3 eps^2 M3) must vanish for the reaction
        // channels (drift conserves each species separately)
        let (mut s, rates) = setup(14, 0.2);
        s.f3 = Density3::from_fn(s.f1.grid, |a, b, c| {
            0.05 * (-(a * a + b * b + c * c)).exp()
        });
        s.f3.symmetrize();
        let eps = rates.epsilon;
        let (d1, d2, d3) = rhs_reference(&s, &rates).unwrap();
        let flux = d1.mass() + 2.0 * eps * d2.mass() + 3.0 * eps * eps * d3.mass();
        let scale = s.f1.mass().max(s.f2.mass());
        assert!(
            flux.abs() < 1e-10 * scale.max(1.0),
            "total mass flux {flux}"
        );
    }

    #[test]
    fn short_run_conserves_total_mass() {
        let (s, rates) = setup(14, 0.2);
        let eps = rates.epsilon;
        let mut solver = ReferenceSolver::new(s, rates, 1e-4);
        let total = |s: &ReferenceState| {
            s.f1.mass() + 2.0 * eps * s.f2.mass() + 3.0 * eps * eps * s.f3.mass()
        };
        let m0 = total(&solver.state);
        for _ in 0..100 {
            solver.step(2e-3).unwrap();
        }
        assert_relative_eq!(total(&solver.state), m0, max_relative = 1e-8);
    }
}

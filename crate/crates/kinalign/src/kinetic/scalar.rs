//! Model D: the delayed scalar model.
//!
//! `∂t f1 = Q2(f1,f1) + ε Q3(f1,f1,f1)`: the binary operator keeps the
//! collision-duration delays (gain from `f1(t - εσ)` pulled back through
//! the pair semigroup, with the slow coagulation screening factor and the
//! `σ`-integral truncated at `t/ε`), while the ternary operator is the
//! instantaneous quasi-stationary approximation built on `f2^0`. Both
//! gain channels are positive multiples of transported densities and all
//! losses are proportional to `f1`, so the scheme preserves nonnegativity.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, VelocityGrid};
use crate::kinetic::history::HistoryBuffer;
use crate::kinetic::limit::f2_limit;
use crate::kinetic::pair_gain::{gain_marginal, gain_mass, reconstruct_pair, GainSlice};
use crate::kinetic::quadrature::SemigroupQuadrature;
use crate::kinetic::ternary::{s20_integral_field, s20_integral_marginal, w3_field};
use crate::kinetic::SolverDiagnostics;
use crate::rates::RateTable;

/// Quasi-stationary pair density of the current `f1` (alias of the limit
/// reconstruction; the zeroth-order `f2` every ternary quantity builds on).
pub fn f2_zero(f1: &Density1, rates: &RateTable, quad2: &SemigroupQuadrature) -> Density2 {
    f2_limit(f1, rates, quad2)
}

fn delayed_slices(
    history: &HistoryBuffer,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
    t: f64,
) -> Result<Vec<GainSlice>> {
    let eps = rates.epsilon;
    let quad = quad2.truncated(t / eps);
    let mut slices = Vec::with_capacity(quad.n());
    for (&sigma, &w) in quad.nodes.iter().zip(quad.weights.iter()) {
        let s_delay = (t - eps * sigma).max(0.0);
        let f = history.interp(s_delay)?;
        let screening = if rates.l12() > 0.0 {
            (-rates.l12() * history.m1_integral(s_delay, t)?).exp()
        } else {
            1.0
        };
        slices.push(GainSlice {
            sigma,
            prefactor: 0.5 * rates.l11() * w * screening,
            f,
        });
    }
    Ok(slices)
}

/// Delayed binary operator `Q2(f1,f1)` at time `t`: the gain pulls the
/// product of delayed states through the pair semigroup weighted by the
/// duration density; the loss is `λ11 M1 f1`.
pub fn q2_delayed(
    history: &HistoryBuffer,
    f1: &Density1,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
    t: f64,
) -> Result<Density1> {
    let slices = delayed_slices(history, rates, quad2, t)?;
    // b(σ) e^σ = (μ11/2) e^{(1-μ11/2)σ}: the μ11 factor promotes the pair
    // reconstruction to the fragmentation gain of the scalar equation
    let (mut gain, _) = gain_marginal(&slices, rates.m11(), f1.grid);
    for v in &mut gain.values {
        *v *= rates.m11();
    }
    let m1 = f1.mass();
    let mut out = gain;
    for (q, &f) in out.values.iter_mut().zip(f1.values.iter()) {
        *q -= rates.l11() * m1 * f;
    }
    Ok(out)
}

/// Precomputed (lagged) ternary fields of the scalar model, all built from
/// the quasi-stationary `f2^0` of a frozen `f1`.
#[derive(Debug, Clone)]
pub struct TernaryFields {
    /// unit-mass shape of the doubly-marginalized `S_3` gain
    z3_shape: Density1,
    /// unit-mass shape of `∫ f_{2,2} dv2`
    f22_shape: Density1,
    /// unit-mass pair-field version of `f_{2,2}`
    f22_field: Density2,
}

impl TernaryFields {
    pub fn build(
        f1: &Density1,
        rates: &RateTable,
        quad2: &SemigroupQuadrature,
        quad3: &SemigroupQuadrature,
    ) -> TernaryFields {
        let f20 = f2_zero(f1, rates, quad2);
        let w3 = w3_field(f1, &f20, rates, quad3);
        let z3 = w3.marginal();
        let f22m = s20_integral_marginal(&w3, rates, quad2);
        let f22f = s20_integral_field(&w3, rates, quad2);
        let normalize1 = |mut d: Density1| {
            let m = d.mass();
            if m > 0.0 {
                for v in &mut d.values {
                    *v /= m;
                }
            }
            d
        };
        let normalize2 = |mut d: Density2| {
            let m = d.mass();
            if m > 0.0 {
                for v in &mut d.values {
                    *v /= m;
                }
            }
            d
        };
        TernaryFields {
            z3_shape: normalize1(z3),
            f22_shape: normalize1(f22m),
            f22_field: normalize2(f22f),
        }
    }
}

/// Instantaneous ternary operator `Q3(f1,f1,f1)`:
/// gain = `λ12 μ12 ∫∫ (S_3 chain)` plus `μ11 ∫ f_{2,2} dv2`, loss
/// `λ12 M2^0 f1`, with the channel masses pinned to their quasi-stationary
/// values (`M2^0 = λ11 M1²/μ11`, `μ12 M3 = λ12 M1 M2^0`,
/// `μ11 M22 = 2 λ12 M1 M2^0`).
pub fn q3_ternary(f1: &Density1, rates: &RateTable, fields: &TernaryFields) -> Density1 {
    let grid = f1.grid;
    let m1 = f1.mass();
    let m20 = rates.l11() * m1 * m1 / rates.m11();
    let mut out = Density1::zeros(grid);
    let z3_mass = rates.l12() * m1 * m20; // λ12 μ12 (M1 M2^0 / μ12)
    let f22_mass = 2.0 * rates.l12() * m1 * m20; // μ11 M22
    for i in 0..grid.n {
        out.values[i] = z3_mass * fields.z3_shape.values[i]
            + f22_mass * fields.f22_shape.values[i]
            - rates.l12() * m20 * f1.values[i];
    }
    out
}

/// Pair reconstruction `f_{2,as} = f_{2,1} + ε f_{2,2}` from the history
/// and the (lagged) ternary fields; the delayed part shares the quadrature
/// of the first-order model exactly.
pub fn f2_as(
    history: &HistoryBuffer,
    f1: &Density1,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
    fields: &TernaryFields,
    t: f64,
) -> Result<Density2> {
    let slices = delayed_slices(history, rates, quad2, t)?;
    let mut out = reconstruct_pair(&slices, rates.m11(), f1.grid);
    let m1 = f1.mass();
    let m20 = rates.l11() * m1 * m1 / rates.m11();
    let f22_mass = 2.0 * rates.l12() * m1 * m20 / rates.m11();
    let eps = rates.epsilon;
    for (a, &b) in out.values.iter_mut().zip(fields.f22_field.values.iter()) {
        *a += eps * f22_mass * b;
    }
    Ok(out)
}

/// Correlated mass `2 ε M_{2,1}`: the mass held inside ongoing binary
/// collisions, which restores the scalar model's bookkeeping.
pub fn correlated_mass(
    history: &HistoryBuffer,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
    t: f64,
) -> Result<f64> {
    let slices = delayed_slices(history, rates, quad2, t)?;
    Ok(2.0 * rates.epsilon * gain_mass(&slices, rates.m11()))
}

/// Time integrator for the scalar model.
pub struct ScalarSolver {
    pub rates: RateTable,
    pub f1: Density1,
    pub t: f64,
    pub history: HistoryBuffer,
    pub diagnostics: SolverDiagnostics,
    quad2: SemigroupQuadrature,
    quad3: SemigroupQuadrature,
    ternary: Option<TernaryFields>,
    refresh_interval: f64,
    next_refresh: f64,
}

impl ScalarSolver {
    pub fn new(
        f1: Density1,
        rates: RateTable,
        tail_tol: f64,
        n_sigma: usize,
        refresh_interval: f64,
    ) -> Result<Self> {
        if rates.epsilon <= 0.0 {
            return Err(Error::Config("scalar model requires epsilon > 0".into()));
        }
        if rates.m11() <= 0.0 {
            return Err(Error::Config("scalar model requires mu11 > 0".into()));
        }
        let quad2 = SemigroupQuadrature::for_decay(0.5 * rates.m11(), tail_tol, n_sigma)?;
        let quad3 = SemigroupQuadrature::for_decay(rates.m12().max(1e-12), tail_tol, n_sigma)?;
        let span = rates.epsilon * quad2.sigma_max;
        let history = HistoryBuffer::new(f1.clone(), span);
        Ok(Self {
            rates,
            f1,
            t: 0.0,
            history,
            diagnostics: SolverDiagnostics::default(),
            quad2,
            quad3,
            ternary: None,
            refresh_interval,
            next_refresh: 0.0,
        })
    }

    pub fn grid(&self) -> VelocityGrid {
        self.f1.grid
    }

    fn ternary_active(&self) -> bool {
        self.rates.l12() > 0.0
    }

    fn rhs(&self, t: f64, f1: &Density1) -> Result<Density1> {
        let mut df = q2_delayed(&self.history, f1, &self.rates, &self.quad2, t)?;
        if let (true, Some(fields)) = (self.ternary_active(), self.ternary.as_ref()) {
            let q3 = q3_ternary(f1, &self.rates, fields);
            let eps = self.rates.epsilon;
            for (d, &q) in df.values.iter_mut().zip(q3.values.iter()) {
                *d += eps * q;
            }
        }
        Ok(df)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let t0 = self.t;
        if self.ternary_active() && (self.ternary.is_none() || t0 >= self.next_refresh) {
            self.ternary = Some(TernaryFields::build(
                &self.f1,
                &self.rates,
                &self.quad2,
                &self.quad3,
            ));
            self.next_refresh = t0 + self.refresh_interval;
        }
        let f0 = self.f1.clone();
        let k1 = self.rhs(t0, &f0)?;
        let mut pred = f0.clone();
        for (p, &k) in pred.values.iter_mut().zip(k1.values.iter()) {
            *p += dt * k;
        }
        self.diagnostics.clipped_mass += pred.clip_negative();
        self.history.push(t0 + dt, pred.clone());
        let k2 = self.rhs(t0 + dt, &pred)?;
        let mut f_new = f0;
        for ((f, &a), &b) in f_new
            .values
            .iter_mut()
            .zip(k1.values.iter())
            .zip(k2.values.iter())
        {
            *f += 0.5 * dt * (a + b);
        }
        self.diagnostics.clipped_mass += f_new.clip_negative();
        if f_new.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "scalar solver produced non-finite values at t = {t0}"
            )));
        }
        self.history.replace_last(f_new.clone());
        self.f1 = f_new;
        self.t = t0 + dt;
        Ok(())
    }

    /// Binary-born pair mass `M_{2,1}(t)` of the current history.
    pub fn m21(&self) -> Result<f64> {
        Ok(correlated_mass(&self.history, &self.rates, &self.quad2, self.t)?
            / (2.0 * self.rates.epsilon))
    }

    /// Reconstructed `f_{2,as}` at the current time.
    pub fn reconstruct_f2(&mut self) -> Result<Density2> {
        if self.ternary_active() && self.ternary.is_none() {
            self.ternary = Some(TernaryFields::build(
                &self.f1,
                &self.rates,
                &self.quad2,
                &self.quad3,
            ));
        }
        match self.ternary.as_ref() {
            Some(fields) => {
                f2_as(&self.history, &self.f1, &self.rates, &self.quad2, fields, self.t)
            }
            None => {
                let slices = delayed_slices(&self.history, &self.rates, &self.quad2, self.t)?;
                Ok(reconstruct_pair(&slices, self.rates.m11(), self.f1.grid))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian(g: VelocityGrid, mean: f64, sd: f64, mass: f64) -> Density1 {
        let norm = mass / (sd * (2.0 * std::f64::consts::PI).sqrt());
        Density1::from_fn(g, |v| {
            let z = (v - mean) / sd;
            norm * (-0.5 * z * z).exp()
        })
    }

    fn rates() -> RateTable {
        RateTable::pair_triple(1.0, 0.5, 2.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn consensus_state_has_vanishing_operators() {
        // time-constant aligned history: the combined operator's mass flux
        // reduces to the quasi-stationary defect 2 eps l12 M1 (M2^0 - M21),
        // which is O(eps^2)
        let g = VelocityGrid::new(-2.0, 2.0, 96).unwrap();
        let h = g.h();
        let r = rates();
        let quad2 = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let quad3 = SemigroupQuadrature::for_decay(r.m12(), 1e-8, 24).unwrap();
        let f1 = gaussian(g, 0.4, 3.0 * h, 1.0);
        let mut hist = HistoryBuffer::new(f1.clone(), 10.0);
        for k in 1..=50 {
            hist.push(0.1 * k as f64, f1.clone());
        }
        let t = 5.0;
        let eps = r.epsilon;
        let q2 = q2_delayed(&hist, &f1, &r, &quad2, t).unwrap();
        let m21 = correlated_mass(&hist, &r, &quad2, t).unwrap() / (2.0 * eps);
        // Q2 mass = mu11 M21 - lambda11 M1^2 (screened pairs hold less mass)
        assert_relative_eq!(
            q2.mass(),
            r.m11() * m21 - r.l11(),
            max_relative = 1e-9,
            epsilon = 1e-12
        );
        let fields = TernaryFields::build(&f1, &r, &quad2, &quad3);
        let q3 = q3_ternary(&f1, &r, &fields);
        let m20 = r.l11() / r.m11();
        assert_relative_eq!(q3.mass(), 2.0 * r.l12() * m20, max_relative = 1e-9);
        // the full right-hand side matches the O(eps^2) defect identity
        let total = q2.mass() + eps * q3.mass();
        let defect = 2.0 * eps * r.l12() * (m20 - m21);
        assert_relative_eq!(total, defect, max_relative = 1e-5, epsilon = 1e-8);
        assert!(total.abs() < 0.01, "consensus flux {total} too large");
    }

    #[test]
    fn q2_mass_flux_matches_pair_bookkeeping() {
        // ∫Q2 = μ11 M21 - λ11 M1² with M21 the delayed-gain mass
        let g = VelocityGrid::new(-4.0, 4.0, 48).unwrap();
        let r = rates();
        let quad2 = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 32).unwrap();
        let f1 = gaussian(g, 0.2, 0.5, 1.0);
        let mut hist = HistoryBuffer::new(f1.clone(), 10.0);
        for k in 1..=40 {
            hist.push(0.05 * k as f64, f1.clone());
        }
        let t = 2.0;
        let q2 = q2_delayed(&hist, &f1, &r, &quad2, t).unwrap();
        let m21 = correlated_mass(&hist, &r, &quad2, t).unwrap() / (2.0 * r.epsilon);
        let expected = r.m11() * m21 - r.l11() * f1.mass() * f1.mass();
        assert_relative_eq!(q2.mass(), expected, max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn empty_history_reconstructs_to_zero() {
        let g = VelocityGrid::new(-2.0, 2.0, 24).unwrap();
        let r = rates();
        let quad2 = SemigroupQuadrature::for_decay(0.5 * r.m11(), 1e-8, 16).unwrap();
        let quad3 = SemigroupQuadrature::for_decay(r.m12(), 1e-8, 16).unwrap();
        let zero = Density1::zeros(g);
        let mut hist = HistoryBuffer::new(zero.clone(), 10.0);
        for k in 1..=20 {
            hist.push(0.1 * k as f64, zero.clone());
        }
        let fields = TernaryFields::build(&zero, &r, &quad2, &quad3);
        let f2 = f2_as(&hist, &zero, &r, &quad2, &fields, 2.0).unwrap();
        assert!(f2.values.iter().all(|&v| v == 0.0));
        assert_eq!(correlated_mass(&hist, &r, &quad2, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn solver_preserves_nonnegativity_and_runs() {
        let g = VelocityGrid::new(-4.0, 4.0, 48).unwrap();
        let f1 = gaussian(g, 0.25, 0.5, 1.0);
        let mut solver = ScalarSolver::new(f1, rates(), 1e-8, 24, 0.05).unwrap();
        for _ in 0..200 {
            solver.step(2e-3).unwrap();
        }
        assert!(solver.f1.values.iter().all(|&v| v >= 0.0));
        // clipping should be essentially absent: losses are proportional
        // to f1 and resolved by the step size
        assert!(
            solver.diagnostics.clipped_mass < 1e-8,
            "clipped {}",
            solver.diagnostics.clipped_mass
        );
    }

    #[test]
    fn mass_defect_is_order_epsilon_squared_shaped() {
        // d/dt (M1 + 2 eps M21) = 2 eps λ12 M1 (M2^0 - M21): evaluate the
        // identity's two sides from a short run
        let g = VelocityGrid::new(-4.0, 4.0, 48).unwrap();
        let f1 = gaussian(g, 0.25, 0.5, 1.0);
        let r = rates();
        let mut solver = ScalarSolver::new(f1, r.clone(), 1e-8, 24, 0.02).unwrap();
        let dt = 1e-3;
        let eps = r.epsilon;
        let mut series = Vec::new();
        for k in 0..=400 {
            if k % 50 == 0 {
                let m1 = solver.f1.mass();
                let m21 = solver.m21().unwrap();
                series.push((solver.t, m1 + 2.0 * eps * m21, m1, m21));
            }
            if k < 400 {
                solver.step(dt).unwrap();
            }
        }
        // finite differences of the conserved-ish quantity vs the identity
        for w in series.windows(2) {
            let (t0, x0, m1_0, m21_0) = w[0];
            let (t1, x1, m1_1, m21_1) = w[1];
            if t0 < 5.0 * eps {
                continue; // initial layer
            }
            let fd = (x1 - x0) / (t1 - t0);
            let m1 = 0.5 * (m1_0 + m1_1);
            let m21 = 0.5 * (m21_0 + m21_1);
            let m20 = r.l11() * m1 * m1 / r.m11();
            let identity = 2.0 * eps * r.l12() * m1 * (m20 - m21);
            assert!(
                (fd - identity).abs() < 0.2 * identity.abs().max(1e-5),
                "t = {t0}: fd {fd} vs identity {identity}"
            );
        }
    }
}

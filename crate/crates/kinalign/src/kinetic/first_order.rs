//! Model B: the first-order pair model.
//!
//! Two layers are provided. [`rhs_first_order`] and [`step_kinetic`] work on
//! an explicit gridded state `(f1, f2)`: the reaction channels are the
//! right-hand sides of the pair system (fast channels divided by `ε`) while
//! the pair transport is applied between reaction stages as the exact
//! mass-conserving drift pullback. [`FirstOrderSolver`] is the production
//! path: it advances only `f1` and reconstructs the fast pair density from
//! the mild (Duhamel) form, where every evaluation is a single `σ`-quadrature
//! over the `f1` history — there is no iterated interpolation of `f2` and no
//! CFL restriction.
//!
//! In the mild solver the pair mass splits as `M2 = M21 + T`: `M21` is the
//! binary-born mass, an explicit quadrature functional of the history whose
//! time derivative satisfies the fast Duhamel ODE to quadrature accuracy,
//! and `T` (with its first moment `TI`) is the ternary-born mass, carried
//! as a scalar fast ODE chosen so that `d/dt (M1 + 2 ε M2)` and
//! `d/dt (I1 + 2 ε I2)` vanish identically for the discrete channels. The
//! lagged ternary shape fields are rescaled and moment-tilted to these
//! exact channel masses at every evaluation.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2, VelocityGrid};
use crate::kinematics::sym_tensor_11;
use crate::kinetic::history::HistoryBuffer;
use crate::kinetic::pair_gain::{gain_marginal, reconstruct_pair, GainSlice};
use crate::kinetic::quadrature::SemigroupQuadrature;
use crate::kinetic::ternary::{
    rescale_and_tilt1 as rescale_and_tilt, rescale_and_tilt2, s20_integral_field,
    s20_integral_marginal, w3_field,
};
use crate::kinetic::SolverDiagnostics;
use crate::rates::RateTable;

/// Explicit grid state of the pair model.
#[derive(Debug, Clone)]
pub struct KineticState {
    pub f1: Density1,
    pub f2: Density2,
    pub t: f64,
}

/// Reaction right-hand sides of the pair system: `(df1, df2)` with the fast
/// `f2` channels divided by `ε` (the transport term is not included; it is
/// the exactly-integrable left-hand side handled by the stepper).
///
/// All four channels of each equation are present; the ternary gain uses the
/// quasi-stationary triple marginal renormalized to mass `M1 M2 / μ12`,
/// which makes `d/dt (M1 + 2 ε M2) = 0` an algebraic identity of the
/// returned fields.
pub fn rhs_first_order(
    s: &KineticState,
    rates: &RateTable,
    quad3: &SemigroupQuadrature,
) -> Result<(Density1, Density2)> {
    if rates.epsilon <= 0.0 {
        return Err(Error::Config(
            "first-order model requires epsilon > 0; use the limit model instead".into(),
        ));
    }
    let eps = rates.epsilon;
    let m1 = s.f1.mass();
    let m2 = s.f2.mass();

    let (w3, z3) = if rates.l12() > 0.0 {
        let w3 = w3_field(&s.f1, &s.f2, rates, quad3);
        let z3 = w3.marginal();
        (Some(w3), Some(z3))
    } else {
        (None, None)
    };

    // free particles: fragmentation gains against coagulation losses
    let marg2 = s.f2.marginal();
    let mut df1 = Density1::zeros(s.f1.grid);
    for i in 0..s.f1.grid.n {
        let tern = z3.as_ref().map_or(0.0, |z| z.values[i]);
        df1.values[i] = rates.m11() * marg2.values[i] + eps * rates.m12() * rates.l12() * tern
            - rates.l11() * m1 * s.f1.values[i]
            - eps * rates.l12() * m2 * s.f1.values[i];
    }

    // pairs, on the fast scale
    let tensor = sym_tensor_11(&s.f1, &s.f1)?;
    let mut df2 = Density2::zeros(s.f2.grid);
    let n = s.f2.grid.n;
    for idx in 0..n * n {
        let tern = w3.as_ref().map_or(0.0, |w| w.values[idx]);
        df2.values[idx] = (0.5 * rates.l11() * tensor.values[idx]
            - eps * rates.l12() * m1 * s.f2.values[idx]
            + eps * rates.m12() * rates.l12() * tern
            - 0.5 * rates.m11() * s.f2.values[idx])
            / eps;
    }
    df2.symmetrize();
    Ok((df1, df2))
}

/// Exact pair-drift pullback over fast time `dtau`:
/// `f2 ← e^{dtau} f2 ∘ Φ_2^{-dtau}` (the transport part of the pair
/// equation), evaluated by bilinear interpolation. The continuous flow
/// conserves mass and the mean-direction first moment; both are restored
/// exactly after the lattice pullback, which keeps repeated applications
/// conservative even when the field develops sub-cell structure near the
/// diagonal.
pub fn apply_pair_drift(f2: &Density2, dtau: f64) -> Density2 {
    let grid = f2.grid;
    let n = grid.n;
    let weight = dtau.exp();
    let es = dtau.exp();
    let mut out = Density2::zeros(grid);
    for i in 0..n {
        let v1 = grid.center(i);
        for j in 0..n {
            let v2 = grid.center(j);
            let mean = 0.5 * (v1 + v2);
            let y1 = mean + es * (v1 - mean);
            let y2 = mean + es * (v2 - mean);
            let val = f2.interp(y1, y2);
            if val != 0.0 {
                out.values[i * n + j] = weight * val;
            }
        }
    }
    out.symmetrize();
    rescale_and_tilt2(&mut out, f2.mass(), f2.moment1());
    out
}

/// One step of the explicit-state pair solver: Strang split of the exact
/// pair drift around a Heun step of the reaction channels. Negative values
/// are clipped (and tallied); the new `f1` is appended to the history for
/// delayed evaluations downstream.
///
/// Requires `dt <= ε dt_fast_factor` (default 1/4) so the fast reaction
/// channels stay accurate; aborts if a step clips more than `clip_tol`
/// of the total mass.
#[allow(clippy::too_many_arguments)]
pub fn step_kinetic(
    s: &mut KineticState,
    rates: &RateTable,
    quad3: &SemigroupQuadrature,
    dt: f64,
    dt_fast_factor: f64,
    clip_tol: f64,
    history: Option<&mut HistoryBuffer>,
    diag: &mut SolverDiagnostics,
) -> Result<()> {
    let eps = rates.epsilon;
    if dt > eps * dt_fast_factor * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "step dt = {dt} exceeds epsilon * {dt_fast_factor} = {}",
            eps * dt_fast_factor
        )));
    }
    let dtau = dt / eps;
    let mass_before = s.f1.mass() + 2.0 * eps * s.f2.mass();

    s.f2 = apply_pair_drift(&s.f2, 0.5 * dtau);
    let (k1_1, k1_2) = rhs_first_order(s, rates, quad3)?;
    let mut pred = KineticState {
        f1: s.f1.clone(),
        f2: s.f2.clone(),
        t: s.t + dt,
    };
    for (p, &k) in pred.f1.values.iter_mut().zip(k1_1.values.iter()) {
        *p += dt * k;
    }
    for (p, &k) in pred.f2.values.iter_mut().zip(k1_2.values.iter()) {
        *p += dt * k;
    }
    diag.clipped_mass += pred.f1.clip_negative() + 2.0 * eps * pred.f2.clip_negative();
    let (k2_1, k2_2) = rhs_first_order(&pred, rates, quad3)?;
    for ((f, &a), &b) in s
        .f1
        .values
        .iter_mut()
        .zip(k1_1.values.iter())
        .zip(k2_1.values.iter())
    {
        *f += 0.5 * dt * (a + b);
    }
    for ((f, &a), &b) in s
        .f2
        .values
        .iter_mut()
        .zip(k1_2.values.iter())
        .zip(k2_2.values.iter())
    {
        *f += 0.5 * dt * (a + b);
    }
    let clipped = s.f1.clip_negative() + 2.0 * eps * s.f2.clip_negative();
    diag.clipped_mass += clipped;
    s.f2 = apply_pair_drift(&s.f2, 0.5 * dtau);
    s.f2.symmetrize();
    s.t += dt;

    if clipped > clip_tol * mass_before.max(1e-300) {
        return Err(Error::Numerical(format!(
            "step clipped {clipped:.3e} mass at t = {} (tolerance {clip_tol:.1e})",
            s.t
        )));
    }
    if let Some(h) = history {
        h.push(s.t, s.f1.clone());
    }
    Ok(())
}


/// Lagged quasi-stationary ternary shapes (unit mass), shared by the `f1`
/// equation and the pair reconstruction.
#[derive(Debug, Clone)]
struct TernaryCache {
    z3_shape: Density1,
    term2_shape: Density1,
    term2_field: Density2,
}

/// Per-evaluation bookkeeping of the mild right-hand side.
#[derive(Debug, Clone, Copy)]
struct MildChannels {
    /// binary-born pair mass and first moment (quadrature functionals)
    m21: f64,
    i21: f64,
}

/// Production solver for the first-order model via the mild formulation.
pub struct FirstOrderSolver {
    pub rates: RateTable,
    pub f1: Density1,
    pub t: f64,
    pub history: HistoryBuffer,
    pub diagnostics: SolverDiagnostics,
    /// ternary-born pair mass and first moment (fast scalar states)
    pub t_mass: f64,
    pub t_moment: f64,
    quad2: SemigroupQuadrature,
    quad3: SemigroupQuadrature,
    f2_initial: Option<Density2>,
    ternary: Option<TernaryCache>,
    refresh_interval: f64,
    next_refresh: f64,
    /// total |mass + moment| slice corrections, a lattice-consistency tally
    pub correction_tally: f64,
}

/// Observables of a pair-model state at output time.
#[derive(Debug, Clone, Copy)]
pub struct PairObservables {
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub v1: f64,
    pub v2: f64,
    pub vt2: f64,
}

impl FirstOrderSolver {
    pub fn new(
        f1: Density1,
        f2_initial: Option<Density2>,
        rates: RateTable,
        tail_tol: f64,
        n_sigma: usize,
        refresh_interval: f64,
    ) -> Result<Self> {
        if rates.epsilon <= 0.0 {
            return Err(Error::Config("first-order model requires epsilon > 0".into()));
        }
        if rates.m11() <= 0.0 {
            return Err(Error::Config("first-order model requires mu11 > 0".into()));
        }
        if let Some(f2) = &f2_initial {
            if f2.grid != f1.grid {
                return Err(Error::Config("f2 initial data on a different grid".into()));
            }
            if !f2.is_symmetric(1e-10) {
                return Err(Error::Config("f2 initial data must be symmetric".into()));
            }
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
            t_mass: 0.0,
            t_moment: 0.0,
            quad2,
            quad3,
            f2_initial,
            ternary: None,
            refresh_interval,
            next_refresh: 0.0,
            correction_tally: 0.0,
        })
    }

    pub fn grid(&self) -> VelocityGrid {
        self.f1.grid
    }

    fn ternary_active(&self) -> bool {
        self.rates.l12() > 0.0
    }

    /// Gain slices of the delayed binary channel at time `t`: prefactor
    /// `(λ11/2) w_q exp(-λ12 ∫ M1)`, density `f1(t - ε σ_q)`, σ capped at
    /// `t/ε`.
    fn binary_slices(&self, t: f64) -> Result<Vec<GainSlice>> {
        let eps = self.rates.epsilon;
        let quad = self.quad2.truncated(t / eps);
        let mut slices = Vec::with_capacity(quad.n());
        for (&sigma, &w) in quad.nodes.iter().zip(quad.weights.iter()) {
            let s_delay = (t - eps * sigma).max(0.0);
            let f = self.history.interp(s_delay)?;
            let screening = if self.rates.l12() > 0.0 {
                (-self.rates.l12() * self.history.m1_integral(s_delay, t)?).exp()
            } else {
                1.0
            };
            slices.push(GainSlice {
                sigma,
                prefactor: 0.5 * self.rates.l11() * w * screening,
                f,
            });
        }
        Ok(slices)
    }

    /// Mass and first moment of the binary-born pair density (slice
    /// analytics plus the initial layer).
    fn binary_mass_moment(&self, t: f64, slices: &[GainSlice]) -> Result<MildChannels> {
        let mu11 = self.rates.m11();
        let mut m21 = 0.0;
        let mut i21 = 0.0;
        for s in slices {
            let decay = (-0.5 * mu11 * s.sigma).exp();
            let m = s.f.mass();
            m21 += s.prefactor * decay * m * m;
            i21 += s.prefactor * decay * m * s.f.moment1();
        }
        if let Some(layer) = self.initial_layer_marginal(t)? {
            m21 += layer.mass();
            i21 += layer.moment1();
        }
        Ok(MildChannels { m21, i21 })
    }

    /// Marginal of the initial-layer term `S_{2,ε}(0, t/ε) f2^I`, evaluated
    /// along the analytically-integrated pre-collisional coordinate. Decays
    /// like `e^{-μ11 t/(2ε)}` and is skipped once below the quadrature tail.
    fn initial_layer_marginal(&self, t: f64) -> Result<Option<Density1>> {
        let f2i = match &self.f2_initial {
            Some(f) => f,
            None => return Ok(None),
        };
        let eps = self.rates.epsilon;
        let tau = t / eps;
        if (-0.5 * self.rates.m11() * tau).exp() < self.quad2.tail_tol {
            return Ok(None);
        }
        let screening = if self.rates.l12() > 0.0 {
            (-self.rates.l12() * self.history.m1_integral(0.0, t)?).exp()
        } else {
            1.0
        };
        let grid = f2i.grid;
        let n = grid.n;
        let h = grid.h();
        let es = tau.exp();
        let beta = (1.0 - es) / (1.0 + es);
        let weight = screening * ((1.0 - 0.5 * self.rates.m11()) * tau).exp() * 2.0 / (1.0 + es);
        let mut out = Density1::zeros(grid);
        for i in 0..n {
            let v1 = grid.center(i);
            let mut line = 0.0;
            for k in 0..n {
                let y2 = grid.center(k);
                let y1 = (1.0 - beta) * v1 + beta * y2;
                line += f2i.interp(y1, y2);
            }
            out.values[i] = weight * line * h;
        }
        Ok(Some(out))
    }

    /// Initial-layer term as a pair field (pointwise pullback; only used at
    /// output reconstructions, where the term either has moderate `t/ε` or
    /// has already decayed away).
    fn initial_layer_field(&self, t: f64) -> Result<Option<Density2>> {
        let f2i = match &self.f2_initial {
            Some(f) => f,
            None => return Ok(None),
        };
        let eps = self.rates.epsilon;
        let tau = t / eps;
        if (-0.5 * self.rates.m11() * tau).exp() < self.quad2.tail_tol {
            return Ok(None);
        }
        let screening = if self.rates.l12() > 0.0 {
            (-self.rates.l12() * self.history.m1_integral(0.0, t)?).exp()
        } else {
            1.0
        };
        let (mut field, _) = crate::kinetic::semigroup::apply_s20(f2i, tau, &self.rates);
        for v in &mut field.values {
            *v *= screening;
        }
        Ok(Some(field))
    }

    /// Right-hand sides of the mild system at time `t`: the field `df1`
    /// plus the scalar rates `(dT, dTI)` of the ternary-born pair moments.
    fn rhs(&mut self, t: f64, f1: &Density1, t_mass: f64, t_moment: f64) -> Result<(Density1, f64, f64)> {
        let eps = self.rates.epsilon;
        let rates = self.rates.clone();
        let grid = f1.grid;
        let m1 = f1.mass();
        let i1 = f1.moment1();

        let slices = self.binary_slices(t)?;
        let channels = self.binary_mass_moment(t, &slices)?;
        let (mut marg, corr) = gain_marginal(&slices, rates.m11(), grid);
        self.correction_tally += corr;
        if let Some(layer) = self.initial_layer_marginal(t)? {
            for (m, &l) in marg.values.iter_mut().zip(layer.values.iter()) {
                *m += l;
            }
        }

        let m2 = channels.m21 + t_mass;
        let i2 = channels.i21 + t_moment;

        let mut df1 = Density1::zeros(grid);
        let (mut d_t, mut d_ti) = (0.0, 0.0);
        if self.ternary_active() {
            let cache = self
                .ternary
                .as_ref()
                .expect("ternary cache initialized before stepping");
            let mu12 = rates.m12();
            // ternary gain in the f1 equation: mass M1 M2 / mu12, moment
            // (I1 M2 + 2 I2 M1) / (3 mu12)
            let mut z3 = cache.z3_shape.clone();
            for v in &mut z3.values {
                *v *= m1 * m2 / mu12;
            }
            rescale_and_tilt(
                &mut z3,
                m1 * m2 / mu12,
                (i1 * m2 + 2.0 * i2 * m1) / (3.0 * mu12),
            );
            // ternary-born pair marginal in the mu11 gain: mass T, moment TI
            let mut tern2 = cache.term2_shape.clone();
            for v in &mut tern2.values {
                *v *= t_mass;
            }
            rescale_and_tilt(&mut tern2, t_mass, t_moment);

            for i in 0..grid.n {
                df1.values[i] = rates.m11() * (marg.values[i] + tern2.values[i])
                    + eps * mu12 * rates.l12() * z3.values[i]
                    - rates.l11() * m1 * f1.values[i]
                    - eps * rates.l12() * m2 * f1.values[i];
            }
            // fast scalar ODEs making the conservation identities exact
            d_t = rates.l12() * m1 * channels.m21 - 0.5 * rates.m11() * t_mass / eps;
            d_ti = rates.l12()
                * ((2.0 / 3.0) * m1 * channels.i21 + (1.0 / 3.0) * i1 * m2
                    - (1.0 / 3.0) * m1 * t_moment)
                - 0.5 * rates.m11() * t_moment / eps;
        } else {
            for i in 0..grid.n {
                df1.values[i] = rates.m11() * marg.values[i]
                    - rates.l11() * m1 * f1.values[i]
                    - eps * rates.l12() * m2 * f1.values[i];
            }
        }
        Ok((df1, d_t, d_ti))
    }

    /// Refresh the lagged ternary shape fields from the current
    /// reconstruction (also done automatically on the configured cadence).
    /// Before any pairs have formed the reconstruction is empty, so the
    /// quasi-stationary pair density of the current `f1` serves as the
    /// shape proxy (the channel masses are exact either way).
    pub fn refresh_ternary(&mut self) -> Result<()> {
        if !self.ternary_active() {
            return Ok(());
        }
        let mut f2 = self.reconstruct_f2()?;
        let m1 = self.f1.mass();
        if f2.mass() < 1e-9 * m1 * m1 {
            f2 = crate::kinetic::limit::f2_limit(&self.f1, &self.rates, &self.quad2);
        }
        let w3 = w3_field(&self.f1, &f2, &self.rates, &self.quad3);
        let z3 = w3.marginal();
        let term2 = s20_integral_marginal(&w3, &self.rates, &self.quad2);
        let term2_field = s20_integral_field(&w3, &self.rates, &self.quad2);
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
        self.ternary = Some(TernaryCache {
            z3_shape: normalize1(z3),
            term2_shape: normalize1(term2),
            term2_field: normalize2(term2_field),
        });
        Ok(())
    }

    /// Reconstruct the pair density at the current time from the mild form.
    pub fn reconstruct_f2(&self) -> Result<Density2> {
        let t = self.t;
        let slices = self.binary_slices(t)?;
        let mut f2 = reconstruct_pair(&slices, self.rates.m11(), self.f1.grid);
        if let Some(layer) = self.initial_layer_field(t)? {
            for (a, &b) in f2.values.iter_mut().zip(layer.values.iter()) {
                *a += b;
            }
        }
        if let Some(cache) = self.ternary.as_ref() {
            for (a, &b) in f2.values.iter_mut().zip(cache.term2_field.values.iter()) {
                *a += self.t_mass * b;
            }
        }
        Ok(f2)
    }

    /// One Heun step of size `dt` for the delayed `f1` equation and the
    /// ternary scalar states.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let t0 = self.t;
        if self.ternary_active() && (self.ternary.is_none() || t0 >= self.next_refresh) {
            self.refresh_ternary()?;
            self.next_refresh = t0 + self.refresh_interval;
        }
        let f0 = self.f1.clone();
        let (t0_mass, t0_mom) = (self.t_mass, self.t_moment);
        let (k1, kt1, kti1) = self.rhs(t0, &f0, t0_mass, t0_mom)?;
        let mut pred = f0.clone();
        for (p, &k) in pred.values.iter_mut().zip(k1.values.iter()) {
            *p += dt * k;
        }
        self.diagnostics.clipped_mass += pred.clip_negative();
        self.history.push(t0 + dt, pred.clone());
        let (k2, kt2, kti2) =
            self.rhs(t0 + dt, &pred, t0_mass + dt * kt1, t0_mom + dt * kti1)?;
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
                "first-order solver produced non-finite values at t = {t0}"
            )));
        }
        self.history.replace_last(f_new.clone());
        self.f1 = f_new;
        self.t_mass = (t0_mass + 0.5 * dt * (kt1 + kt2)).max(0.0);
        self.t_moment += 0.5 * dt * (kti1 + kti2);
        self.t = t0 + dt;
        Ok(())
    }

    /// Current `(M1, M2)` with `M2` from the mild closure (the same
    /// quantity the dynamics sees).
    pub fn masses(&self) -> Result<(f64, f64)> {
        let slices = self.binary_slices(self.t)?;
        let channels = self.binary_mass_moment(self.t, &slices)?;
        Ok((self.f1.mass(), channels.m21 + self.t_mass))
    }

    /// Output observables: masses, first moments and variances, with the
    /// conserved pair moments from the mild closure and the dispersions
    /// from slice analytics (exact change of variables per slice).
    pub fn observables(&self, v_inf: f64) -> Result<PairObservables> {
        let t = self.t;
        let m1 = self.f1.mass();
        let i1 = self.f1.moment1();
        let e1 = self.f1.moment2();
        let v1 = e1 - 2.0 * v_inf * i1 + v_inf * v_inf * m1;

        let slices = self.binary_slices(t)?;
        let mut m2 = 0.0;
        let mut i2 = 0.0;
        let mut e2 = 0.0;
        let mut vt2 = 0.0;
        for s in &slices {
            let decay = (-0.5 * self.rates.m11() * s.sigma).exp();
            let es2 = (-2.0 * s.sigma).exp();
            let m = s.f.mass();
            let i = s.f.moment1();
            let e = s.f.moment2();
            let p = s.prefactor * decay;
            m2 += p * m * m;
            i2 += p * m * i;
            // transported second moments: the mean coordinate is preserved,
            // deviations contract by e^{-σ}
            e2 += p * (0.5 * (e * m + i * i) + 0.5 * es2 * (e * m - i * i));
            vt2 += p * es2 * 2.0 * (e * m - i * i);
        }
        if let Some(layer) = self.initial_layer_field(t)? {
            m2 += layer.mass();
            i2 += layer.moment1();
            e2 += layer.moment2();
            vt2 += layer.pair_dispersion();
        }
        if let Some(cache) = self.ternary.as_ref() {
            let f = &cache.term2_field;
            m2 += self.t_mass * f.mass();
            i2 += self.t_mass * f.moment1();
            e2 += self.t_mass * f.moment2();
            vt2 += self.t_mass * f.pair_dispersion();
        }
        let v2 = e2 - 2.0 * v_inf * i2 + v_inf * v_inf * m2;
        Ok(PairObservables {
            m1,
            m2,
            i1,
            i2,
            v1,
            v2,
            vt2,
        })
    }

    /// Conserved-moment snapshot `(M1 + 2εM2, I1 + 2εI2)`.
    pub fn conserved(&self) -> Result<(f64, f64)> {
        let slices = self.binary_slices(self.t)?;
        let channels = self.binary_mass_moment(self.t, &slices)?;
        let eps = self.rates.epsilon;
        let m = self.f1.mass() + 2.0 * eps * (channels.m21 + self.t_mass);
        let i = self.f1.moment1() + 2.0 * eps * (channels.i21 + self.t_moment);
        Ok((m, i))
    }
}

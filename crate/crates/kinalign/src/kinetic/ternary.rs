//! Quasi-stationary ternary channel: the `v3`-marginal of
//! `∫_0^∞ S_3(ρ)(f_1 ⊙ f_2) dρ` and the fields built from it.
//!
//! The three-dimensional triple density itself is never materialized: the
//! `v3` integration is carried out per output cell by a line quadrature
//! through the backward flow, with the substitution Jacobian folded in so
//! the `ρ`-integrand decays like `e^{-μ12 ρ}` times support-exit factors.
//! Fields are renormalized to their exact continuum masses (`M1 M2 / μ12`
//! for the marginal of the `S_3` integral), which makes the solver-level
//! mass bookkeeping exact by construction.

use rayon::prelude::*;

use crate::grid::{Density1, Density2};
#[cfg(test)]
use crate::grid::VelocityGrid;
use crate::kinetic::quadrature::SemigroupQuadrature;
use crate::rates::RateTable;

/// Rescale a pair field to an exact mass and tilt it along the preserved
/// mean direction `(v1+v2)/2` to an exact first moment. The tilt is
/// mass-neutral and keeps the field symmetric.
pub(crate) fn rescale_and_tilt2(d: &mut Density2, mass_target: f64, moment_target: f64) {
    let m = d.mass();
    if m <= 0.0 || mass_target <= 0.0 {
        return;
    }
    let alpha = mass_target / m;
    for v in &mut d.values {
        *v *= alpha;
    }
    let grid = d.grid;
    let n = grid.n;
    let i_lat = d.moment1();
    let mean = i_lat / mass_target;
    let h2 = grid.h() * grid.h();
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u = 0.5 * (grid.center(i) + grid.center(j)) - mean;
            var += u * u * d.values[i * n + j];
        }
    }
    var *= h2;
    if var <= 1e-300 {
        return;
    }
    // moment of (1 + kappa (u - mean)) d in v1 shifts by kappa * var since
    // the integrand is symmetric
    let kappa = (moment_target - i_lat) / var;
    let span = grid.v_max - grid.v_min;
    if kappa.abs() * span >= 0.5 {
        return;
    }
    for i in 0..n {
        for j in 0..n {
            let u = 0.5 * (grid.center(i) + grid.center(j)) - mean;
            d.values[i * n + j] *= 1.0 + kappa * u;
        }
    }
}

/// 1-D variant of [`rescale_and_tilt2`].
pub(crate) fn rescale_and_tilt1(d: &mut Density1, mass_target: f64, moment_target: f64) {
    let m = d.mass();
    if m <= 0.0 || mass_target <= 0.0 {
        return;
    }
    let alpha = mass_target / m;
    for v in &mut d.values {
        *v *= alpha;
    }
    let grid = d.grid;
    let i_lat = d.moment1();
    let mean = i_lat / mass_target;
    let mut var = 0.0;
    for (i, &v) in d.values.iter().enumerate() {
        let x = grid.center(i) - mean;
        var += x * x * v;
    }
    var *= grid.h();
    if var <= 1e-300 {
        return;
    }
    let kappa = (moment_target - i_lat) / var;
    let span = grid.v_max - grid.v_min;
    if kappa.abs() * span >= 0.5 {
        return;
    }
    for (i, v) in d.values.iter_mut().enumerate() {
        *v *= 1.0 + kappa * (grid.center(i) - mean);
    }
}

/// `W3(v1,v2) = ∫_R [∫_0^∞ S_3(ρ)(f1 ⊙ f2) dρ](v1,v2,v3) dv3`,
/// renormalized to its continuum mass `M1 M2 / μ12` (up to the quadrature
/// tail). Symmetric in `(v1, v2)`.
pub fn w3_field(
    f1: &Density1,
    f2: &Density2,
    rates: &RateTable,
    quad3: &SemigroupQuadrature,
) -> Density2 {
    let grid = f1.grid;
    let n = grid.n;
    let h = grid.h();
    let mu12 = rates.m12();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v1 = grid.center(i);
            let mut row = vec![0.0; n];
            for j in i..n {
                let v2 = grid.center(j);
                let mut acc = 0.0;
                for (&rho, &w) in quad3.nodes.iter().zip(quad3.weights.iter()) {
                    let er = rho.exp();
                    // y3 parametrization at fixed (v1, v2):
                    //   y1 - y2 = e^rho (v1 - v2),
                    //   y1 + y2 = [3 e^rho (v1+v2) + 2 (1-e^rho) y3] / (1+2 e^rho),
                    // with dv3 = 3/(1+2 e^rho) dy3
                    let delta = er * (v1 - v2);
                    let s0 = 3.0 * er * (v1 + v2) / (1.0 + 2.0 * er);
                    let s1 = 2.0 * (1.0 - er) / (1.0 + 2.0 * er);
                    let weight = w * ((2.0 - mu12) * rho).exp() * 3.0 / (1.0 + 2.0 * er);
                    let mut line = 0.0;
                    for k in 0..n {
                        let y3 = grid.center(k);
                        let s = s0 + s1 * y3;
                        let y1 = 0.5 * (s + delta);
                        let y2 = 0.5 * (s - delta);
                        let g = f1.interp(y1) * f2.interp(y2, y3)
                            + f1.interp(y2) * f2.interp(y1, y3)
                            + f1.interp(y3) * f2.interp(y1, y2);
                        line += g;
                    }
                    acc += weight * line * h / 3.0;
                }
                row[j] = acc;
            }
            row
        })
        .collect();

    let mut out = Density2::zeros(grid);
    for (i, row) in rows.iter().enumerate() {
        for j in i..n {
            out.values[i * n + j] = row[j];
            out.values[j * n + i] = row[j];
        }
    }

    // exact continuum mass and first moment of the v3-marginal; the tiny
    // quadrature tail is folded in so channel bookkeeping is exact
    let (m1, i1) = (f1.mass(), f1.moment1());
    let (m2, i2) = (f2.mass(), f2.moment1());
    rescale_and_tilt2(
        &mut out,
        m1 * m2 / mu12,
        (i1 * m2 + 2.0 * i2 * m1) / (3.0 * mu12),
    );
    out
}

/// `z3(v1) = ∫ W3 dv2`: the doubly-marginalized ternary gain entering the
/// free-particle equation.
pub fn z3_marginal(w3: &Density2) -> Density1 {
    w3.marginal()
}

/// `v2`-marginal of `∫_0^∞ S_{2,0}(σ) W dσ` for a gridded pair field `W`,
/// by the analytically-marginalized line quadrature. Renormalized to the
/// continuum mass `(2/μ11) mass(W)`.
pub fn s20_integral_marginal(
    w: &Density2,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
) -> Density1 {
    let grid = w.grid;
    let n = grid.n;
    let h = grid.h();
    let mu11 = rates.m11();

    let vals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v1 = grid.center(i);
            let mut acc = 0.0;
            for (&sigma, &wq) in quad2.nodes.iter().zip(quad2.weights.iter()) {
                let es = sigma.exp();
                let beta = (1.0 - es) / (1.0 + es);
                let weight = wq * ((1.0 - 0.5 * mu11) * sigma).exp() * 2.0 / (1.0 + es);
                let mut line = 0.0;
                for k in 0..n {
                    let y2 = grid.center(k);
                    let y1 = (1.0 - beta) * v1 + beta * y2;
                    line += w.interp(y1, y2);
                }
                acc += weight * line * h;
            }
            acc
        })
        .collect();

    let mut out = Density1 { grid, values: vals };
    // the pair semigroup contracts mass at rate mu11/2 and preserves the
    // mean-direction first moment, so both targets are explicit
    rescale_and_tilt1(&mut out, 2.0 / mu11 * w.mass(), 2.0 / mu11 * w.moment1());
    out
}

/// `∫_0^∞ S_{2,0}(σ) W dσ` as a pair field, cell-averaged in the
/// difference direction (the pointwise pullback is singular on the
/// diagonal). Renormalized like [`s20_integral_marginal`].
pub fn s20_integral_field(
    w: &Density2,
    rates: &RateTable,
    quad2: &SemigroupQuadrature,
) -> Density2 {
    let grid = w.grid;
    let n = grid.n;
    let h = grid.h();
    let mu11 = rates.m11();

    // cumulative of W along the difference direction on the half-cell u
    // lattice: Psi(u, z) = ∫_0^z W(u - z'/2, u + z'/2) dz'
    let m_count = 2 * n + 1;
    let k_max = 2 * n + 1;
    let mut psi = vec![0.0; m_count * (k_max + 1)];
    for m in 0..m_count {
        let u = grid.v_min + m as f64 * 0.5 * h;
        let base = m * (k_max + 1);
        let mut acc = 0.0;
        for k in 0..k_max {
            let zmid = (k as f64 + 0.5) * h;
            acc += h * w.interp(u - 0.5 * zmid, u + 0.5 * zmid);
            psi[base + k + 1] = acc;
        }
    }
    let psi_eval = |m: usize, z: f64| -> f64 {
        let (s, z) = if z < 0.0 { (-1.0, -z) } else { (1.0, z) };
        let x = z / h;
        let base = m * (k_max + 1);
        if x >= k_max as f64 {
            return s * psi[base + k_max];
        }
        let k = x as usize;
        let wfrac = x - k as f64;
        s * (psi[base + k] * (1.0 - wfrac) + psi[base + k + 1] * wfrac)
    };

    let mut out = Density2::zeros(grid);
    for (&sigma, &wq) in quad2.nodes.iter().zip(quad2.weights.iter()) {
        let es = sigma.exp();
        let weight = wq * (-0.5 * mu11 * sigma).exp() / h;
        for i in 0..n {
            for j in i..n {
                let m = i + j + 1;
                let d = (j as i64 - i as i64) as f64 * h;
                let v = weight * (psi_eval(m, es * (d + 0.5 * h)) - psi_eval(m, es * (d - 0.5 * h)));
                out.values[i * n + j] += v;
                out.values[j * n + i] += v;
            }
        }
    }

    rescale_and_tilt2(&mut out, 2.0 / mu11 * w.mass(), 2.0 / mu11 * w.moment1());
    out
}

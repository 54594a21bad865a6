//! Empirical observables of an ensemble, in number-density units.

use crate::grid::VelocityGrid;

use super::Ensemble;

/// Moments and histograms extracted from a particle state. All quantities
/// are divided by the system volume so they are comparable with the moment
/// ODEs and the kinetic solvers.
#[derive(Debug, Clone)]
pub struct Observables {
    /// Group number densities `M_k`, `k = 1..=kmax`.
    pub m: Vec<f64>,
    /// First moments `I_k`, `k = 1..=kmax`.
    pub i: Vec<f64>,
    /// Pair dispersions `Ṽ_k` (`Ṽ_1 = 0`).
    pub vt: Vec<f64>,
    /// Total variance `Σ_k k V_k` over all groups (not truncated at kmax).
    pub v: f64,
    /// Conserved mean velocity of the whole population.
    pub mean_velocity: f64,
    /// Total individual density `Σ k M_k` over all groups.
    pub total_mass: f64,
    /// Singleton velocity histogram in density units (count/(omega h)).
    pub histogram: Vec<f64>,
}

/// Compute observables, truncating the per-size vectors at `kmax`.
///
/// The empirical densities are the symmetrized point measures of the groups:
/// `M_k` counts size-k groups, `I_k` sums their means, `Ṽ_k` averages
/// `(v_a - v_b)^2` over ordered member pairs, and `V` sums
/// `(v - v_mean)^2` over every individual, all divided by `omega`.
pub fn observables(e: &Ensemble, kmax: usize, grid: &VelocityGrid) -> Observables {
    let omega = e.omega;
    let mut m = vec![0.0; kmax];
    let mut i_mom = vec![0.0; kmax];
    let mut vt = vec![0.0; kmax];
    let mut histogram = vec![0.0; grid.n];

    let count = e.individuals();
    let vsum = e.velocity_sum();
    let v_inf = if count > 0 { vsum / count as f64 } else { 0.0 };

    let mut v_total = 0.0;
    let mut mass_total = 0.0;
    for g in &e.groups {
        let k = g.len();
        mass_total += k as f64;
        for &x in g {
            let d = x - v_inf;
            v_total += d * d;
        }
        if k <= kmax {
            m[k - 1] += 1.0;
            i_mom[k - 1] += g.iter().sum::<f64>() / k as f64;
            if k >= 2 {
                // average over ordered pairs of distinct members
                let mut s = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        if a != b {
                            let d = g[a] - g[b];
                            s += d * d;
                        }
                    }
                }
                vt[k - 1] += s / (k * (k - 1)) as f64;
            }
        }
        if k == 1 {
            if let Some(c) = grid.cell_of(g[0]) {
                histogram[c] += 1.0;
            }
        }
    }

    for x in m.iter_mut().chain(i_mom.iter_mut()).chain(vt.iter_mut()) {
        *x /= omega;
    }
    let hnorm = omega * grid.h();
    for x in &mut histogram {
        *x /= hnorm;
    }

    Observables {
        m,
        i: i_mom,
        vt,
        v: v_total / omega,
        mean_velocity: v_inf,
        total_mass: mass_total / omega,
        histogram,
    }
}

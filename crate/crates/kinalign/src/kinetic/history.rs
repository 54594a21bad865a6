//! Time history of the one-particle density for delayed gain terms.
//!
//! The scalar and first-order solvers evaluate `f_1(t - εσ)` and the
//! accumulated free-particle mass `∫_{t-εσ}^t M_1(s) ds` at quadrature
//! nodes. Snapshots are stored at every accepted step and interpolated
//! linearly in time; the running integral of `M_1` is kept as a trapezoid
//! prefix sum so exponential screening factors cost O(log n) per lookup.

use crate::error::{Error, Result};
use crate::grid::Density1;

#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    times: Vec<f64>,
    snapshots: Vec<Density1>,
    /// Trapezoid prefix integral of `M_1`: `m1_int[i] = ∫_{t_0}^{t_i} M_1`.
    m1: Vec<f64>,
    m1_int: Vec<f64>,
    /// Oldest delayed time the buffer must keep reachable.
    span: f64,
}

impl HistoryBuffer {
    /// `span` is the largest delay `ε σ_max` the solver will request.
    pub fn new(initial: Density1, span: f64) -> Self {
        let m1 = initial.mass();
        Self {
            times: vec![0.0],
            snapshots: vec![initial],
            m1: vec![m1],
            m1_int: vec![0.0],
            span,
        }
    }

    pub fn latest_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn latest(&self) -> &Density1 {
        self.snapshots.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append a snapshot at time `t` (strictly increasing).
    pub fn push(&mut self, t: f64, f: Density1) {
        debug_assert!(t > self.latest_time());
        let m_new = f.mass();
        let m_old = *self.m1.last().unwrap();
        let dt = t - self.latest_time();
        let int_new = self.m1_int.last().unwrap() + 0.5 * dt * (m_old + m_new);
        self.times.push(t);
        self.snapshots.push(f);
        self.m1.push(m_new);
        self.m1_int.push(int_new);
        self.evict();
    }

    /// Replace the most recent snapshot (corrector pass of a two-stage
    /// step).
    pub fn replace_last(&mut self, f: Density1) {
        let idx = self.snapshots.len() - 1;
        let m_new = f.mass();
        self.snapshots[idx] = f;
        self.m1[idx] = m_new;
        if idx > 0 {
            let dt = self.times[idx] - self.times[idx - 1];
            self.m1_int[idx] = self.m1_int[idx - 1] + 0.5 * dt * (self.m1[idx - 1] + m_new);
        }
    }

    fn evict(&mut self) {
        let cutoff = self.latest_time() - self.span - 1e-12;
        let mut drop = 0;
        while drop + 2 < self.times.len() && self.times[drop + 1] < cutoff {
            drop += 1;
        }
        if drop > 0 {
            self.times.drain(..drop);
            self.snapshots.drain(..drop);
            self.m1.drain(..drop);
            self.m1_int.drain(..drop);
        }
    }

    fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let first = self.times[0];
        let last = self.latest_time();
        if t < first - 1e-9 || t > last + 1e-9 {
            return Err(Error::Config(format!(
                "history gap: requested t = {t}, buffer spans [{first}, {last}]"
            )));
        }
        let t = t.clamp(first, last);
        let idx = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok((i, 0.0)),
            Err(i) => i,
        };
        let i = idx - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Ok((i, w))
    }

    /// Linear-in-time interpolation of the stored density at `t`.
    pub fn interp(&self, t: f64) -> Result<Density1> {
        let (i, w) = self.bracket(t)?;
        if w == 0.0 {
            return Ok(self.snapshots[i].clone());
        }
        let a = &self.snapshots[i];
        let b = &self.snapshots[i + 1];
        let values = a
            .values
            .iter()
            .zip(b.values.iter())
            .map(|(&x, &y)| x * (1.0 - w) + y * w)
            .collect();
        Ok(Density1 {
            grid: a.grid,
            values,
        })
    }

    /// `M_1(t)` by linear interpolation.
    pub fn m1_at(&self, t: f64) -> Result<f64> {
        let (i, w) = self.bracket(t)?;
        Ok(if w == 0.0 {
            self.m1[i]
        } else {
            self.m1[i] * (1.0 - w) + self.m1[i + 1] * w
        })
    }

    /// `∫_a^b M_1(s) ds` from the trapezoid prefix sums.
    pub fn m1_integral(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.cumulative(b)? - self.cumulative(a)?)
    }

    fn cumulative(&self, t: f64) -> Result<f64> {
        let (i, w) = self.bracket(t)?;
        if w == 0.0 {
            return Ok(self.m1_int[i]);
        }
        let dt = self.times[i + 1] - self.times[i];
        let m_t = self.m1[i] * (1.0 - w) + self.m1[i + 1] * w;
        Ok(self.m1_int[i] + 0.5 * w * dt * (self.m1[i] + m_t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use approx::assert_relative_eq;

    fn density(grid: VelocityGrid, scale: f64) -> Density1 {
        Density1::from_fn(grid, |v| scale * (-v * v).exp())
    }

    #[test]
    fn interp_between_snapshots() {
        let g = VelocityGrid::new(-1.0, 1.0, 8).unwrap();
        let mut h = HistoryBuffer::new(density(g, 1.0), 10.0);
        h.push(1.0, density(g, 3.0));
        let mid = h.interp(0.5).unwrap();
        for (i, &v) in mid.values.iter().enumerate() {
            assert_relative_eq!(v, 2.0 * (-g.center(i).powi(2)).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn m1_integral_is_trapezoid_exact_for_linear_mass() {
        let g = VelocityGrid::new(-1.0, 1.0, 4).unwrap();
        let mut h = HistoryBuffer::new(density(g, 1.0), 10.0);
        for k in 1..=10 {
            let t = k as f64 * 0.1;
            h.push(t, density(g, 1.0 + t));
        }
        let m0 = density(g, 1.0).mass();
        // M1(t) = m0 (1 + t): ∫_a^b = m0 (b - a + (b^2 - a^2)/2)
        let (a, b) = (0.25, 0.85);
        let exact = m0 * (b - a + 0.5 * (b * b - a * a));
        assert_relative_eq!(h.m1_integral(a, b).unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn gap_requests_error() {
        let g = VelocityGrid::new(-1.0, 1.0, 4).unwrap();
        let mut h = HistoryBuffer::new(density(g, 1.0), 0.5);
        for k in 1..=20 {
            h.push(k as f64 * 0.1, density(g, 1.0));
        }
        // span 0.5 behind t = 2.0: old times evicted
        assert!(h.interp(0.2).is_err());
        assert!(h.interp(1.9).is_ok());
        assert!(h.interp(2.5).is_err());
    }

    #[test]
    fn replace_last_updates_integral() {
        let g = VelocityGrid::new(-1.0, 1.0, 4).unwrap();
        let mut h = HistoryBuffer::new(density(g, 1.0), 10.0);
        h.push(1.0, density(g, 5.0));
        h.replace_last(density(g, 3.0));
        let m0 = density(g, 1.0).mass();
        assert_relative_eq!(
            h.m1_integral(0.0, 1.0).unwrap(),
            0.5 * (m0 + 3.0 * m0),
            max_relative = 1e-12
        );
    }
}

//! Fixed-step classical Runge-Kutta integrator with dense output.

use crate::error::{Error, Result};

/// Dense trajectory: states recorded at `t0 + i dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Classical 4th-order one-step integration of `dy/dt = rhs(t, y)` from
/// `y0` to `t_end`, recording the state at every multiple of `dt`.
///
/// The final partial step (when `t_end` is not a multiple of `dt`) is taken
/// with the shortened step so the trajectory always ends exactly at `t_end`.
/// Aborts with a diagnostic if any state component becomes non-finite.
pub fn integrate_ode(
    rhs: impl Fn(f64, &[f64]) -> Vec<f64>,
    y0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if dt <= 0.0 {
        return Err(Error::Config(format!("integrate_ode: dt = {dt} must be > 0")));
    }
    if t_end < 0.0 {
        return Err(Error::Config(format!(
            "integrate_ode: t_end = {t_end} must be >= 0"
        )));
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];

    let step = |t: f64, y: &[f64], h: f64| -> Vec<f64> {
        let k1 = rhs(t, y);
        let y2: Vec<f64> = (0..dim).map(|i| y[i] + 0.5 * h * k1[i]).collect();
        let k2 = rhs(t + 0.5 * h, &y2);
        let y3: Vec<f64> = (0..dim).map(|i| y[i] + 0.5 * h * k2[i]).collect();
        let k3 = rhs(t + 0.5 * h, &y3);
        let y4: Vec<f64> = (0..dim).map(|i| y[i] + h * k3[i]).collect();
        let k4 = rhs(t + h, &y4);
        (0..dim)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };

    while t < t_end - 1e-12 * dt {
        let h = dt.min(t_end - t);
        y = step(t, &y, h);
        t += h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "integrate_ode: non-finite state at t = {t}"
            )));
        }
        times.push(t);
        states.push(y.clone());
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_rhs_is_constant() {
        let traj = integrate_ode(|_, y| vec![0.0; y.len()], &[1.0, -2.0], 1.0, 0.1).unwrap();
        for s in &traj.states {
            assert_eq!(s, &vec![1.0, -2.0]);
        }
    }

    #[test]
    fn exponential_decay_order() {
        let traj = integrate_ode(|_, y| vec![-y[0]], &[1.0], 1.0, 1e-3).unwrap();
        assert_relative_eq!(traj.last()[0], (-1.0_f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn detects_blowup() {
        // y' = y^2 from 1 blows up at t = 1
        let res = integrate_ode(|_, y| vec![y[0] * y[0]], &[1.0], 2.0, 1e-3);
        assert!(res.is_err());
    }

    #[test]
    fn partial_final_step_lands_on_t_end() {
        let traj = integrate_ode(|_, y| vec![-y[0]], &[1.0], 0.35, 0.1).unwrap();
        assert_relative_eq!(*traj.times.last().unwrap(), 0.35, epsilon = 1e-12);
    }
}

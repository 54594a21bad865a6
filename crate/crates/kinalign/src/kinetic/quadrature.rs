//! Gauss-Legendre quadrature for the semigroup duration integrals.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature for `∫_0^∞ e^{-decay σ} (…) dσ` integrals behind the
/// semigroups: Gauss-Legendre on `[0, σ_max]` with `σ_max` chosen so the
/// dropped tail satisfies `e^{-decay σ_max} <= tail_tol`.
#[derive(Debug, Clone)]
pub struct SemigroupQuadrature {
    pub sigma_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub tail_tol: f64,
}

impl SemigroupQuadrature {
    /// `decay` is the L1-contraction rate of the semigroup (`μ11/2` for the
    /// pair semigroup, `μ12` for the triple one).
    pub fn for_decay(decay: f64, tail_tol: f64, n_sigma: usize) -> Result<Self> {
        if decay <= 0.0 {
            return Err(Error::Config(format!(
                "semigroup quadrature needs a positive decay rate, got {decay}"
            )));
        }
        if !(0.0 < tail_tol && tail_tol < 1.0) {
            return Err(Error::Config(format!("tail_tol out of (0,1): {tail_tol}")));
        }
        let sigma_max = (1.0 / tail_tol).ln() / decay;
        Ok(Self::on_interval(sigma_max, tail_tol, n_sigma))
    }

    /// Rule on the explicit interval `[0, sigma_max]`.
    pub fn on_interval(sigma_max: f64, tail_tol: f64, n_sigma: usize) -> Self {
        let (x, w) = gauss_legendre(n_sigma);
        let half = 0.5 * sigma_max;
        let nodes = x.iter().map(|&xi| half * (xi + 1.0)).collect();
        let weights = w.iter().map(|&wi| half * wi).collect();
        Self {
            sigma_max,
            nodes,
            weights,
            tail_tol,
        }
    }

    /// Same rule truncated to `[0, min(sigma_max, cap)]`; used for the
    /// delayed gain integrals whose upper limit is `t/ε` at early times.
    pub fn truncated(&self, cap: f64) -> Self {
        if cap >= self.sigma_max {
            return self.clone();
        }
        Self::on_interval(cap.max(0.0), self.tail_tol, self.nodes.len())
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_0^{σmax} f(σ) dσ` under this rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

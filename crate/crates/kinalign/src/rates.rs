//! Coagulation/fragmentation rate tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size-dependence of a rate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateLaw {
    /// The same rate for every size pair.
    Constant(f64),
    /// Explicit symmetric table, 1-indexed sizes up to `kmax`;
    /// `table[(i-1) * kmax + (j-1)]`. Out-of-range pairs have rate 0.
    Table { kmax: usize, values: Vec<f64> },
}

impl RateLaw {
    pub fn constant(rate: f64) -> Self {
        RateLaw::Constant(rate)
    }

    /// Build a symmetric table from `(i, j, rate)` entries (both orders
    /// are filled).
    pub fn from_entries(kmax: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; kmax * kmax];
        for &(i, j, r) in entries {
            if i == 0 || j == 0 || i > kmax || j > kmax {
                return Err(Error::Config(format!(
                    "rate entry ({i},{j}) outside 1..={kmax}"
                )));
            }
            if r < 0.0 {
                return Err(Error::Config(format!("negative rate at ({i},{j}): {r}")));
            }
            values[(i - 1) * kmax + (j - 1)] = r;
            values[(j - 1) * kmax + (i - 1)] = r;
        }
        Ok(RateLaw::Table { kmax, values })
    }

    /// Rate for the unordered size pair `(i, j)`, sizes 1-indexed.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            RateLaw::Constant(r) => *r,
            RateLaw::Table { kmax, values } => {
                if i == 0 || j == 0 || i > *kmax || j > *kmax {
                    0.0
                } else {
                    values[(i - 1) * kmax + (j - 1)]
                }
            }
        }
    }
}

/// Full parameter set for the interacting-group process: coagulation rates
/// `λ(i,j)`, fragmentation rates `μ(i,j)`, the collision-duration scale `ε`
/// and the size truncation `kmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub lambda: RateLaw,
    pub mu: RateLaw,
    pub epsilon: f64,
    pub kmax: usize,
}

impl RateTable {
    pub fn new(lambda: RateLaw, mu: RateLaw, epsilon: f64, kmax: usize) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
        }
        if kmax == 0 {
            return Err(Error::Config("kmax must be >= 1".into()));
        }
        for law in [&lambda, &mu] {
            if let RateLaw::Constant(r) = law {
                if *r < 0.0 {
                    return Err(Error::Config(format!("negative constant rate {r}")));
                }
            }
        }
        Ok(Self {
            lambda,
            mu,
            epsilon,
            kmax,
        })
    }

    /// Convenience constructor for the three-species solvers, which only
    /// use the `(1,1)` and `(1,2)` channels.
    pub fn pair_triple(l11: f64, l12: f64, m11: f64, m12: f64, epsilon: f64) -> Result<Self> {
        let lambda = RateLaw::from_entries(3, &[(1, 1, l11), (1, 2, l12)])?;
        let mu = RateLaw::from_entries(3, &[(1, 1, m11), (1, 2, m12)])?;
        Self::new(lambda, mu, epsilon, 3)
    }

    #[inline]
    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.lambda.get(i, j)
    }

    #[inline]
    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu.get(i, j)
    }

    #[inline]
    pub fn l11(&self) -> f64 {
        self.lambda(1, 1)
    }

    #[inline]
    pub fn l12(&self) -> f64 {
        self.lambda(1, 2)
    }

    #[inline]
    pub fn m11(&self) -> f64 {
        self.mu(1, 1)
    }

    #[inline]
    pub fn m12(&self) -> f64 {
        self.mu(1, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_symmetric() {
        let law = RateLaw::from_entries(4, &[(1, 2, 0.7), (3, 4, 1.1)]).unwrap();
        assert_eq!(law.get(1, 2), law.get(2, 1));
        assert_eq!(law.get(4, 3), 1.1);
        assert_eq!(law.get(1, 1), 0.0);
        assert_eq!(law.get(5, 1), 0.0);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        assert!(RateTable::new(RateLaw::constant(1.0), RateLaw::constant(1.0), 0.0, 3).is_err());
        assert!(RateTable::new(RateLaw::constant(1.0), RateLaw::constant(1.0), -1.0, 3).is_err());
    }

    #[test]
    fn rejects_negative_rates() {
        assert!(RateLaw::from_entries(2, &[(1, 1, -0.5)]).is_err());
        assert!(RateTable::new(RateLaw::constant(-1.0), RateLaw::constant(1.0), 0.1, 3).is_err());
    }

    #[test]
    fn pair_triple_channels() {
        let r = RateTable::pair_triple(1.0, 0.5, 2.0, 1.0, 0.1).unwrap();
        assert_eq!(r.l11(), 1.0);
        assert_eq!(r.l12(), 0.5);
        assert_eq!(r.m11(), 2.0);
        assert_eq!(r.m12(), 1.0);
        assert_eq!(r.lambda(2, 2), 0.0);
    }
}

//! Event propensities, aggregated by group size.
//!
//! Rates depend only on group sizes, so channels are stored per size class:
//! a coagulation class `(i, j)` carries the summed rate of all unordered
//! group pairs with those sizes, and a fragmentation class `(k, j)` the
//! summed rate of all size-k groups splitting into `(j, k-j)`.

use crate::rates::RateTable;

use super::Ensemble;

/// One coagulation size class: unordered pairs of groups with sizes
/// `(size_a, size_b)`, `size_a <= size_b`.
#[derive(Debug, Clone, Copy)]
pub struct CoagChannel {
    pub size_a: usize,
    pub size_b: usize,
    pub rate: f64,
}

/// One fragmentation size class: a size-`size` group splitting into
/// `(split, size - split)`, `split <= size - split`.
#[derive(Debug, Clone, Copy)]
pub struct FragChannel {
    pub size: usize,
    pub split: usize,
    pub rate: f64,
}

/// All active event channels and their total rate.
#[derive(Debug, Clone)]
pub struct Propensities {
    pub coag: Vec<CoagChannel>,
    pub frag: Vec<FragChannel>,
    pub total: f64,
}

impl Propensities {
    /// Rate of one unordered pair of groups with sizes `(i, j)`.
    pub fn pair_rate(rates: &RateTable, omega: f64, i: usize, j: usize) -> f64 {
        rates.lambda(i, j) / omega
    }

    /// Total fragmentation rate of a single size-`k` group:
    /// `(1/2) Σ_{j=1}^{k-1} μ(j, k-j)`, optionally `ε`-accelerated.
    pub fn group_frag_rate(rates: &RateTable, k: usize, scaled: bool) -> f64 {
        let mut r = 0.0;
        for j in 1..k {
            r += 0.5 * rates.mu(j, k - j);
        }
        if scaled {
            r / rates.epsilon
        } else {
            r
        }
    }
}

/// Build channel propensities from a size census (`census[k]` = number of
/// size-`k` groups, sizes 1-indexed with `census[0]` unused).
pub(crate) fn propensities_from_census(
    census: &[usize],
    rates: &RateTable,
    omega: f64,
    scaled: bool,
) -> Propensities {
    let mut coag = Vec::new();
    let mut frag = Vec::new();
    let mut total = 0.0;
    let sizes: Vec<usize> = (1..census.len()).filter(|&k| census[k] > 0).collect();

    for (a, &i) in sizes.iter().enumerate() {
        for &j in &sizes[a..] {
            let npairs = if i == j {
                let n = census[i] as f64;
                0.5 * n * (n - 1.0)
            } else {
                census[i] as f64 * census[j] as f64
            };
            if npairs <= 0.0 {
                continue;
            }
            let rate = rates.lambda(i, j) / omega * npairs;
            if rate > 0.0 {
                coag.push(CoagChannel {
                    size_a: i,
                    size_b: j,
                    rate,
                });
                total += rate;
            }
        }
    }

    for &k in &sizes {
        if k < 2 {
            continue;
        }
        let nk = census[k] as f64;
        for j in 1..=(k / 2) {
            // unordered split {j, k-j}: the ordered loss term
            // (1/2) sum_j mu(j,k-j) counts it twice unless j = k-j
            let sym = if 2 * j == k { 0.5 } else { 1.0 };
            let mut rate = sym * rates.mu(j, k - j) * nk;
            if scaled {
                rate /= rates.epsilon;
            }
            if rate > 0.0 {
                frag.push(FragChannel {
                    size: k,
                    split: j,
                    rate,
                });
                total += rate;
            }
        }
    }

    Propensities { coag, frag, total }
}

/// Channel propensities of an ensemble.
pub fn propensities(e: &Ensemble, rates: &RateTable, scaled: bool) -> Propensities {
    let max = e.max_size();
    let mut census = vec![0usize; max + 1];
    for g in &e.groups {
        census[g.len()] += 1;
    }
    propensities_from_census(&census, rates, e.omega, scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rates(l11: f64, m11: f64) -> RateTable {
        RateTable::pair_triple(l11, 0.0, m11, 0.0, 0.5).unwrap()
    }

    #[test]
    fn two_singletons_single_channel() {
        let e = Ensemble::new(vec![vec![0.1], vec![-0.2]], 1.0);
        let p = propensities(&e, &rates(1.0, 1.0), false);
        assert_eq!(p.coag.len(), 1);
        assert_relative_eq!(p.coag[0].rate, 1.0);
        assert!(p.frag.is_empty());
        assert_relative_eq!(p.total, 1.0);
    }

    #[test]
    fn pair_fragmentation_rate_is_half_mu() {
        let e = Ensemble::new(vec![vec![0.5, -0.5]], 1.0);
        let p = propensities(&e, &rates(0.0, 1.0), false);
        assert!(p.coag.is_empty());
        assert_eq!(p.frag.len(), 1);
        assert_relative_eq!(p.frag[0].rate, 0.5);
    }

    #[test]
    fn scaled_flag_accelerates_fragmentation_only() {
        let e = Ensemble::new(vec![vec![0.5, -0.5], vec![0.0]], 1.0);
        let r = rates(1.0, 1.0);
        let p = propensities(&e, &r, true);
        let frag: f64 = p.frag.iter().map(|c| c.rate).sum();
        let coag: f64 = p.coag.iter().map(|c| c.rate).sum();
        assert_relative_eq!(frag, 0.5 / r.epsilon);
        assert_relative_eq!(coag, 0.0); // lambda(1,2) = 0 in this table
    }

    #[test]
    fn empty_ensemble_total_zero() {
        let e = Ensemble::new(vec![], 1.0);
        let p = propensities(&e, &rates(1.0, 1.0), false);
        assert_eq!(p.total, 0.0);
    }

    #[test]
    fn same_size_pairs_counted_once() {
        // 4 singletons: C(4,2) = 6 unordered pairs
        let e = Ensemble::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], 2.0);
        let p = propensities(&e, &rates(3.0, 0.0), false);
        assert_relative_eq!(p.total, 6.0 * 3.0 / 2.0);
    }

    #[test]
    fn triple_split_channels() {
        // size 3 -> {1,2} only; with constant mu the class rate is mu * N
        let r = RateTable::new(
            crate::rates::RateLaw::constant(0.0),
            crate::rates::RateLaw::constant(2.0),
            1.0,
            8,
        )
        .unwrap();
        let e = Ensemble::new(vec![vec![0.0, 1.0, 2.0]], 1.0);
        let p = propensities(&e, &r, false);
        assert_eq!(p.frag.len(), 1);
        assert_relative_eq!(p.frag[0].rate, 2.0);
        // size 4 -> {1,3} at mu and {2,2} at mu/2
        let e4 = Ensemble::new(vec![vec![0.0, 1.0, 2.0, 3.0]], 1.0);
        let p4 = propensities(&e4, &r, false);
        let total: f64 = p4.frag.iter().map(|c| c.rate).sum();
        assert_relative_eq!(total, 2.0 + 1.0);
        assert_relative_eq!(
            total,
            Propensities::group_frag_rate(&r, 4, false),
            epsilon = 1e-14
        );
    }
}

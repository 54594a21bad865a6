//! Event loop: exponential waiting times, closed-form drift, jump events.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::rates::RateTable;

use super::observables::{observables, Observables};
use super::propensity::propensities;
use super::{Ensemble, EventKind, EventRecord, RunRng};

/// Advance the alignment drift of every group by `dt` (slow time). With
/// `scaled` set the effective duration is `dt/ε`. Exact: the drift is the
/// closed-form flow, singletons never move, group means are preserved.
pub fn advance_drift(e: &mut Ensemble, dt: f64, scaled: bool, epsilon: f64) {
    debug_assert!(dt >= 0.0);
    if dt == 0.0 {
        return;
    }
    let dt_eff = if scaled { dt / epsilon } else { dt };
    let c = (-dt_eff).exp();
    for g in &mut e.groups {
        let k = g.len();
        if k < 2 {
            continue;
        }
        let mean = g.iter().sum::<f64>() / k as f64;
        for v in g {
            *v = mean + c * (*v - mean);
        }
    }
    e.t += dt;
}

/// Outcome of one Gillespie step.
#[derive(Debug, Clone, Copy)]
pub enum StepOutcome {
    /// An event fired at the recorded time.
    Event(EventRecord),
    /// Total propensity is zero: the configuration is absorbing and only
    /// drift remains.
    Absorbing,
}

/// One exact Gillespie step: sample the exponential waiting time from the
/// current total propensity (constant between events, since rates depend
/// only on sizes), drift everyone over the waiting interval, then select a
/// channel proportionally and execute it.
///
/// Coagulation concatenates the two chosen groups; fragmentation of a
/// size-k group into `(j, k-j)` sends a uniformly chosen j-subset of its
/// members into the first fragment.
pub fn step_event(
    e: &mut Ensemble,
    rates: &RateTable,
    scaled: bool,
    rng: &mut RunRng,
) -> Result<StepOutcome> {
    let props = propensities(e, rates, scaled);
    if props.total <= 0.0 {
        return Ok(StepOutcome::Absorbing);
    }
    let u: f64 = rng.random();
    let tau = -(1.0 - u).ln() / props.total;
    advance_drift(e, tau, scaled, rates.epsilon);
    select_and_apply(e, &props, rng)
}

fn indices_of_size(e: &Ensemble, size: usize) -> Vec<usize> {
    e.groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.len() == size)
        .map(|(idx, _)| idx)
        .collect()
}

fn apply_coagulation(
    e: &mut Ensemble,
    size_a: usize,
    size_b: usize,
    rng: &mut RunRng,
) -> Result<EventRecord> {
    let (ia, ib) = if size_a == size_b {
        let bucket = indices_of_size(e, size_a);
        if bucket.len() < 2 {
            return Err(Error::Numerical(
                "coagulation channel selected without a pair".into(),
            ));
        }
        let x = rng.random_range(0..bucket.len());
        let mut y = rng.random_range(0..bucket.len() - 1);
        if y >= x {
            y += 1;
        }
        (bucket[x], bucket[y])
    } else {
        let ba = indices_of_size(e, size_a);
        let bb = indices_of_size(e, size_b);
        if ba.is_empty() || bb.is_empty() {
            return Err(Error::Numerical(
                "coagulation channel selected without partners".into(),
            ));
        }
        (
            ba[rng.random_range(0..ba.len())],
            bb[rng.random_range(0..bb.len())],
        )
    };
    let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
    let tail = e.groups.swap_remove(hi);
    e.groups[lo].extend_from_slice(&tail);
    Ok(EventRecord {
        t: e.t,
        kind: EventKind::Coagulation,
        sizes: (size_a, size_b),
    })
}

fn apply_fragmentation(
    e: &mut Ensemble,
    size: usize,
    split: usize,
    rng: &mut RunRng,
) -> Result<EventRecord> {
    let bucket = indices_of_size(e, size);
    if bucket.is_empty() {
        return Err(Error::Numerical(
            "fragmentation channel selected without a group".into(),
        ));
    }
    let idx = bucket[rng.random_range(0..bucket.len())];
    let mut members = e.groups.swap_remove(idx);
    // uniform split-subset choice over the C(k, j) possibilities
    let k = members.len();
    for pos in 0..split {
        let pick = rng.random_range(pos..k);
        members.swap(pos, pick);
    }
    let rest = members.split_off(split);
    e.groups.push(members);
    e.groups.push(rest);
    Ok(EventRecord {
        t: e.t,
        kind: EventKind::Fragmentation,
        sizes: (split, size - split),
    })
}

/// Run parameters for the particle simulator.
#[derive(Debug, Clone)]
pub struct ParticleConfig {
    pub t_end: f64,
    pub output_interval: f64,
    /// Largest size reported in the per-size observable vectors.
    pub kmax_obs: usize,
    /// Grid used to histogram singleton velocities.
    pub grid: VelocityGrid,
    /// Apply the short-collision scaling (`μ/ε` rates, `U/ε` drift).
    pub scaled: bool,
    pub record_events: bool,
}

/// Time series produced by [`ParticleRun::run`].
#[derive(Debug, Clone)]
pub struct ParticleRun {
    pub times: Vec<f64>,
    pub series: Vec<Observables>,
    pub events: Vec<EventRecord>,
    pub final_state: Ensemble,
}

impl ParticleRun {
    /// Event loop with observables recorded at multiples of the output
    /// interval (drift-advanced to the exact output time between events).
    /// Deterministic for a fixed seed and configuration.
    pub fn run(
        mut e: Ensemble,
        rates: &RateTable,
        cfg: &ParticleConfig,
        rng: &mut RunRng,
    ) -> Result<ParticleRun> {
        if cfg.output_interval <= 0.0 {
            return Err(Error::Config("output_interval must be > 0".into()));
        }
        if cfg.t_end < 0.0 {
            return Err(Error::Config("t_end must be >= 0".into()));
        }
        let mut times = Vec::new();
        let mut series = Vec::new();
        let mut events = Vec::new();

        let record = |e: &Ensemble, times: &mut Vec<f64>, series: &mut Vec<Observables>| {
            times.push(e.t);
            series.push(observables(e, cfg.kmax_obs, &cfg.grid));
        };
        record(&e, &mut times, &mut series);

        let n_out = (cfg.t_end / cfg.output_interval).round() as usize;
        let mut next_out = 1usize;

        'outer: loop {
            let props = propensities(&e, rates, cfg.scaled);
            let t_event = if props.total > 0.0 {
                let u: f64 = rng.random();
                e.t - (1.0 - u).ln() / props.total
            } else {
                f64::INFINITY
            };

            // drift through every output time before the next event
            while next_out <= n_out {
                let t_out = next_out as f64 * cfg.output_interval;
                if t_out > t_event || t_out > cfg.t_end {
                    break;
                }
                let dt_out = t_out - e.t;
                advance_drift(&mut e, dt_out, cfg.scaled, rates.epsilon);
                e.t = t_out; // pin output times exactly
                record(&e, &mut times, &mut series);
                next_out += 1;
            }
            if t_event > cfg.t_end {
                break 'outer;
            }

            let dt_evt = t_event - e.t;
            advance_drift(&mut e, dt_evt, cfg.scaled, rates.epsilon);
            e.t = t_event;
            match select_and_apply(&mut e, &props, rng)? {
                StepOutcome::Event(rec) => {
                    if cfg.record_events {
                        events.push(rec);
                    }
                }
                StepOutcome::Absorbing => break 'outer,
            }
        }

        // trailing outputs after the last event
        while next_out <= n_out {
            let t_out = next_out as f64 * cfg.output_interval;
            let dt_out = t_out - e.t;
            advance_drift(&mut e, dt_out, cfg.scaled, rates.epsilon);
            e.t = t_out;
            record(&e, &mut times, &mut series);
            next_out += 1;
        }

        Ok(ParticleRun {
            times,
            series,
            events,
            final_state: e,
        })
    }
}

/// Select and execute a channel at the current (already drift-advanced)
/// time, given the pre-event propensities.
fn select_and_apply(
    e: &mut Ensemble,
    props: &super::propensity::Propensities,
    rng: &mut RunRng,
) -> Result<StepOutcome> {
    if props.total <= 0.0 {
        return Ok(StepOutcome::Absorbing);
    }
    let mut r = rng.random::<f64>() * props.total;
    for c in &props.coag {
        r -= c.rate;
        if r < 0.0 {
            let record = apply_coagulation(e, c.size_a, c.size_b, rng)?;
            e.event_count += 1;
            return Ok(StepOutcome::Event(record));
        }
    }
    for c in &props.frag {
        r -= c.rate;
        if r < 0.0 {
            let record = apply_fragmentation(e, c.size, c.split, rng)?;
            e.event_count += 1;
            return Ok(StepOutcome::Event(record));
        }
    }
    let record = match props.frag.last() {
        Some(c) => apply_fragmentation(e, c.size, c.split, rng)?,
        None => {
            let c = props.coag.last().expect("nonzero total with no channels");
            apply_coagulation(e, c.size_a, c.size_b, rng)?
        }
    };
    e.event_count += 1;
    Ok(StepOutcome::Event(record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn unit_rates() -> RateTable {
        RateTable::pair_triple(1.0, 0.0, 1.0, 0.0, 0.5).unwrap()
    }

    #[test]
    fn drift_identity_at_zero() {
        let mut e = Ensemble::new(vec![vec![1.0, -1.0]], 1.0);
        let before = e.clone();
        advance_drift(&mut e, 0.0, false, 0.5);
        assert_eq!(e.groups, before.groups);
    }

    #[test]
    fn drift_halves_separation_at_ln2() {
        let mut e = Ensemble::new(vec![vec![1.0, -1.0]], 1.0);
        advance_drift(&mut e, 2.0_f64.ln(), false, 1.0);
        assert_relative_eq!(e.groups[0][0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(e.groups[0][1], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn drift_variance_contracts_at_square_rate() {
        let mut e = Ensemble::new(vec![vec![2.0, 0.5, -1.0, 0.1]], 1.0);
        let var = |g: &[f64]| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        let v0 = var(&e.groups[0]);
        let dt = 0.7;
        advance_drift(&mut e, dt, false, 1.0);
        assert_relative_eq!(var(&e.groups[0]), v0 * (-2.0 * dt).exp(), epsilon = 1e-12);
    }

    #[test]
    fn scaled_drift_uses_fast_time() {
        let eps = 0.25;
        let mut a = Ensemble::new(vec![vec![1.0, 0.0]], 1.0);
        let mut b = Ensemble::new(vec![vec![1.0, 0.0]], 1.0);
        advance_drift(&mut a, 0.5, true, eps);
        advance_drift(&mut b, 0.5 / eps, false, eps);
        assert_relative_eq!(a.groups[0][0], b.groups[0][0], epsilon = 1e-14);
    }

    #[test]
    fn two_singletons_merge() {
        let mut e = Ensemble::new(vec![vec![1.0], vec![-1.0]], 1.0);
        let mut rng = RunRng::seed_from_u64(7);
        match step_event(&mut e, &unit_rates(), false, &mut rng).unwrap() {
            StepOutcome::Event(rec) => {
                assert_eq!(rec.kind, EventKind::Coagulation);
                assert_eq!(rec.sizes, (1, 1));
            }
            StepOutcome::Absorbing => panic!("expected an event"),
        }
        assert_eq!(e.groups.len(), 1);
        assert_eq!(e.groups[0].len(), 2);
    }

    #[test]
    fn absorbing_state_signalled() {
        let rates = RateTable::pair_triple(0.0, 0.0, 1.0, 0.0, 0.5).unwrap();
        let mut e = Ensemble::new(vec![vec![1.0], vec![-1.0]], 1.0);
        let mut rng = RunRng::seed_from_u64(7);
        assert!(matches!(
            step_event(&mut e, &rates, false, &mut rng).unwrap(),
            StepOutcome::Absorbing
        ));
    }

    #[test]
    fn conservation_over_many_events() {
        let mut e = Ensemble::new(
            (0..200).map(|i| vec![(i as f64) * 0.01 - 1.0]).collect(),
            200.0,
        );
        let n0 = e.individuals();
        let s0 = e.velocity_sum();
        let mut rng = RunRng::seed_from_u64(42);
        let rates = unit_rates();
        for _ in 0..500 {
            match step_event(&mut e, &rates, false, &mut rng).unwrap() {
                StepOutcome::Event(_) => {}
                StepOutcome::Absorbing => break,
            }
        }
        assert_eq!(e.individuals(), n0);
        assert_relative_eq!(e.velocity_sum(), s0, epsilon = 1e-9 * s0.abs().max(1.0));
        assert!(e.event_count > 0);
    }

    #[test]
    fn fragment_subset_choice_is_uniform() {
        // splitting (a,b,c) into 1+2: each singleton choice should appear
        // with probability 1/3; chi-square with 2 dof at alpha = 0.01
        let mut rng = RunRng::seed_from_u64(123);
        let n = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let mut e = Ensemble::new(vec![vec![0.0, 1.0, 2.0]], 1.0);
            apply_fragmentation(&mut e, 3, 1, &mut rng).unwrap();
            let singleton = e.groups.iter().find(|g| g.len() == 1).unwrap();
            counts[singleton[0] as usize] += 1;
        }
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 99th percentile of chi-square with 2 dof
        assert!(chi2 < 9.21, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn waiting_times_are_exponential() {
        // frozen configuration: resample the first waiting time repeatedly
        // and KS-test against Exp(total). n = 10^4 at alpha = 0.01.
        let e = Ensemble::new(vec![vec![0.3], vec![-0.3], vec![0.9]], 1.0);
        let rates = unit_rates();
        let props = propensities(&e, &rates, false);
        let total = props.total;
        assert_relative_eq!(total, 3.0); // C(3,2) pairs at rate 1
        let mut rng = RunRng::seed_from_u64(99);
        let n = 10_000;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                -(1.0 - u).ln() / total
            })
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d_stat: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let cdf = 1.0 - (-total * x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d_stat = d_stat.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        // asymptotic KS critical value at alpha = 0.01
        let crit = 1.628 / (n as f64).sqrt();
        assert!(d_stat < crit, "KS statistic {d_stat} >= {crit}");
    }

    #[test]
    fn run_is_deterministic_for_fixed_seed() {
        let grid = VelocityGrid::new(-2.0, 2.0, 16).unwrap();
        let cfg = ParticleConfig {
            t_end: 1.0,
            output_interval: 0.25,
            kmax_obs: 4,
            grid,
            scaled: false,
            record_events: true,
        };
        let make = || {
            let e = Ensemble::new((0..100).map(|i| vec![(i % 7) as f64 * 0.1]).collect(), 100.0);
            let mut rng = RunRng::seed_from_u64(2024);
            ParticleRun::run(e, &unit_rates(), &cfg, &mut rng).unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(a.times, b.times);
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.series.iter().zip(b.series.iter()) {
            assert_eq!(x.m, y.m);
            assert_eq!(x.v, y.v);
            assert_eq!(x.histogram, y.histogram);
        }
    }

    #[test]
    fn zero_rates_keep_singleton_observables_constant() {
        let grid = VelocityGrid::new(-2.0, 2.0, 8).unwrap();
        let cfg = ParticleConfig {
            t_end: 1.0,
            output_interval: 0.2,
            kmax_obs: 3,
            grid,
            scaled: false,
            record_events: false,
        };
        let rates = RateTable::pair_triple(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let e = Ensemble::new(vec![vec![0.5], vec![-0.5], vec![1.0]], 3.0);
        let mut rng = RunRng::seed_from_u64(5);
        let out = ParticleRun::run(e, &rates, &cfg, &mut rng).unwrap();
        for obs in &out.series {
            assert_eq!(obs.m, out.series[0].m);
            assert_eq!(obs.v, out.series[0].v);
        }
        assert_eq!(out.times.len(), 6);
    }

    #[test]
    fn variance_is_nonincreasing_along_run() {
        let grid = VelocityGrid::new(-3.0, 3.0, 8).unwrap();
        let cfg = ParticleConfig {
            t_end: 2.0,
            output_interval: 0.05,
            kmax_obs: 5,
            grid,
            scaled: false,
            record_events: false,
        };
        let e = Ensemble::new(
            (0..300).map(|i| vec![((i * 13 % 61) as f64 / 30.0) - 1.0]).collect(),
            300.0,
        );
        let mut rng = RunRng::seed_from_u64(31);
        let out = ParticleRun::run(e, &unit_rates(), &cfg, &mut rng).unwrap();
        for w in out.series.windows(2) {
            assert!(
                w[1].v <= w[0].v + 1e-12 * w[0].v.max(1.0),
                "variance increased: {} -> {}",
                w[0].v,
                w[1].v
            );
        }
        // mean velocity conserved
        let m0 = out.series[0].mean_velocity;
        for obs in &out.series {
            assert_relative_eq!(obs.mean_velocity, m0, epsilon = 1e-9 * m0.abs().max(1.0));
        }
    }
}

//! Experiment dispatch: configuration in, series + snapshots + diagnostics
//! out.

use rand::SeedableRng;

use crate::error::Result;
use crate::grid::Density2;
use crate::harness::compare::SnapshotSeries;
use crate::harness::config::{ModelKind, ValidatedConfig};
use crate::harness::series::RunSeries;
use crate::kinetic::{
    FirstOrderSolver, LimitSolver, ReferenceSolver, ScalarSolver,
};
use crate::moments::{
    equilibrium_masses, integrate_ode, log_entropy, log_entropy_bound, PairMomentState,
};
use crate::particle::{Ensemble, ParticleConfig, ParticleRun, RunRng};

/// Everything a run produces.
pub struct RunOutput {
    pub series: RunSeries,
    /// one-particle snapshots at output times (kinetic models)
    pub snapshots: SnapshotSeries,
    /// pair snapshots, when the model carries them and they were requested
    pub f2_snapshots: Vec<(f64, Density2)>,
    /// tolerance breaches detected during the run (exit code 2 material)
    pub breaches: Vec<String>,
}

fn base_series(cfg: &ValidatedConfig, columns: Vec<String>) -> RunSeries {
    let mut s = RunSeries::new(columns);
    for (k, v) in cfg.echo() {
        s.set_meta(&k, v);
    }
    s.set_meta("version", env!("CARGO_PKG_VERSION"));
    s
}

/// Output-time ladder of a run.
fn output_times(t_end: f64, interval: f64) -> Vec<f64> {
    let n = (t_end / interval).round() as usize;
    (1..=n).map(|k| k as f64 * interval).collect()
}

/// Dispatch a validated configuration to its solver.
///
/// `keep_f2` additionally stores pair-density reconstructions at output
/// times (first-order and scalar models only).
pub fn run_experiment(cfg: &ValidatedConfig, keep_f2: bool) -> Result<RunOutput> {
    match cfg.model {
        ModelKind::Moments => run_moments(cfg),
        ModelKind::Particle => run_particle(cfg),
        ModelKind::Limit => run_limit(cfg),
        ModelKind::FirstOrder => run_first_order(cfg, keep_f2),
        ModelKind::Scalar => run_scalar(cfg, keep_f2),
        ModelKind::Reference => run_reference(cfg),
    }
}

fn run_moments(cfg: &ValidatedConfig) -> Result<RunOutput> {
    let rates = cfg.rates.clone();
    let f1 = cfg.f1_initial();
    let m1_0 = f1.mass();
    let i1_0 = f1.moment1();
    let m2_0 = cfg.f2_initial().as_ref().map_or(0.0, |f| f.mass());
    let i2_0 = cfg.f2_initial().as_ref().map_or(0.0, |f| f.moment1());
    let eps = rates.epsilon;

    let rhs = |_t: f64, y: &[f64]| -> Vec<f64> {
        let s = PairMomentState {
            m1: y[0],
            m2: y[1],
            i1: y[2],
            i2: y[3],
            v1: 0.0,
            v2: 0.0,
            t: 0.0,
        };
        let (dm1, dm2) = crate::moments::pair_mass_rhs(&rates, &s);
        let (di1, di2) = crate::moments::pair_first_moment_rhs(&rates, &s);
        vec![dm1, dm2, di1, di2]
    };
    let traj = integrate_ode(rhs, &[m1_0, m2_0, i1_0, i2_0], cfg.raw.run.t_end, cfg.raw.run.dt)?;

    let mut series = base_series(
        cfg,
        vec![
            "t".into(),
            "m1".into(),
            "m2".into(),
            "i1".into(),
            "i2".into(),
            "mass".into(),
            "moment".into(),
        ],
    );
    let stride = (cfg.raw.run.output_interval / cfg.raw.run.dt).round().max(1.0) as usize;
    for (k, (t, y)) in traj.times.iter().zip(traj.states.iter()).enumerate() {
        if k % stride != 0 && k != traj.times.len() - 1 {
            continue;
        }
        series.push_row(vec![
            *t,
            y[0],
            y[1],
            y[2],
            y[3],
            y[0] + 2.0 * eps * y[1],
            y[2] + 2.0 * eps * y[3],
        ])?;
    }
    let (m1_inf, m2_inf) = equilibrium_masses(&rates, m1_0 + 2.0 * eps * m2_0);
    series.set_meta("m1_equilibrium", m1_inf);
    series.set_meta("m2_equilibrium", m2_inf);

    let mut breaches = Vec::new();
    let mass0 = m1_0 + 2.0 * eps * m2_0;
    for row in &series.rows {
        let mass = row[5];
        if (mass - mass0).abs() > cfg.raw.tolerances.mass_tol * mass0.abs().max(1.0) {
            breaches.push(format!("mass drift {} at t = {}", mass - mass0, row[0]));
            break;
        }
    }
    Ok(RunOutput {
        series,
        snapshots: Vec::new(),
        f2_snapshots: Vec::new(),
        breaches,
    })
}

fn run_particle(cfg: &ValidatedConfig) -> Result<RunOutput> {
    let p = &cfg.raw.particle;
    let n = p.n_individuals;
    let omega = p.omega.unwrap_or(n as f64);
    let mut rng = RunRng::seed_from_u64(cfg.raw.run.seed);
    let groups: Vec<Vec<f64>> = (0..n).map(|_| vec![cfg.mixture.sample(&mut rng)]).collect();
    let ensemble = Ensemble::new(groups, omega);

    let pc = ParticleConfig {
        t_end: cfg.raw.run.t_end,
        output_interval: cfg.raw.run.output_interval,
        kmax_obs: p.kmax_obs,
        grid: cfg.grid,
        scaled: p.scaled,
        record_events: p.record_events,
    };
    let out = ParticleRun::run(ensemble, &cfg.rates, &pc, &mut rng)?;

    let mut columns = vec!["t".into()];
    for k in 1..=p.kmax_obs {
        columns.push(format!("m{k}"));
    }
    columns.push("i1".into());
    columns.push("i2".into());
    columns.push("v".into());
    columns.push("vt2".into());
    columns.push("mean_velocity".into());
    columns.push("mass".into());
    // heuristic consensus diagnostic: (1/2) sum_k k M_k (vbar_k - v_inf)^2
    columns.push("vbar_entropy".into());
    for c in 0..cfg.grid.n {
        columns.push(format!("hist{c}"));
    }
    let mut series = base_series(cfg, columns);
    series.set_meta("omega", omega);
    series.set_meta("n_individuals", n);
    for (t, obs) in out.times.iter().zip(out.series.iter()) {
        let mut row = Vec::with_capacity(series.columns.len());
        row.push(*t);
        row.extend_from_slice(&obs.m);
        row.push(obs.i[0]);
        row.push(if obs.i.len() > 1 { obs.i[1] } else { 0.0 });
        row.push(obs.v);
        row.push(if obs.vt.len() > 1 { obs.vt[1] } else { 0.0 });
        row.push(obs.mean_velocity);
        row.push(obs.total_mass);
        let vbar_entropy: f64 = obs
            .m
            .iter()
            .zip(obs.i.iter())
            .enumerate()
            .filter(|(_, (&mk, _))| mk > 0.0)
            .map(|(idx, (&mk, &ik))| {
                let vbar = ik / mk;
                let d = vbar - obs.mean_velocity;
                0.5 * (idx + 1) as f64 * mk * d * d
            })
            .sum();
        row.push(vbar_entropy);
        row.extend_from_slice(&obs.histogram);
        if series.rows.is_empty() {
            series.rows.push(row);
        } else {
            series.push_row(row)?;
        }
    }

    let mut breaches = Vec::new();
    let mean0 = out.series[0].mean_velocity;
    for obs in &out.series {
        if (obs.mean_velocity - mean0).abs() > 1e-9 * mean0.abs().max(1.0) {
            breaches.push("mean velocity drift beyond 1e-9".into());
            break;
        }
    }
    Ok(RunOutput {
        series,
        snapshots: Vec::new(),
        f2_snapshots: Vec::new(),
        breaches,
    })
}

fn run_limit(cfg: &ValidatedConfig) -> Result<RunOutput> {
    let tol = &cfg.raw.tolerances;
    let mut solver = LimitSolver::new(cfg.f1_initial(), cfg.rates.clone(), tol.tail_tol, tol.n_sigma)?;
    let mut series = base_series(
        cfg,
        vec!["t".into(), "m1".into(), "i1".into(), "v1".into(), "clipped".into()],
    );
    let mut snapshots: SnapshotSeries = vec![(0.0, solver.f1.clone())];
    let m0 = solver.f1.mass();
    let i0 = solver.f1.moment1();
    let v_inf = if m0 > 0.0 { i0 / m0 } else { 0.0 };
    let record = |solver: &LimitSolver, series: &mut RunSeries| -> Result<()> {
        let m = solver.f1.mass();
        let i = solver.f1.moment1();
        let e = solver.f1.moment2();
        let v1 = e - 2.0 * v_inf * i + v_inf * v_inf * m;
        if solver.t > 0.0 {
            series.push_row(vec![solver.t, m, i, v1, solver.diagnostics.clipped_mass])?;
        }
        Ok(())
    };
    // t = 0 row
    {
        let e = solver.f1.moment2();
        let v1 = e - 2.0 * v_inf * i0 + v_inf * v_inf * m0;
        series.rows.push(vec![0.0, m0, i0, v1, 0.0]);
    }
    let outputs = output_times(cfg.raw.run.t_end, cfg.raw.run.output_interval);
    let dt = cfg.raw.run.dt;
    for &t_out in &outputs {
        while solver.t < t_out - 1e-9 {
            let step = dt.min(t_out - solver.t);
            solver.step(step)?;
        }
        record(&solver, &mut series)?;
        snapshots.push((solver.t, solver.f1.clone()));
    }
    let mut breaches = Vec::new();
    let m_end = solver.f1.mass();
    if (m_end - m0).abs() > tol.mass_tol * m0.max(1.0) {
        breaches.push(format!("limit-model mass drift {}", m_end - m0));
    }
    if solver.diagnostics.total() > tol.clip_tol_budget(m0) {
        breaches.push(format!(
            "clipped+leaked mass {} above budget",
            solver.diagnostics.total()
        ));
    }
    Ok(RunOutput {
        series,
        snapshots,
        f2_snapshots: Vec::new(),
        breaches,
    })
}

fn run_first_order(cfg: &ValidatedConfig, keep_f2: bool) -> Result<RunOutput> {
    let tol = &cfg.raw.tolerances;
    let mut solver = FirstOrderSolver::new(
        cfg.f1_initial(),
        cfg.f2_initial(),
        cfg.rates.clone(),
        tol.tail_tol,
        tol.n_sigma,
        tol.refresh_interval,
    )?;
    let eps = cfg.rates.epsilon;
    let mut series = base_series(
        cfg,
        vec![
            "t".into(),
            "m1".into(),
            "m2".into(),
            "i1".into(),
            "i2".into(),
            "v1".into(),
            "v2".into(),
            "vt2".into(),
            "mass".into(),
            "moment".into(),
            "v_total".into(),
            "entropy".into(),
            "entropy_bound".into(),
            "clipped".into(),
        ],
    );
    let (mass0, moment0) = solver.conserved()?;
    let v_inf = if mass0 > 0.0 { moment0 / mass0 } else { 0.0 };
    let mut snapshots: SnapshotSeries = vec![(0.0, solver.f1.clone())];
    let mut f2_snapshots = Vec::new();

    let record = |solver: &mut FirstOrderSolver,
                      series: &mut RunSeries,
                      f2_snapshots: &mut Vec<(f64, Density2)>|
     -> Result<()> {
        let obs = solver.observables(v_inf)?;
        let (mass, moment) = solver.conserved()?;
        let entropy = if keep_f2 {
            let f2 = solver.reconstruct_f2()?;
            let h = log_entropy(&solver.f1, &f2, &solver.rates);
            f2_snapshots.push((solver.t, f2));
            h
        } else {
            f64::NAN
        };
        let m3 = if solver.rates.m12() > 0.0 {
            solver.rates.l12() * obs.m1 * obs.m2 / solver.rates.m12()
        } else {
            0.0
        };
        let bound = log_entropy_bound(&solver.rates, obs.m2, m3);
        let row = vec![
            solver.t,
            obs.m1,
            obs.m2,
            obs.i1,
            obs.i2,
            obs.v1,
            obs.v2,
            obs.vt2,
            mass,
            moment,
            obs.v1 + 2.0 * eps * obs.v2,
            entropy,
            bound,
            solver.diagnostics.clipped_mass,
        ];
        if solver.t == 0.0 {
            series.rows.push(row);
        } else {
            series.push_row(row)?;
        }
        Ok(())
    };

    record(&mut solver, &mut series, &mut f2_snapshots)?;
    let outputs = output_times(cfg.raw.run.t_end, cfg.raw.run.output_interval);
    let dt = cfg.raw.run.dt;
    for &t_out in &outputs {
        while solver.t < t_out - 1e-9 {
            let step = dt.min(t_out - solver.t);
            solver.step(step)?;
        }
        record(&mut solver, &mut series, &mut f2_snapshots)?;
        snapshots.push((solver.t, solver.f1.clone()));
    }

    let mut breaches = Vec::new();
    let (mass_end, moment_end) = solver.conserved()?;
    if (mass_end - mass0).abs() > tol.mass_tol * mass0.abs().max(1.0) {
        breaches.push(format!("mass drift {}", mass_end - mass0));
    }
    if (moment_end - moment0).abs() > tol.mass_tol * moment0.abs().max(1.0) {
        breaches.push(format!("moment drift {}", moment_end - moment0));
    }
    if solver.diagnostics.total() > tol.clip_tol_budget(mass0) {
        breaches.push(format!(
            "clipped+leaked mass {} above budget",
            solver.diagnostics.total()
        ));
    }
    Ok(RunOutput {
        series,
        snapshots,
        f2_snapshots,
        breaches,
    })
}

fn run_scalar(cfg: &ValidatedConfig, keep_f2: bool) -> Result<RunOutput> {
    let tol = &cfg.raw.tolerances;
    let mut solver = ScalarSolver::new(
        cfg.f1_initial(),
        cfg.rates.clone(),
        tol.tail_tol,
        tol.n_sigma,
        tol.refresh_interval,
    )?;
    let eps = cfg.rates.epsilon;
    let mut series = base_series(
        cfg,
        vec![
            "t".into(),
            "m1".into(),
            "m21".into(),
            "mass_corr".into(),
            "i1".into(),
            "v1".into(),
            "clipped".into(),
        ],
    );
    let m0 = solver.f1.mass();
    let i0 = solver.f1.moment1();
    let v_inf = if m0 > 0.0 { i0 / m0 } else { 0.0 };
    let mut snapshots: SnapshotSeries = vec![(0.0, solver.f1.clone())];
    let mut f2_snapshots = Vec::new();

    let record = |solver: &mut ScalarSolver,
                      series: &mut RunSeries,
                      f2s: &mut Vec<(f64, Density2)>|
     -> Result<()> {
        let m1 = solver.f1.mass();
        let i1 = solver.f1.moment1();
        let e1 = solver.f1.moment2();
        let v1 = e1 - 2.0 * v_inf * i1 + v_inf * v_inf * m1;
        let m21 = solver.m21()?;
        if keep_f2 {
            f2s.push((solver.t, solver.reconstruct_f2()?));
        }
        let row = vec![
            solver.t,
            m1,
            m21,
            m1 + 2.0 * eps * m21,
            i1,
            v1,
            solver.diagnostics.clipped_mass,
        ];
        if solver.t == 0.0 {
            series.rows.push(row);
        } else {
            series.push_row(row)?;
        }
        Ok(())
    };

    record(&mut solver, &mut series, &mut f2_snapshots)?;
    let outputs = output_times(cfg.raw.run.t_end, cfg.raw.run.output_interval);
    let dt = cfg.raw.run.dt;
    for &t_out in &outputs {
        while solver.t < t_out - 1e-9 {
            let step = dt.min(t_out - solver.t);
            solver.step(step)?;
        }
        record(&mut solver, &mut series, &mut f2_snapshots)?;
        snapshots.push((solver.t, solver.f1.clone()));
    }

    let mut breaches = Vec::new();
    if solver.diagnostics.total() > tol.clip_tol_budget(m0) {
        breaches.push(format!(
            "clipped+leaked mass {} above budget",
            solver.diagnostics.total()
        ));
    }
    Ok(RunOutput {
        series,
        snapshots,
        f2_snapshots,
        breaches,
    })
}

fn run_reference(cfg: &ValidatedConfig) -> Result<RunOutput> {
    let tol = &cfg.raw.tolerances;
    let f1 = cfg.f1_initial();
    let f2 = cfg
        .f2_initial()
        .unwrap_or_else(|| Density2::zeros(cfg.grid));
    let f3 = crate::grid::Density3::zeros(cfg.grid);
    let state = crate::kinetic::ReferenceState { f1, f2, f3, t: 0.0 };
    let mut solver = ReferenceSolver::new(state, cfg.rates.clone(), tol.clip_tol);
    let eps = cfg.rates.epsilon;
    let mut series = base_series(
        cfg,
        vec![
            "t".into(),
            "m1".into(),
            "m2".into(),
            "m3".into(),
            "i1".into(),
            "mass".into(),
            "clipped".into(),
        ],
    );
    let total = |s: &crate::kinetic::ReferenceState| {
        s.f1.mass() + 2.0 * eps * s.f2.mass() + 3.0 * eps * eps * s.f3.mass()
    };
    let mass0 = total(&solver.state);
    let mut snapshots: SnapshotSeries = vec![(0.0, solver.state.f1.clone())];
    series.rows.push(vec![
        0.0,
        solver.state.f1.mass(),
        solver.state.f2.mass(),
        solver.state.f3.mass(),
        solver.state.f1.moment1(),
        mass0,
        0.0,
    ]);
    let outputs = output_times(cfg.raw.run.t_end, cfg.raw.run.output_interval);
    let dt = cfg.raw.run.dt;
    for &t_out in &outputs {
        while solver.state.t < t_out - 1e-9 {
            let step = dt.min(t_out - solver.state.t);
            solver.step(step)?;
        }
        series.push_row(vec![
            solver.state.t,
            solver.state.f1.mass(),
            solver.state.f2.mass(),
            solver.state.f3.mass(),
            solver.state.f1.moment1(),
            total(&solver.state),
            solver.diagnostics.clipped_mass,
        ])?;
        snapshots.push((solver.state.t, solver.state.f1.clone()));
    }
    let mut breaches = Vec::new();
    let mass_end = total(&solver.state);
    if (mass_end - mass0).abs() > tol.mass_tol * mass0.abs().max(1.0) {
        breaches.push(format!("reference-model mass drift {}", mass_end - mass0));
    }
    Ok(RunOutput {
        series,
        snapshots,
        f2_snapshots: Vec::new(),
        breaches,
    })
}

impl crate::harness::config::ToleranceSection {
    /// Leaked+clipped budget for a run of initial mass `m`.
    pub fn clip_tol_budget(&self, m: f64) -> f64 {
        self.leak_tol.max(self.clip_tol) * m.max(1.0)
    }
}

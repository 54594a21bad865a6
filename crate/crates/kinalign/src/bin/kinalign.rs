//! Command-line front end: single runs, sweeps, comparisons and the
//! acceptance suite.
//!
//! Exit codes: 0 ok, 2 tolerance breach / failed acceptance criterion,
//! 3 configuration error, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kinalign::error::Error;
use kinalign::harness::acceptance;
use kinalign::harness::compare::{compare_l1, convergence_order};
use kinalign::harness::config::{load_config, ModelKind, ValidatedConfig};
use kinalign::harness::emit::{dump_snapshot1, dump_snapshot2, emit};
use kinalign::harness::run::run_experiment;
use kinalign::harness::series::RunSeries;

#[derive(Parser)]
#[command(
    name = "kinalign",
    about = "Kinetic alignment dynamics with non-instantaneous collisions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override epsilon (single value) or provide a sweep list
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stochastic particle simulator
    SimulateParticles(CommonArgs),
    /// Integrate the closed pair moment system
    SolveMoments(CommonArgs),
    /// Run a deterministic kinetic solver
    SolveKinetic {
        #[command(flatten)]
        common: CommonArgs,
        /// reference | first-order | limit | scalar
        #[arg(long)]
        model: String,
    },
    /// Compare two emitted snapshot series in L1
    Compare {
        /// Directory with snapshots of run A
        #[arg(long)]
        a: PathBuf,
        /// Directory with snapshots of run B
        #[arg(long)]
        b: PathBuf,
        /// Time window lower bound
        #[arg(long, default_value_t = 0.0)]
        t_lo: f64,
        /// Time window upper bound
        #[arg(long, default_value_t = f64::INFINITY)]
        t_hi: f64,
    },
    /// Run an epsilon sweep and fit the convergence order
    Sweep(CommonArgs),
    /// Run the acceptance suite
    Check {
        /// Optional report output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_overrides(cfg: &mut kinalign::harness::config::ExperimentConfig, common: &CommonArgs) {
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(eps) = &common.eps {
        if eps.len() == 1 {
            cfg.rates.epsilon = Some(eps[0]);
        }
    }
    if let Some(fmt) = &common.format {
        cfg.run.format = fmt.clone();
    }
}

fn load_with_overrides(common: &CommonArgs, model: Option<&str>) -> Result<ValidatedConfig, Error> {
    let mut raw = load_config(&common.config)?.raw;
    if let Some(m) = model {
        raw.run.model = m.replace('-', "_");
    }
    apply_overrides(&mut raw, common);
    raw.validated()
}

fn write_outputs(
    cfg: &ValidatedConfig,
    out_dir: &Path,
    series: &RunSeries,
    snapshots: &[(f64, kinalign::grid::Density1)],
    f2_snapshots: &[(f64, kinalign::grid::Density2)],
) -> Result<(), Error> {
    std::fs::create_dir_all(out_dir)?;
    let format = cfg.raw.run.format.as_str();
    let ext = if format == "json" { "json" } else { "csv" };
    emit(series, format, &out_dir.join(format!("series.{ext}")))?;
    for (k, (t, f)) in snapshots.iter().enumerate() {
        dump_snapshot1(
            f,
            *t,
            cfg.model.tag(),
            Some(&cfg.rates),
            &out_dir.join(format!("f1_{k:04}")),
        )?;
    }
    for (k, (t, f)) in f2_snapshots.iter().enumerate() {
        dump_snapshot2(
            f,
            *t,
            cfg.model.tag(),
            Some(&cfg.rates),
            &out_dir.join(format!("f2_{k:04}")),
        )?;
    }
    Ok(())
}

fn run_single(cfg: &ValidatedConfig, out_dir: &Path) -> Result<Vec<String>, Error> {
    let keep_f2 = matches!(cfg.model, ModelKind::FirstOrder | ModelKind::Scalar);
    let out = run_experiment(cfg, keep_f2)?;
    write_outputs(cfg, out_dir, &out.series, &out.snapshots, &out.f2_snapshots)?;
    println!(
        "{}: {} output rows -> {}",
        cfg.model.tag(),
        out.series.rows.len(),
        out_dir.display()
    );
    Ok(out.breaches)
}

fn snapshot_stems(dir: &Path, prefix: &str) -> Result<Vec<std::path::PathBuf>, Error> {
    let mut stems = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json")
            && path
                .file_stem()
                .is_some_and(|s| s.to_string_lossy().starts_with(prefix))
        {
            stems.push(path.with_extension(""));
        }
    }
    stems.sort();
    Ok(stems)
}

fn read_snapshot(stem: &Path, cells: impl Fn(usize) -> usize) -> Result<(f64, kinalign::grid::VelocityGrid, Vec<f64>), Error> {
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)
            .map_err(|e| Error::Config(format!("bad snapshot header: {e}")))?;
    let n = header["n"].as_u64().unwrap_or(0) as usize;
    let grid = kinalign::grid::VelocityGrid::new(
        header["v_min"].as_f64().unwrap_or(0.0),
        header["v_max"].as_f64().unwrap_or(1.0),
        n,
    )?;
    let t = header["t"].as_f64().unwrap_or(0.0);
    let bytes = std::fs::read(stem.with_extension("bin"))?;
    let expect = 8 * cells(n);
    if bytes.len() != expect {
        return Err(Error::Config(format!(
            "snapshot {} has {} bytes, expected {expect}",
            stem.display(),
            bytes.len(),
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((t, grid, values))
}

fn load_snapshot_dir(dir: &Path) -> Result<Vec<(f64, kinalign::grid::Density1)>, Error> {
    let stems = snapshot_stems(dir, "f1_")?;
    if stems.is_empty() {
        return Err(Error::Config(format!(
            "no f1 snapshots found in {}",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for stem in stems {
        let (t, grid, values) = read_snapshot(&stem, |n| n)?;
        out.push((t, kinalign::grid::Density1 { grid, values }));
    }
    Ok(out)
}

fn load_pair_snapshot_dir(dir: &Path) -> Result<Vec<(f64, kinalign::grid::Density2)>, Error> {
    let mut out = Vec::new();
    for stem in snapshot_stems(dir, "f2_")? {
        let (t, grid, values) = read_snapshot(&stem, |n| n * n)?;
        out.push((t, kinalign::grid::Density2 { grid, values }));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::SimulateParticles(common) => {
            let cfg = load_with_overrides(&common, Some("particle"))?;
            finish(run_single(&cfg, &common.out)?)
        }
        Command::SolveMoments(common) => {
            let cfg = load_with_overrides(&common, Some("moments"))?;
            finish(run_single(&cfg, &common.out)?)
        }
        Command::SolveKinetic { common, model } => {
            let kind = ModelKind::parse(&model.replace('-', "_"))?;
            if !matches!(
                kind,
                ModelKind::Reference | ModelKind::FirstOrder | ModelKind::Limit | ModelKind::Scalar
            ) {
                return Err(Error::Config(format!(
                    "solve-kinetic expects a kinetic model, got '{model}'"
                )));
            }
            let cfg = load_with_overrides(&common, Some(kind.tag()))?;
            finish(run_single(&cfg, &common.out)?)
        }
        Command::Compare { a, b, t_lo, t_hi } => {
            let sa = load_snapshot_dir(&a)?;
            let sb = load_snapshot_dir(&b)?;
            let hi = if t_hi.is_finite() {
                t_hi
            } else {
                sa.last().unwrap().0.min(sb.last().unwrap().0)
            };
            let (sup, table) = compare_l1(&sa, &sb, t_lo, hi)?;
            for (t, d) in &table {
                println!("t = {t:.4}: L1 = {d:.6e}");
            }
            println!("sup L1 over [{t_lo}, {hi}] = {sup:.6e}");
            // pair snapshots, when both runs carry them: the pair marginal
            // only converges tightly, so the bounded-Lipschitz proxy is the
            // meaningful metric, with L1 reported alongside
            let fa = load_pair_snapshot_dir(&a)?;
            let fb = load_pair_snapshot_dir(&b)?;
            if !fa.is_empty() && !fb.is_empty() {
                for (ta, f2a) in &fa {
                    if *ta < t_lo || *ta > hi {
                        continue;
                    }
                    if let Some((_, f2b)) = fb.iter().find(|(tb, _)| (tb - ta).abs() < 1e-9) {
                        let bl = kinalign::harness::compare::bl_distance(f2a, f2b)?;
                        let l1 = f2a.grid.h()
                            * f2a.grid.h()
                            * f2a
                                .values
                                .iter()
                                .zip(f2b.values.iter())
                                .map(|(x, y)| (x - y).abs())
                                .sum::<f64>();
                        println!("t = {ta:.4}: f2 BL = {bl:.6e}, f2 L1 = {l1:.6e}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(common) => {
            let base = load_config(&common.config)?;
            let mut raw = base.raw.clone();
            apply_overrides(&mut raw, &common);
            let sweep = match (&common.eps, &raw.sweep) {
                (Some(eps), _) if eps.len() > 1 => kinalign::harness::config::SweepSection {
                    eps: eps.clone(),
                    compare_with: raw
                        .sweep
                        .as_ref()
                        .map(|s| s.compare_with.clone())
                        .unwrap_or_else(|| "limit".into()),
                    window: raw.sweep.as_ref().map(|s| s.window).unwrap_or([0.5, 3.0]),
                },
                (_, Some(s)) => s.clone(),
                _ => {
                    return Err(Error::Config(
                        "sweep needs [sweep] in the config or --eps with several values".into(),
                    ))
                }
            };
            // reference run
            let mut ref_raw = raw.clone();
            ref_raw.run.model = sweep.compare_with.clone();
            if !ModelKind::parse(&sweep.compare_with)?.needs_epsilon() {
                ref_raw.rates.epsilon = ref_raw.rates.epsilon.or(Some(1.0));
            }
            let ref_cfg = ref_raw.validated()?;
            println!("sweep reference: {}", ref_cfg.model.tag());
            let ref_out = run_experiment(&ref_cfg, false)?;

            let mut errors = Vec::new();
            let mut eps_sorted = sweep.eps.clone();
            eps_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for &eps in &eps_sorted {
                let mut child = raw.clone();
                child.rates.epsilon = Some(eps);
                let ccfg = child.validated()?;
                let out = run_experiment(&ccfg, false)?;
                let (sup, _) =
                    compare_l1(&out.snapshots, &ref_out.snapshots, sweep.window[0], sweep.window[1])?;
                println!("eps = {eps}: sup L1 = {sup:.6e}");
                errors.push((eps, sup));
                let dir = common.out.join(format!("eps_{eps}"));
                write_outputs(&ccfg, &dir, &out.series, &out.snapshots, &[])?;
            }
            let (slope, r2) = convergence_order(&errors)?;
            println!("order fit: slope = {slope:.4}, r^2 = {r2:.5}");
            std::fs::create_dir_all(&common.out)?;
            let mut fit = RunSeries::new(vec!["eps".into(), "err".into()]);
            for (e, x) in errors.iter().rev() {
                fit.push_row(vec![*e, *x])?;
            }
            fit.set_meta("slope", slope);
            fit.set_meta("r2", r2);
            fit.set_meta("compare_with", &sweep.compare_with);
            emit(&fit, "csv", &common.out.join("order_fit.csv"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { out } => {
            let reports = acceptance::run_all();
            let mut lines = Vec::new();
            let mut all_pass = true;
            for r in &reports {
                let line = r.line();
                println!("{line}");
                lines.push(line);
                all_pass &= r.passed;
            }
            if let Some(path) = out {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(&path, lines.join("\n") + "\n")?;
            }
            if all_pass {
                println!("acceptance: all {} criteria passed", reports.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("acceptance: FAILURES present");
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn finish(breaches: Vec<String>) -> Result<ExitCode, Error> {
    if breaches.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for b in &breaches {
            eprintln!("tolerance breach: {b}");
        }
        Ok(ExitCode::from(2))
    }
}

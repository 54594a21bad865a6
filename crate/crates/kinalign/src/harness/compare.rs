//! Model-vs-model distances and empirical convergence-order fits.

use crate::error::{Error, Result};
use crate::grid::{Density1, Density2};

/// Timestamped one-particle snapshots of a run.
pub type SnapshotSeries = Vec<(f64, Density1)>;

/// Linear-in-time resampling of a snapshot series at time `t`.
fn resample(series: &SnapshotSeries, t: f64) -> Result<Density1> {
    if series.is_empty() {
        return Err(Error::Config("empty snapshot series".into()));
    }
    let t0 = series.first().unwrap().0;
    let t1 = series.last().unwrap().0;
    if t < t0 - 1e-9 || t > t1 + 1e-9 {
        return Err(Error::Config(format!(
            "resample time {t} outside series span [{t0}, {t1}]"
        )));
    }
    let t = t.clamp(t0, t1);
    let idx = series.partition_point(|(s, _)| *s < t);
    if idx == 0 {
        return Ok(series[0].1.clone());
    }
    if idx >= series.len() {
        return Ok(series.last().unwrap().1.clone());
    }
    let (ta, fa) = &series[idx - 1];
    let (tb, fb) = &series[idx];
    if (tb - ta).abs() < 1e-300 {
        return Ok(fb.clone());
    }
    let w = (t - ta) / (tb - ta);
    let values = fa
        .values
        .iter()
        .zip(fb.values.iter())
        .map(|(&x, &y)| x * (1.0 - w) + y * w)
        .collect();
    Ok(Density1 {
        grid: fa.grid,
        values,
    })
}

/// L1 distance of two gridded one-particle densities.
pub fn l1_distance(a: &Density1, b: &Density1) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Config("l1_distance: incompatible grids".into()));
    }
    Ok(a.grid.h()
        * a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>())
}

/// Sup-in-time L1 distance over `[t_lo, t_hi]`, comparing at `a`'s output
/// times and resampling `b` linearly in time. Returns the sup and the
/// per-time table.
pub fn compare_l1(
    a: &SnapshotSeries,
    b: &SnapshotSeries,
    t_lo: f64,
    t_hi: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("compare_l1: empty snapshot series".into()));
    }
    if a[0].1.grid != b[0].1.grid {
        return Err(Error::Config("compare_l1: incompatible grids".into()));
    }
    let mut table = Vec::new();
    let mut sup = 0.0_f64;
    for (t, fa) in a {
        if *t < t_lo - 1e-12 || *t > t_hi + 1e-12 {
            continue;
        }
        let fb = resample(b, *t)?;
        let d = l1_distance(fa, &fb)?;
        sup = sup.max(d);
        table.push((*t, d));
    }
    if table.is_empty() {
        return Err(Error::Config(format!(
            "compare_l1: no output times inside [{t_lo}, {t_hi}]"
        )));
    }
    Ok((sup, table))
}

/// Bounded-Lipschitz-type distance for pair densities: L1 norm of the
/// difference mollified by a unit-width tent kernel (test functions with
/// Lipschitz constant 1 cannot resolve finer structure). Used as the
/// tight-convergence proxy for `f2`; plain L1 is reported alongside.
pub fn bl_distance(a: &Density2, b: &Density2) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Config("bl_distance: incompatible grids".into()));
    }
    let grid = a.grid;
    let n = grid.n;
    let h = grid.h();
    let radius = 1.0_f64;
    let half = (radius / h).ceil() as i64;
    // normalized tent kernel on the lattice
    let mut kernel = Vec::with_capacity((2 * half + 1) as usize);
    for k in -half..=half {
        let x = k as f64 * h / radius;
        kernel.push((1.0 - x.abs()).max(0.0));
    }
    let ksum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= ksum;
    }

    let mut diff: Vec<f64> = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| x - y)
        .collect();
    // separable convolution, dimension 1 then dimension 2
    let mut tmp = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for (off, &w) in kernel.iter().enumerate() {
                let ii = i as i64 + off as i64 - half;
                if ii >= 0 && (ii as usize) < n {
                    acc += w * diff[(ii as usize) * n + j];
                }
            }
            tmp[i * n + j] = acc;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (off, &w) in kernel.iter().enumerate() {
                let jj = j as i64 + off as i64 - half;
                if jj >= 0 && (jj as usize) < n {
                    acc += w * tmp[i * n + jj as usize];
                }
            }
            diff[i * n + j] = acc;
        }
    }
    Ok(h * h * diff.iter().map(|v| v.abs()).sum::<f64>())
}

/// Least-squares slope of `log err` against `log ε`, with the fit quality
/// `r²`. Input must have at least 3 strictly decreasing `ε` with positive
/// errors.
pub fn convergence_order(errors: &[(f64, f64)]) -> Result<(f64, f64)> {
    if errors.len() < 3 {
        return Err(Error::Config(format!(
            "convergence_order needs >= 3 points, got {}",
            errors.len()
        )));
    }
    for w in errors.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::Config("epsilon values must strictly decrease".into()));
        }
    }
    let mut xs = Vec::with_capacity(errors.len());
    let mut ys = Vec::with_capacity(errors.len());
    for &(eps, err) in errors {
        if eps <= 0.0 || err <= 0.0 {
            return Err(Error::Domain(format!(
                "convergence_order needs positive (eps, err), got ({eps}, {err})"
            )));
        }
        xs.push(eps.ln());
        ys.push(err.ln());
    }
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, r2))
}

//! C ABI for the kinetic alignment toolkit.
//!
//! Handle-based: configurations and run results are opaque pointers created
//! and released through `ka_*` functions; every fallible call returns a
//! [`KaStatus`] code and leaves a descriptive message readable through
//! [`ka_last_error_message`]. Pure kinematic evaluators operate directly on
//! caller buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use kinalign::error::Error;
use kinalign::harness::config::{load_config_str, ValidatedConfig};
use kinalign::harness::run::{run_experiment, RunOutput};
use kinalign::harness::series::RunSeries;

/// Status codes mirrored on the process exit codes of the CLI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KaStatus {
    /// success
    Ok = 0,
    /// a run finished but breached a configured tolerance
    Tolerance = 2,
    /// invalid configuration or argument
    Config = 3,
    /// numerical failure during a run
    Numerical = 4,
    /// null pointer or malformed buffer from the caller
    NullArgument = 5,
    /// internal panic (a bug; details in the error message)
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl ToString) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(err: &Error) -> KaStatus {
    match err {
        Error::Config(_) | Error::Domain(_) => KaStatus::Config,
        Error::Tolerance(_) => KaStatus::Tolerance,
        _ => KaStatus::Numerical,
    }
}

fn guarded(f: impl FnOnce() -> KaStatus + std::panic::UnwindSafe) -> KaStatus {
    match catch_unwind(f) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            KaStatus::Panic
        }
    }
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn ka_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// kinematics
// ---------------------------------------------------------------------------

/// Apply the alignment flow of duration `sigma` to the velocity tuple
/// `v[0..len]` in place. Negative durations reconstruct pre-collisional
/// states.
///
/// # Safety
/// `v` must point to `len` valid doubles, `len >= 2`.
#[no_mangle]
pub unsafe extern "C" fn ka_phi_map(sigma: f64, v: *mut f64, len: usize) -> KaStatus {
    if v.is_null() || len < 2 {
        set_error("ka_phi_map: null buffer or len < 2");
        return KaStatus::NullArgument;
    }
    let slice = std::slice::from_raw_parts_mut(v, len);
    kinalign::kinematics::phi_map_inplace(sigma, slice);
    KaStatus::Ok
}

/// Jacobian determinant of the flow of duration `sigma` on groups of size
/// `k`, written to `out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ka_phi_jacobian_det(k: usize, sigma: f64, out: *mut f64) -> KaStatus {
    if out.is_null() || k < 2 {
        set_error("ka_phi_jacobian_det: null output or k < 2");
        return KaStatus::NullArgument;
    }
    *out = kinalign::kinematics::phi_jacobian_det(k, sigma);
    KaStatus::Ok
}

/// Alignment field `(U)_i = mean(v) - v_i` for the tuple `v[0..len]`,
/// written to `out[0..len]`.
///
/// # Safety
/// `v` and `out` must point to `len` valid doubles, `len >= 1`.
#[no_mangle]
pub unsafe extern "C" fn ka_interaction_field(
    v: *const f64,
    out: *mut f64,
    len: usize,
) -> KaStatus {
    if v.is_null() || out.is_null() || len == 0 {
        set_error("ka_interaction_field: null buffer or empty tuple");
        return KaStatus::NullArgument;
    }
    let vin = std::slice::from_raw_parts(v, len);
    let field = kinalign::kinematics::interaction_field(vin);
    std::ptr::copy_nonoverlapping(field.as_ptr(), out, len);
    KaStatus::Ok
}

/// Collision-duration density `b(sigma) = (mu11/2) exp(-sigma mu11/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ka_duration_density(mu11: f64, sigma: f64, out: *mut f64) -> KaStatus {
    if out.is_null() {
        set_error("ka_duration_density: null output");
        return KaStatus::NullArgument;
    }
    match kinalign::kinematics::duration_density(mu11, sigma) {
        Ok(v) => {
            *out = v;
            KaStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

// ---------------------------------------------------------------------------
// moment equilibria
// ---------------------------------------------------------------------------

/// Equilibrium masses of the pair system for total mass `mass`.
///
/// # Safety
/// `out_m1` and `out_m2` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ka_equilibrium_masses(
    lambda11: f64,
    mu11: f64,
    epsilon: f64,
    mass: f64,
    out_m1: *mut f64,
    out_m2: *mut f64,
) -> KaStatus {
    if out_m1.is_null() || out_m2.is_null() {
        set_error("ka_equilibrium_masses: null output");
        return KaStatus::NullArgument;
    }
    let rates = match kinalign::rates::RateTable::pair_triple(lambda11, 0.0, mu11, 1.0, epsilon) {
        Ok(r) => r,
        Err(e) => {
            set_error(&e);
            return status_of(&e);
        }
    };
    let (m1, m2) = kinalign::moments::equilibrium_masses(&rates, mass);
    *out_m1 = m1;
    *out_m2 = m2;
    KaStatus::Ok
}

/// Detailed-balance size distribution for constant rates, written to
/// `out[0..kmax]`.
///
/// # Safety
/// `out` must point to `kmax` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn ka_constant_rate_equilibrium(
    lambda: f64,
    mu: f64,
    mass: f64,
    kmax: usize,
    out: *mut f64,
) -> KaStatus {
    if out.is_null() || kmax == 0 {
        set_error("ka_constant_rate_equilibrium: null output or kmax = 0");
        return KaStatus::NullArgument;
    }
    match kinalign::moments::constant_rate_equilibrium(lambda, mu, mass, kmax) {
        Ok(v) => {
            std::ptr::copy_nonoverlapping(v.as_ptr(), out, kmax);
            KaStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

/// Least-squares order fit of `log err` against `log eps`; `eps` must be
/// strictly decreasing with positive errors.
///
/// # Safety
/// `eps` and `err` must point to `len` valid doubles, and the output
/// pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ka_convergence_order(
    eps: *const f64,
    err: *const f64,
    len: usize,
    out_slope: *mut f64,
    out_r2: *mut f64,
) -> KaStatus {
    if eps.is_null() || err.is_null() || out_slope.is_null() || out_r2.is_null() {
        set_error("ka_convergence_order: null argument");
        return KaStatus::NullArgument;
    }
    let pts: Vec<(f64, f64)> = std::slice::from_raw_parts(eps, len)
        .iter()
        .zip(std::slice::from_raw_parts(err, len).iter())
        .map(|(&a, &b)| (a, b))
        .collect();
    match kinalign::harness::compare::convergence_order(&pts) {
        Ok((slope, r2)) => {
            *out_slope = slope;
            *out_r2 = r2;
            KaStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

// ---------------------------------------------------------------------------
// configurations and runs (opaque handles)
// ---------------------------------------------------------------------------

/// Opaque experiment configuration.
pub struct KaConfig {
    inner: ValidatedConfig,
}

/// Opaque run result: the observable table plus metadata.
pub struct KaSeries {
    inner: RunSeries,
}

/// Parse and validate a TOML configuration text. Returns null on failure
/// (inspect [`ka_last_error_message`]).
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ka_config_parse(text: *const c_char) -> *mut KaConfig {
    if text.is_null() {
        set_error("ka_config_parse: null text");
        return std::ptr::null_mut();
    }
    let s = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("ka_config_parse: text is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    match load_config_str(s) {
        Ok(cfg) => Box::into_raw(Box::new(KaConfig { inner: cfg })),
        Err(e) => {
            set_error(&e);
            std::ptr::null_mut()
        }
    }
}

/// Release a configuration handle.
///
/// # Safety
/// `cfg` must come from [`ka_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ka_config_free(cfg: *mut KaConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the configured experiment and return the observable series as an
/// opaque handle (null on failure). A tolerance breach still returns the
/// series; query breaches through the status code of [`ka_run_to_dir`].
///
/// # Safety
/// `cfg` must be a live handle from [`ka_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn ka_run(cfg: *const KaConfig) -> *mut KaSeries {
    if cfg.is_null() {
        set_error("ka_run: null configuration");
        return std::ptr::null_mut();
    }
    let cfg = &(*cfg).inner;
    let mut out: *mut KaSeries = std::ptr::null_mut();
    let status = guarded(AssertUnwindSafe(|| match run_experiment(cfg, false) {
        Ok(RunOutput { series, .. }) => {
            out = Box::into_raw(Box::new(KaSeries { inner: series }));
            KaStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }));
    let _ = status;
    out
}

/// Run the configured experiment and write series + snapshots under
/// `out_dir`, like the CLI does. Returns `Tolerance` when the run finished
/// but breached a configured tolerance.
///
/// # Safety
/// `cfg` must be a live handle; `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn ka_run_to_dir(cfg: *const KaConfig, out_dir: *const c_char) -> KaStatus {
    if cfg.is_null() || out_dir.is_null() {
        set_error("ka_run_to_dir: null argument");
        return KaStatus::NullArgument;
    }
    let dir = match CStr::from_ptr(out_dir).to_str() {
        Ok(s) => Path::new(s).to_path_buf(),
        Err(_) => {
            set_error("ka_run_to_dir: path is not valid UTF-8");
            return KaStatus::NullArgument;
        }
    };
    let cfg = &(*cfg).inner;
    guarded(AssertUnwindSafe(|| {
        let keep_f2 = matches!(
            cfg.model,
            kinalign::harness::config::ModelKind::FirstOrder
                | kinalign::harness::config::ModelKind::Scalar
        );
        match run_experiment(cfg, keep_f2) {
            Ok(out) => {
                if let Err(e) = std::fs::create_dir_all(&dir) {
                    set_error(&e);
                    return KaStatus::Numerical;
                }
                let format = cfg.raw.run.format.as_str();
                let ext = if format == "json" { "json" } else { "csv" };
                if let Err(e) = kinalign::harness::emit::emit(
                    &out.series,
                    format,
                    &dir.join(format!("series.{ext}")),
                ) {
                    set_error(&e);
                    return status_of(&e);
                }
                for (k, (t, f)) in out.snapshots.iter().enumerate() {
                    if let Err(e) = kinalign::harness::emit::dump_snapshot1(
                        f,
                        *t,
                        cfg.model.tag(),
                        Some(&cfg.rates),
                        &dir.join(format!("f1_{k:04}")),
                    ) {
                        set_error(&e);
                        return status_of(&e);
                    }
                }
                if out.breaches.is_empty() {
                    KaStatus::Ok
                } else {
                    set_error(out.breaches.join("; "));
                    KaStatus::Tolerance
                }
            }
            Err(e) => {
                set_error(&e);
                status_of(&e)
            }
        }
    }))
}

/// Number of rows in a series.
///
/// # Safety
/// `series` must be a live handle from [`ka_run`].
#[no_mangle]
pub unsafe extern "C" fn ka_series_rows(series: *const KaSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).inner.rows.len()
}

/// Number of columns in a series.
///
/// # Safety
/// `series` must be a live handle from [`ka_run`].
#[no_mangle]
pub unsafe extern "C" fn ka_series_cols(series: *const KaSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).inner.columns.len()
}

/// Value at `(row, col)`; NaN when out of range.
///
/// # Safety
/// `series` must be a live handle from [`ka_run`].
#[no_mangle]
pub unsafe extern "C" fn ka_series_value(series: *const KaSeries, row: usize, col: usize) -> f64 {
    if series.is_null() {
        return f64::NAN;
    }
    let s = &(*series).inner;
    s.rows
        .get(row)
        .and_then(|r| r.get(col))
        .copied()
        .unwrap_or(f64::NAN)
}

/// Copy the column name at `col` into `buf` (NUL-terminated, truncated).
/// Returns the full name length, or 0 when out of range.
///
/// # Safety
/// `series` must be a live handle; `buf` must point to `len` writable
/// bytes (or be null to query the length).
#[no_mangle]
pub unsafe extern "C" fn ka_series_column_name(
    series: *const KaSeries,
    col: usize,
    buf: *mut c_char,
    len: usize,
) -> usize {
    if series.is_null() {
        return 0;
    }
    let s = &(*series).inner;
    let Some(name) = s.columns.get(col) else {
        return 0;
    };
    let bytes = name.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
        *buf.add(n) = 0;
    }
    bytes.len()
}

/// Release a series handle.
///
/// # Safety
/// `series` must come from [`ka_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ka_series_free(series: *mut KaSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
[run]
model = "limit"
t_end = 0.2
dt = 0.002
output_interval = 0.05

[rates]
lambda11 = 1.0
mu11 = 2.0

[grid]
v_min = -3.0
v_max = 3.0
n = 32

[[initial.components]]
kind = "gaussian"
mean = 0.0
sd = 0.5
mass = 1.0
"#;

    #[test]
    fn phi_map_roundtrip_through_ffi() {
        let mut v = [1.0, -1.0];
        let s = 2.0_f64.ln();
        unsafe {
            assert_eq!(ka_phi_map(-s, v.as_mut_ptr(), 2), KaStatus::Ok);
        }
        assert!((v[0] - 2.0).abs() < 1e-14 && (v[1] + 2.0).abs() < 1e-14);
        let mut det = 0.0;
        unsafe {
            assert_eq!(ka_phi_jacobian_det(2, -s, &mut det), KaStatus::Ok);
        }
        assert!((det - 2.0).abs() < 1e-14);
        unsafe {
            assert_eq!(ka_phi_map(-s, v.as_mut_ptr(), 1), KaStatus::NullArgument);
        }
    }

    #[test]
    fn equilibria_through_ffi() {
        let (mut m1, mut m2) = (0.0, 0.0);
        unsafe {
            assert_eq!(
                ka_equilibrium_masses(1.0, 1.0, 1.0, 1.0, &mut m1, &mut m2),
                KaStatus::Ok
            );
        }
        assert!((m1 - 0.5).abs() < 1e-14 && (m2 - 0.25).abs() < 1e-14);

        let mut out = vec![0.0; 8];
        unsafe {
            assert_eq!(
                ka_constant_rate_equilibrium(1.0, 1.0, 1.0, 8, out.as_mut_ptr()),
                KaStatus::Ok
            );
        }
        assert!(out.iter().all(|&x| x > 0.0));
        // detailed balance of the returned sequence
        assert!((out[0] * out[0] - out[1]).abs() < 1e-12);
    }

    #[test]
    fn config_run_series_lifecycle() {
        let text = std::ffi::CString::new(CONFIG).unwrap();
        let cfg = unsafe { ka_config_parse(text.as_ptr()) };
        assert!(!cfg.is_null());
        let series = unsafe { ka_run(cfg) };
        assert!(!series.is_null());
        unsafe {
            assert_eq!(ka_series_rows(series), 5);
            assert!(ka_series_cols(series) >= 4);
            // first column is time, first row starts at 0
            assert_eq!(ka_series_value(series, 0, 0), 0.0);
            assert!(ka_series_value(series, 99, 0).is_nan());
            let mut buf = [0i8; 16];
            let n = ka_series_column_name(series, 0, buf.as_mut_ptr(), buf.len());
            assert_eq!(n, 1);
            assert_eq!(buf[0] as u8, b't');
            ka_series_free(series);
            ka_config_free(cfg);
        }
    }

    #[test]
    fn parse_error_is_reported() {
        let text = std::ffi::CString::new("[run]\nmodel = \"bogus\"").unwrap();
        let cfg = unsafe { ka_config_parse(text.as_ptr()) };
        assert!(cfg.is_null());
        let mut buf = vec![0i8; 256];
        let n = unsafe { ka_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
        let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy();
        assert!(msg.contains("missing field") || msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn order_fit_through_ffi() {
        let eps = [0.2, 0.1, 0.05];
        let err = [0.04, 0.01, 0.0025];
        let (mut slope, mut r2) = (0.0, 0.0);
        unsafe {
            assert_eq!(
                ka_convergence_order(eps.as_ptr(), err.as_ptr(), 3, &mut slope, &mut r2),
                KaStatus::Ok
            );
        }
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}

//! C ABI for the wildlab laboratory.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a [`WlStatus`]
//! and leaves a message retrievable with [`wl_last_error`] on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use wildlab::io::{run_command, Command, ExperimentConfig, Outcome, RunOptions, Status};
use wildlab::subsolution::{lambda_max_packed, relaxation_slack};
use wildlab::{ConfigError, RunError, ScalarField, TorusGrid};

/// Status codes; the nonzero values mirror the CLI exit codes where one exists.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Numerical = 3,
    CertificationFailed = 4,
    Io = 5,
    Panic = 6,
}

/// Pipeline commands accepted by [`wl_run`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WlCommand {
    Solve = 0,
    Certify = 1,
    Window = 2,
    Budget = 3,
    Report = 4,
}

impl From<WlCommand> for Command {
    fn from(c: WlCommand) -> Self {
        match c {
            WlCommand::Solve => Command::Solve,
            WlCommand::Certify => Command::Certify,
            WlCommand::Window => Command::Window,
            WlCommand::Budget => Command::Budget,
            WlCommand::Report => Command::Report,
        }
    }
}

/// Opaque experiment configuration.
pub struct WlConfig {
    inner: ExperimentConfig,
}

/// Opaque result of one pipeline command.
pub struct WlRun {
    outcome: Outcome,
    run_dir: CString,
    summary: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut s = msg.into();
    s.retain(|c| c != '\0');
    let c = CString::new(s).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: WlStatus, msg: impl Into<String>) -> WlStatus {
    set_error(msg);
    status
}

fn config_status(e: &ConfigError) -> WlStatus {
    match e {
        ConfigError::Missing(_) | ConfigError::Parse(_) | ConfigError::Invalid(_) => WlStatus::Config,
    }
}

fn run_status(e: &RunError) -> WlStatus {
    match e {
        RunError::Config(c) => config_status(c),
        RunError::Numerical(_) => WlStatus::Numerical,
        RunError::Io { .. } | RunError::Output(_) => WlStatus::Io,
    }
}

/// Runs `f`, converting panics into [`WlStatus::Panic`].
fn guard(f: impl FnOnce() -> WlStatus) -> WlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == WlStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(WlStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, WlStatus> {
    if p.is_null() {
        return Err(fail(WlStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WlStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next wildlab call on the same thread.
#[no_mangle]
pub extern "C" fn wl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads and validates a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_config_load(path: *const c_char, out: *mut *mut WlConfig) -> WlStatus {
    guard(|| {
        if out.is_null() {
            return fail(WlStatus::InvalidArgument, "out is null");
        }
        *out = ptr::null_mut();
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ExperimentConfig::load(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(WlConfig { inner }));
                WlStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Parses and validates a config given as TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_config_parse(text: *const c_char, out: *mut *mut WlConfig) -> WlStatus {
    guard(|| {
        if out.is_null() {
            return fail(WlStatus::InvalidArgument, "out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed = ExperimentConfig::from_toml(text).and_then(|c| c.validate().map(|_| c));
        match parsed {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(WlConfig { inner }));
                WlStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Writes the hex config hash (64 characters plus NUL) into `buf`.
///
/// # Safety
/// `cfg` must come from this library; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wl_config_hash(cfg: *const WlConfig, buf: *mut c_char, len: usize) -> WlStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(WlStatus::InvalidArgument, "config is null");
        };
        copy_out(&cfg.inner.hash(), buf, len)
    })
}

unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> WlStatus {
    if buf.is_null() || len < s.len() + 1 {
        return fail(
            WlStatus::InvalidArgument,
            format!("buffer needs {} bytes", s.len() + 1),
        );
    }
    ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
    *buf.add(s.len()) = 0;
    WlStatus::Ok
}

/// Releases a config; null is ignored.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_config_free(cfg: *mut WlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one pipeline command in `<out_dir>/<hash prefix>`.
///
/// A null `seed` keeps the seed stored in the config. On
/// [`WlStatus::Ok`], [`WlStatus::Numerical`] from a solver abort, and
/// [`WlStatus::CertificationFailed`], `*out` receives a run handle that
/// must be freed; on other failures it is set to null.
///
/// # Safety
/// `cfg` must come from this library, `out_dir` must be a NUL-terminated
/// string, `seed` null or valid, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_run(
    cfg: *const WlConfig,
    command: WlCommand,
    out_dir: *const c_char,
    seed: *const u64,
    strict: bool,
    out: *mut *mut WlRun,
) -> WlStatus {
    guard(|| {
        if out.is_null() {
            return fail(WlStatus::InvalidArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(cfg) = cfg.as_ref() else {
            return fail(WlStatus::InvalidArgument, "config is null");
        };
        let dir = match read_str(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let opts = RunOptions {
            out: PathBuf::from(dir),
            seed: seed.as_ref().copied(),
            strict,
        };
        let outcome = match run_command(command.into(), &cfg.inner, &opts) {
            Ok(o) => o,
            Err(e) => return fail(run_status(&e), e.to_string()),
        };
        let status = match &outcome.status {
            Status::Ok => WlStatus::Ok,
            Status::NumericalAbort(m) => fail(WlStatus::Numerical, m.clone()),
            Status::CertificationFailed(m) => fail(WlStatus::CertificationFailed, m.clone()),
        };
        let lossless = |s: String| CString::new(s.replace('\0', "")).unwrap_or_default();
        let run = WlRun {
            run_dir: lossless(outcome.run_dir.display().to_string()),
            summary: lossless(outcome.summary.join("\n")),
            outcome,
        };
        *out = Box::into_raw(Box::new(run));
        status
    })
}

/// Run directory path; valid while the handle lives.
///
/// # Safety
/// `run` must come from [`wl_run`].
#[no_mangle]
pub unsafe extern "C" fn wl_run_dir(run: *const WlRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.run_dir.as_ptr())
}

/// Newline-separated summary; valid while the handle lives.
///
/// # Safety
/// `run` must come from [`wl_run`].
#[no_mangle]
pub unsafe extern "C" fn wl_run_summary(run: *const WlRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// CLI-equivalent exit code of the run, or -1 for a null handle.
///
/// # Safety
/// `run` must come from [`wl_run`].
#[no_mangle]
pub unsafe extern "C" fn wl_run_exit_code(run: *const WlRun) -> c_int {
    run.as_ref().map_or(-1, |r| r.outcome.exit_code())
}

/// Releases a run handle; null is ignored.
///
/// # Safety
/// `run` must come from [`wl_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_run_free(run: *mut WlRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Largest eigenvalue of a symmetric matrix given by its packed upper
/// triangle (`a11 a12 a22` for dim 2, `a11 a12 a13 a22 a23 a33` for dim 3).
///
/// # Safety
/// `packed` must point to 3 (dim 2) or 6 (dim 3) doubles.
#[no_mangle]
pub unsafe extern "C" fn wl_lambda_max(dim: usize, packed: *const f64, out: *mut f64) -> WlStatus {
    guard(|| {
        if packed.is_null() || out.is_null() {
            return fail(WlStatus::InvalidArgument, "null pointer");
        }
        let len = match dim {
            2 => 3,
            3 => 6,
            _ => return fail(WlStatus::InvalidArgument, format!("dim must be 2 or 3, got {dim}")),
        };
        let a = std::slice::from_raw_parts(packed, len);
        if a.iter().any(|x| !x.is_finite()) {
            return fail(WlStatus::InvalidArgument, "matrix entries must be finite");
        }
        *out = lambda_max_packed(dim, a);
        WlStatus::Ok
    })
}

/// Pointwise relaxation slack `e - (d/2) λmax[w⊗w/ρ - F - H]` with
/// `e = |w|²/(2ρ)`; `f` and `h` are packed like in [`wl_lambda_max`].
///
/// # Safety
/// `w` must hold `dim` doubles, `f` and `h` the packed triangle.
#[no_mangle]
pub unsafe extern "C" fn wl_relaxation_slack(
    dim: usize,
    w: *const f64,
    rho: f64,
    f: *const f64,
    h: *const f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        if w.is_null() || f.is_null() || h.is_null() || out.is_null() {
            return fail(WlStatus::InvalidArgument, "null pointer");
        }
        let len = match dim {
            2 => 3,
            3 => 6,
            _ => return fail(WlStatus::InvalidArgument, format!("dim must be 2 or 3, got {dim}")),
        };
        if !(rho > 0.0 && rho.is_finite()) {
            return fail(WlStatus::InvalidArgument, format!("rho must be positive, got {rho}"));
        }
        let w = std::slice::from_raw_parts(w, dim);
        let f = std::slice::from_raw_parts(f, len);
        let h = std::slice::from_raw_parts(h, len);
        *out = relaxation_slack(w, rho, f, h);
        WlStatus::Ok
    })
}

/// Energy level giving an `L²` budget of `target_eps` over a uniform
/// density `rho0` on the `dim`-torus.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_choose_lambda0(dim: usize, target_eps: f64, rho0: f64, out: *mut f64) -> WlStatus {
    guard(|| {
        if out.is_null() {
            return fail(WlStatus::InvalidArgument, "out is null");
        }
        let grid = match TorusGrid::new(dim, 8) {
            Ok(g) => g,
            Err(e) => return fail(WlStatus::InvalidArgument, e.to_string()),
        };
        let rho = ScalarField::constant(grid, rho0);
        match wildlab::admissibility::choose_lambda0(target_eps, &rho) {
            Ok(v) => {
                *out = v;
                WlStatus::Ok
            }
            Err(e) => fail(WlStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_max_diagonal() {
        let a = [3.0, 0.0, -1.0];
        let mut out = 0.0;
        let s = unsafe { wl_lambda_max(2, a.as_ptr(), &mut out) };
        assert_eq!(s, WlStatus::Ok);
        assert_eq!(out, 3.0);
    }

    #[test]
    fn bad_dim_sets_last_error() {
        let a = [0.0; 6];
        let mut out = 0.0;
        let s = unsafe { wl_lambda_max(4, a.as_ptr(), &mut out) };
        assert_eq!(s, WlStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(wl_last_error()) }.to_str().unwrap();
        assert!(msg.contains("dim"));
    }
}

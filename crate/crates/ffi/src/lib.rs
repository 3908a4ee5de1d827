//! C ABI for the effham engine.
//!
//! A run handle is loaded from a TOML configuration file and drives the same
//! file-emitting commands as the CLI. All functions return an
//! [`EffhamStatus`]; on failure a thread-local message is retrievable with
//! [`effham_last_error`]. Handles are opaque and must be released with
//! [`effham_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use effham::cli::{self, RunSetup};
use effham::Error;

/// Status codes mirrored by the CLI exit codes (0 ok, 2 config, 3
/// resonance/validation, 4 integrator step).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffhamStatus {
    Ok = 0,
    /// Runtime failure outside the categories below (I/O, numerics).
    Runtime = 1,
    /// Configuration parse or schema error.
    Config = 2,
    /// Physics validation failure (duplicate detunings, near-resonance,
    /// zero strengths, non-Hermitian input).
    Validation = 3,
    /// Integrator step too coarse for the declared fastest frequency.
    Step = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
    /// A path or string argument was not valid UTF-8.
    Utf8 = 6,
}

/// Opaque run handle: a parsed and schema-validated configuration.
pub struct EffhamRun {
    path: PathBuf,
    setup: RunSetup,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&ch| ch != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> EffhamStatus {
    match err.exit_code() {
        2 => EffhamStatus::Config,
        3 => EffhamStatus::Validation,
        4 => EffhamStatus::Step,
        _ => EffhamStatus::Runtime,
    }
}

fn fail(err: Error) -> EffhamStatus {
    set_last_error(&err.to_string());
    status_of(&err)
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, EffhamStatus> {
    if ptr.is_null() {
        set_last_error("null path argument");
        return Err(EffhamStatus::NullArgument);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            Err(EffhamStatus::Utf8)
        }
    }
}

unsafe fn opt_path_arg<'a>(ptr: *const c_char) -> Result<Option<&'a Path>, EffhamStatus> {
    if ptr.is_null() {
        Ok(None)
    } else {
        unsafe { path_arg(ptr) }.map(Some)
    }
}

/// Load and schema-validate a TOML run configuration.
///
/// On success writes a fresh handle to `out` and returns `Ok`; the handle
/// must be released with [`effham_run_free`].
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn effham_run_load(
    config_path: *const c_char,
    out: *mut *mut EffhamRun,
) -> EffhamStatus {
    if out.is_null() {
        set_last_error("null output handle");
        return EffhamStatus::NullArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let path = match unsafe { path_arg(config_path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    let doc = match cli::load_config(path) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let setup = match doc.to_setup(None) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let handle = Box::new(EffhamRun { path: path.to_path_buf(), setup });
    unsafe { *out = Box::into_raw(handle) };
    EffhamStatus::Ok
}

/// Release a handle obtained from [`effham_run_load`]. Null is a no-op.
///
/// # Safety
/// `run` must be null or a pointer returned by [`effham_run_load`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn effham_run_free(run: *mut EffhamRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Dimensionless perturbative parameter λ = g/Δ of the loaded model.
///
/// # Safety
/// `run` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn effham_run_lambda(
    run: *const EffhamRun,
    out: *mut f64,
) -> EffhamStatus {
    if run.is_null() || out.is_null() {
        set_last_error("null argument");
        return EffhamStatus::NullArgument;
    }
    let run = unsafe { &*run };
    let lambda = run.setup.lambda_override.unwrap_or_else(|| run.setup.cfg.lambda());
    unsafe { *out = lambda };
    EffhamStatus::Ok
}

/// Total dimension of the buffered operator space.
///
/// # Safety
/// `run` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn effham_run_dimension(
    run: *const EffhamRun,
    out: *mut usize,
) -> EffhamStatus {
    if run.is_null() || out.is_null() {
        set_last_error("null argument");
        return EffhamStatus::NullArgument;
    }
    unsafe { *out = (*run).setup.cfg.space.total_dim() };
    EffhamStatus::Ok
}

/// Compute the C/Z decomposition and write c_operators.json, z_polys.json
/// and summary.json. `out_dir` may be null to use the configured directory.
///
/// # Safety
/// `run` must be a live handle; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn effham_decompose(
    run: *const EffhamRun,
    out_dir: *const c_char,
) -> EffhamStatus {
    if run.is_null() {
        set_last_error("null run handle");
        return EffhamStatus::NullArgument;
    }
    let out = match unsafe { opt_path_arg(out_dir) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match cli::cmd_decompose(&unsafe { &*run }.path, out) {
        Ok(()) => EffhamStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Benchmark the dressed and effective evolutors against exact propagation
/// and write compare.csv.
///
/// # Safety
/// As for [`effham_decompose`].
#[no_mangle]
pub unsafe extern "C" fn effham_compare(
    run: *const EffhamRun,
    out_dir: *const c_char,
) -> EffhamStatus {
    if run.is_null() {
        set_last_error("null run handle");
        return EffhamStatus::NullArgument;
    }
    let out = match unsafe { opt_path_arg(out_dir) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match cli::cmd_compare(&unsafe { &*run }.path, out) {
        Ok(()) => EffhamStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Truncation-error sweep over `n` perturbative parameters; writes
/// sweep.csv and summary.json.
///
/// # Safety
/// `lambdas` must point to `n` doubles; other arguments as above.
#[no_mangle]
pub unsafe extern "C" fn effham_sweep(
    run: *const EffhamRun,
    lambdas: *const f64,
    n: usize,
    out_dir: *const c_char,
) -> EffhamStatus {
    if run.is_null() || (lambdas.is_null() && n > 0) {
        set_last_error("null argument");
        return EffhamStatus::NullArgument;
    }
    let out = match unsafe { opt_path_arg(out_dir) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    let list: &[f64] =
        if n == 0 { &[] } else { unsafe { std::slice::from_raw_parts(lambdas, n) } };
    match cli::cmd_sweep(&unsafe { &*run }.path, out, list) {
        Ok(()) => EffhamStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, excluding
/// the NUL.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn effham_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let ncopy = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, ncopy);
                *buf.add(ncopy) = 0;
            }
        }
        bytes.len()
    })
}

/// Static version string of the engine.
#[no_mangle]
pub extern "C" fn effham_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

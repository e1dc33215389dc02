//! C ABI over the copsl toolkit.
//!
//! Every function returns a [`CopslStatus`]; on failure a message is kept
//! per thread and can be read with [`copsl_last_error_message`]. Sessions
//! are opaque handles created by `copsl_session_open` or
//! `copsl_session_new` and released with `copsl_session_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use copsl::config::RunConfig;
use copsl::runner::Runner;
use copsl::scalarization::normalize_preference;
use copsl::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopslStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBounds = 3,
    BudgetExhausted = 4,
    Io = 5,
    Checkpoint = 6,
    Config = 7,
    Numerical = 8,
    NoModel = 9,
    Panic = 10,
}

/// Opaque optimization session.
pub struct CopslSession {
    runner: Runner,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> CopslStatus {
    match e {
        Error::Bounds { .. } => CopslStatus::OutOfBounds,
        Error::Dimension { .. } | Error::InvalidArgument(_) | Error::UnsupportedDimension(_) => {
            CopslStatus::InvalidArgument
        }
        Error::BudgetExhausted { .. } => CopslStatus::BudgetExhausted,
        Error::Io { .. } | Error::DataFile { .. } | Error::FrontReferenceMismatch { .. } => CopslStatus::Io,
        Error::CheckpointVersion { .. } | Error::CorruptCheckpoint(_) => CopslStatus::Checkpoint,
        Error::Config(_) => CopslStatus::Config,
        _ => CopslStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (CopslStatus, String)>) -> CopslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CopslStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CopslStatus::Panic
        }
    }
}

type Fallible<T> = Result<T, (CopslStatus, String)>;

fn lift<T>(r: copsl::Result<T>) -> Fallible<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CopslStatus, String) {
    (CopslStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CopslStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn session<'a>(s: *mut CopslSession) -> Fallible<&'a mut CopslSession> {
    s.as_mut().ok_or_else(|| null("session"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Fallible<&'a [f64]> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out(dst: *mut f64, cap: usize, values: &[f64], what: &str) -> Fallible<()> {
    if dst.is_null() {
        return Err(null(what));
    }
    if cap != values.len() {
        return Err((
            CopslStatus::InvalidArgument,
            format!("{what} holds {cap} values, {} needed", values.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), dst, cap);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn copsl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn copsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a session from a checkpoint file. Further progress is not written
/// back unless `copsl_session_save` is called.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_open(path: *const c_char, out: *mut *mut CopslSession) -> CopslStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let runner = lift(Runner::from_checkpoint(Path::new(path)))?;
        *out = Box::into_raw(Box::new(CopslSession { runner }));
        Ok(())
    })
}

/// Starts a fresh session from a TOML config.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_new(config_toml: *const c_char, out: *mut *mut CopslSession) -> CopslStatus {
    guard(|| {
        let toml = text(config_toml, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = lift(RunConfig::from_toml(toml))?;
        let runner = lift(Runner::new(config))?;
        *out = Box::into_raw(Box::new(CopslSession { runner }));
        Ok(())
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_free(s: *mut CopslSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Decision dimension `n` and objective count `m`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_dims(s: *mut CopslSession, n: *mut usize, m: *mut usize) -> CopslStatus {
    guard(|| {
        let p = session(s)?.runner.problem();
        if n.is_null() || m.is_null() {
            return Err(null("output"));
        }
        *n = p.n;
        *m = p.m;
        Ok(())
    })
}

/// Evaluations used and remaining under the budget.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_budget(s: *mut CopslSession, used: *mut usize, remaining: *mut usize) -> CopslStatus {
    guard(|| {
        let r = &session(s)?.runner;
        if used.is_null() || remaining.is_null() {
            return Err(null("output"));
        }
        *used = r.evaluations();
        *remaining = r.remaining_budget();
        Ok(())
    })
}

/// Runs the next scheduled iteration. `finished` is set to 1 when nothing
/// was left to run.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_step(s: *mut CopslSession, finished: *mut i32) -> CopslStatus {
    guard(|| {
        let s = session(s)?;
        if finished.is_null() {
            return Err(null("finished"));
        }
        *finished = i32::from(lift(s.runner.step())?.is_none());
        Ok(())
    })
}

/// Hypervolume of the archive after the last logged iteration.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_hypervolume(s: *mut CopslSession, out: *mut f64) -> CopslStatus {
    guard(|| {
        let r = &session(s)?.runner;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.records().last().map_or(0.0, |rec| rec.hv);
        Ok(())
    })
}

/// Truly evaluates `x` (length n) into `y` (length m), consuming budget.
///
/// # Safety
/// `x` must hold `n` values and `y` room for `m`.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_evaluate(
    s: *mut CopslSession,
    x: *const f64,
    n: usize,
    y: *mut f64,
    m: usize,
) -> CopslStatus {
    guard(|| {
        let s = session(s)?;
        let x = slice(x, n, "x")?;
        let values = lift(s.runner.evaluate_manual(x))?;
        write_out(y, m, &values, "y")
    })
}

/// Maps a preference (length m, non-negative, not all zero) to its design
/// `x` (length n) through the trained model.
///
/// # Safety
/// `pref` must hold `m` values and `x` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_solution(
    s: *mut CopslSession,
    pref: *const f64,
    m: usize,
    x: *mut f64,
    n: usize,
) -> CopslStatus {
    guard(|| {
        let r = &session(s)?.runner;
        let pref = slice(pref, m, "pref")?;
        let problem = r.problem();
        let r_norm = lift(normalize_preference(pref, problem.m))?;
        let psm = r
            .psm()
            .ok_or((CopslStatus::NoModel, "session has no trained model".to_string()))?;
        let (lo, hi) = problem.bounds();
        let design = problem.snap(&lift(psm.forward(&r_norm, lo, hi))?.x);
        write_out(x, n, &design, "x")
    })
}

/// Writes the session checkpoint to `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn copsl_session_save(s: *mut CopslSession, path: *const c_char) -> CopslStatus {
    guard(|| {
        let r = &session(s)?.runner;
        let path = text(path, "path")?;
        lift(r.state().save(Path::new(path)))
    })
}

/// Exact hypervolume of `count` points in `m` dimensions (row-major) with
/// respect to `reference`.
///
/// # Safety
/// `points` must hold `count * m` values and `reference` `m`.
#[no_mangle]
pub unsafe extern "C" fn copsl_hypervolume(
    points: *const f64,
    count: usize,
    m: usize,
    reference: *const f64,
    out: *mut f64,
) -> CopslStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let reference = slice(reference, m, "reference")?;
        let flat = if count == 0 { &[][..] } else { slice(points, count * m, "points")? };
        let rows: Vec<Vec<f64>> = flat.chunks(m.max(1)).map(<[f64]>::to_vec).collect();
        *out = lift(copsl::moo::hypervolume(&rows, reference))?;
        Ok(())
    })
}

//! C ABI over the `horef-bmc` checker.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an
//! [`HbmcStatus`] and leaves a message for [`hbmc_last_error`] on failure.
//! Strings returned to C are NUL-terminated and released with
//! [`hbmc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::time::Duration;

use horef_bmc::checker::{
    bound_iterate, check, emit, CheckError, CheckMode, CheckOptions, Counterexample, IterateVerdict, ModelValue,
    SolverError, Verdict,
};
use horef_bmc::parser::load;
use horef_bmc::syntax::{Bound, Config};
use horef_bmc::translate::TranslateOptions;

#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HbmcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    TranslateError = 4,
    SolverError = 5,
    SolverTimeout = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HbmcMode {
    /// Is `fail` reachable?
    Fail = 0,
    /// Is the bound exhausted on some path?
    Nil = 1,
}

#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HbmcVerdictKind {
    /// The query is satisfiable; a model is available.
    Counterexample = 0,
    /// The query is unsatisfiable at this bound.
    Unsat = 1,
    /// Neither `fail` nor `nil` is reachable (iteration only).
    Verified = 2,
    /// `nil` was still reachable at the last bound (iteration only).
    BoundReached = 3,
    Unknown = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HbmcOptions {
    /// Use the points-to analysis.
    pub opt: bool,
    /// Emit only the propagation clauses that can fire.
    pub prune: bool,
    /// Per-query solver timeout; values <= 0 keep the default of 10 s.
    pub timeout_secs: f64,
    /// Solver executable, or NULL for `$HOREF_BMC_SOLVER` / `z3`.
    pub solver_path: *const c_char,
}

/// A parsed program at a fixed bound.
pub struct HbmcProgram {
    config: Config,
}

/// The outcome of a check or an iteration.
pub struct HbmcResult {
    kind: HbmcVerdictKind,
    bound: u32,
    cex: Option<Counterexample>,
    reason: Option<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (HbmcStatus, String)>) -> HbmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HbmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HbmcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HbmcStatus, String)> {
    if p.is_null() {
        return Err((HbmcStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (HbmcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn check_error(e: CheckError) -> (HbmcStatus, String) {
    let status = match &e {
        CheckError::Solver(SolverError::Timeout(_)) => HbmcStatus::SolverTimeout,
        CheckError::Solver(_) | CheckError::Model(_) => HbmcStatus::SolverError,
        _ => HbmcStatus::TranslateError,
    };
    (status, e.to_string())
}

unsafe fn options(o: *const HbmcOptions) -> Result<CheckOptions, (HbmcStatus, String)> {
    let mut out = CheckOptions::default();
    if let Some(o) = o.as_ref() {
        out.opt = o.opt;
        out.translate = TranslateOptions { prune: o.prune, ..TranslateOptions::default() };
        if o.timeout_secs > 0.0 && o.timeout_secs.is_finite() {
            out.solver.timeout = Duration::from_secs_f64(o.timeout_secs);
        }
        if !o.solver_path.is_null() {
            out.solver.path = PathBuf::from(str_arg(o.solver_path, "solver_path")?);
        }
    }
    Ok(out)
}

/// Defaults: points-to analysis and pruning on, 10 s timeout, solver from
/// the environment.
#[no_mangle]
pub extern "C" fn hbmc_options_default() -> HbmcOptions {
    HbmcOptions { opt: true, prune: true, timeout_secs: 10.0, solver_path: ptr::null() }
}

/// The message for the last failed call on this thread, or NULL. Valid
/// until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hbmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `.bmc` source at bound `bound`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hbmc_program_parse(src: *const c_char, bound: u32, out: *mut *mut HbmcProgram) -> HbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((HbmcStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let src = str_arg(src, "src")?;
        let config = load(src, Bound::k(bound)).map_err(|e| (HbmcStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(HbmcProgram { config }));
        Ok(())
    })
}

/// Changes the bound used by later checks.
///
/// # Safety
/// `p` must be a live program handle.
#[no_mangle]
pub unsafe extern "C" fn hbmc_program_set_bound(p: *mut HbmcProgram, bound: u32) -> HbmcStatus {
    guard(|| {
        let p = p.as_mut().ok_or((HbmcStatus::NullArgument, "program is NULL".to_string()))?;
        p.config = p.config.with_bound(bound);
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`hbmc_program_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hbmc_program_free(p: *mut HbmcProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn mode(m: HbmcMode) -> CheckMode {
    match m {
        HbmcMode::Fail => CheckMode::FailReach,
        HbmcMode::Nil => CheckMode::NilReach,
    }
}

/// Checks one query at the program's bound.
///
/// # Safety
/// `p` must be a live program handle, `opts` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hbmc_check(
    p: *const HbmcProgram,
    m: HbmcMode,
    opts: *const HbmcOptions,
    out: *mut *mut HbmcResult,
) -> HbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((HbmcStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or((HbmcStatus::NullArgument, "program is NULL".to_string()))?;
        let opts = options(opts)?;
        let report = check(&p.config, &mode(m), &opts).map_err(check_error)?;
        let bound = p.config.bound.0.unwrap_or(0);
        let r = match report.verdict {
            Verdict::Sat(cex) => HbmcResult { kind: HbmcVerdictKind::Counterexample, bound, cex: Some(cex), reason: None },
            Verdict::Unsat => HbmcResult { kind: HbmcVerdictKind::Unsat, bound, cex: None, reason: None },
            Verdict::Unknown(r) => HbmcResult { kind: HbmcVerdictKind::Unknown, bound, cex: None, reason: Some(r) },
        };
        *out = Box::into_raw(Box::new(r));
        Ok(())
    })
}

/// Raises the bound from 0 to `kmax` until a verdict is reached.
///
/// # Safety
/// As for [`hbmc_check`].
#[no_mangle]
pub unsafe extern "C" fn hbmc_iterate(
    p: *const HbmcProgram,
    kmax: u32,
    opts: *const HbmcOptions,
    out: *mut *mut HbmcResult,
) -> HbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((HbmcStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or((HbmcStatus::NullArgument, "program is NULL".to_string()))?;
        let opts = options(opts)?;
        let report = bound_iterate(&p.config, kmax, &opts).map_err(check_error)?;
        let r = match report.verdict {
            IterateVerdict::Counterexample { k, cex } => {
                HbmcResult { kind: HbmcVerdictKind::Counterexample, bound: k, cex: Some(cex), reason: None }
            }
            IterateVerdict::Verified { k } => HbmcResult { kind: HbmcVerdictKind::Verified, bound: k, cex: None, reason: None },
            IterateVerdict::BoundReached { kmax } => {
                HbmcResult { kind: HbmcVerdictKind::BoundReached, bound: kmax, cex: None, reason: None }
            }
            IterateVerdict::Unknown { k, reason } => {
                HbmcResult { kind: HbmcVerdictKind::Unknown, bound: k, cex: None, reason: Some(reason) }
            }
        };
        *out = Box::into_raw(Box::new(r));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn hbmc_result_kind(r: *const HbmcResult) -> HbmcVerdictKind {
    r.as_ref().map_or(HbmcVerdictKind::Unknown, |r| r.kind)
}

/// The bound the verdict was reached at.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn hbmc_result_bound(r: *const HbmcResult) -> u32 {
    r.as_ref().map_or(0, |r| r.bound)
}

fn model_json(v: &ModelValue) -> serde_json::Value {
    match v {
        ModelValue::Int(i) => serde_json::json!(i),
        ModelValue::Pair(a, b) => serde_json::json!([model_json(a), model_json(b)]),
        other => serde_json::json!(other.to_string()),
    }
}

fn result_json(r: &HbmcResult) -> serde_json::Value {
    let mut inputs = serde_json::Map::new();
    let mut ret = serde_json::Value::Null;
    if let Some(cex) = &r.cex {
        for (name, v) in &cex.inputs {
            inputs.insert(name.clone(), v.as_ref().map_or(serde_json::Value::Null, model_json));
        }
        ret = cex.ret.as_ref().map_or(serde_json::Value::Null, model_json);
    }
    serde_json::json!({ "bound": r.bound, "inputs": inputs, "ret": ret, "reason": r.reason })
}

/// The result as JSON: `{"bound":1,"inputs":{"n":102},"ret":"fail","reason":null}`.
/// Integers are numbers, pairs are two-element arrays, methods are `"m<id>"`.
/// Free the string with [`hbmc_string_free`].
///
/// # Safety
/// `r` must be a live result handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hbmc_result_json(r: *const HbmcResult, out: *mut *mut c_char) -> HbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((HbmcStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let r = r.as_ref().ok_or((HbmcStatus::NullArgument, "result is NULL".to_string()))?;
        *out = CString::new(result_json(r).to_string()).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or a result handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hbmc_result_free(r: *mut HbmcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// The SMT-LIB script for one query, without running the solver.
///
/// # Safety
/// As for [`hbmc_check`]; free the string with [`hbmc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hbmc_emit_smt(
    p: *const HbmcProgram,
    m: HbmcMode,
    opts: *const HbmcOptions,
    out: *mut *mut c_char,
) -> HbmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((HbmcStatus::NullArgument, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or((HbmcStatus::NullArgument, "program is NULL".to_string()))?;
        let opts = options(opts)?;
        let smt = emit(&p.config, &mode(m), &opts).map_err(check_error)?;
        *out = CString::new(smt).map_err(|_| (HbmcStatus::TranslateError, "script contains NUL".to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hbmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

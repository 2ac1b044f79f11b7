use std::ffi::{CStr, CString};
use std::ptr;

use horef_bmc_ffi::*;

const MC91: &str = include_str!("../../../corpus/mc91-e.bmc");

fn solver_available() -> bool {
    let z3 = std::env::var("HOREF_BMC_SOLVER").unwrap_or_else(|_| "z3".into());
    std::process::Command::new(z3).arg("-version").output().is_ok()
}

fn parse(src: &str, k: u32) -> *mut HbmcProgram {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hbmc_program_parse(src.as_ptr(), k, &mut p) }, HbmcStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let e = hbmc_last_error();
    assert!(!e.is_null());
    unsafe { CStr::from_ptr(e) }.to_string_lossy().into_owned()
}

#[test]
fn parse_errors_carry_a_message() {
    let src = CString::new("Main () :(Unit): (").unwrap();
    let mut p = ptr::null_mut();
    let st = unsafe { hbmc_program_parse(src.as_ptr(), 1, &mut p) };
    assert_eq!(st, HbmcStatus::ParseError);
    assert!(p.is_null());
    assert!(last_error().contains("expected"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hbmc_program_parse(ptr::null(), 1, &mut p) }, HbmcStatus::NullArgument);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hbmc_check(ptr::null(), HbmcMode::Fail, ptr::null(), &mut r) }, HbmcStatus::NullArgument);
    unsafe {
        hbmc_program_free(ptr::null_mut());
        hbmc_result_free(ptr::null_mut());
        hbmc_string_free(ptr::null_mut());
    }
}

#[test]
fn emit_without_solver() {
    let p = parse(MC91, 1);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hbmc_emit_smt(p, HbmcMode::Fail, ptr::null(), &mut s) }, HbmcStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    assert!(text.contains("(check-sat)"));
    unsafe {
        hbmc_string_free(s);
        hbmc_program_free(p);
    }
}

#[test]
fn mc91_counterexample_as_json() {
    if !solver_available() {
        eprintln!("skipped: no solver");
        return;
    }
    let p = parse(MC91, 1);
    let opts = hbmc_options_default();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hbmc_check(p, HbmcMode::Fail, &opts, &mut r) }, HbmcStatus::Ok);
    assert_eq!(unsafe { hbmc_result_kind(r) }, HbmcVerdictKind::Counterexample);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hbmc_result_json(r, &mut s) }, HbmcStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    assert_eq!(json["inputs"]["n"], 102);
    assert_eq!(json["ret"], "fail");
    assert_eq!(json["bound"], 1);
    unsafe {
        hbmc_string_free(s);
        hbmc_result_free(r);
        hbmc_program_free(p);
    }
}

#[test]
fn iterate_and_rebound() {
    if !solver_available() {
        eprintln!("skipped: no solver");
        return;
    }
    let p = parse("Main () :(Unit): skip", 3);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hbmc_iterate(p, 4, ptr::null(), &mut r) }, HbmcStatus::Ok);
    assert_eq!(unsafe { hbmc_result_kind(r) }, HbmcVerdictKind::Verified);
    assert_eq!(unsafe { hbmc_result_bound(r) }, 0);
    unsafe { hbmc_result_free(r) };

    let q = parse(MC91, 1);
    assert_eq!(unsafe { hbmc_program_set_bound(q, 0) }, HbmcStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hbmc_check(q, HbmcMode::Fail, ptr::null(), &mut r) }, HbmcStatus::Ok);
    assert_eq!(unsafe { hbmc_result_kind(r) }, HbmcVerdictKind::Unsat);
    unsafe {
        hbmc_result_free(r);
        hbmc_program_free(p);
        hbmc_program_free(q);
    }
}

#[test]
fn missing_solver_is_a_solver_error() {
    let p = parse(MC91, 1);
    let path = CString::new("/nonexistent/solver").unwrap();
    let opts = HbmcOptions { solver_path: path.as_ptr(), ..hbmc_options_default() };
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hbmc_check(p, HbmcMode::Fail, &opts, &mut r) }, HbmcStatus::SolverError);
    assert!(r.is_null());
    assert!(!last_error().is_empty());
    unsafe { hbmc_program_free(p) };
}

#[test]
fn header_declares_the_api() {
    let h = include_str!("../include/horef_bmc.h");
    for sym in [
        "hbmc_program_parse",
        "hbmc_program_free",
        "hbmc_check",
        "hbmc_iterate",
        "hbmc_result_json",
        "hbmc_emit_smt",
        "hbmc_string_free",
        "hbmc_last_error",
        "HBMC_STATUS_OK",
        "typedef struct HbmcProgram HbmcProgram",
    ] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}

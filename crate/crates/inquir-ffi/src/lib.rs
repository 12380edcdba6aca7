//! C ABI over the inquir toolchain.
//!
//! Objects are opaque handles created by `inq_*_new`/`parse`/`compile`
//! calls and released with the matching `*_free`. Fallible calls return an
//! `InqStatus`; the message for the last failure on the calling thread is
//! available from `inq_last_error`. Strings returned by the library must be
//! released with `inq_string_free`.

use inquir::analyzer::{analyze, timeline_csv, Analysis, CostModel};
use inquir::arch::ArchConfig;
use inquir::ast::{parse_program, print_program, System};
use inquir::checker::check;
use inquir::frontend::{compile_qasm, LowerOptions};
use inquir::qstate::{BackendKind, OutcomeOracle};
use inquir::runtime::{run, RunConfig, RunOutcome, SchedulerPolicy};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Arch = 4,
    Compile = 5,
    Analysis = 6,
    Runtime = 7,
    Internal = 8,
}

/// Quantum backend used by `inq_run`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InqBackend {
    StateVector = 0,
    Abstract = 1,
}

/// How a run ended.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InqRunStatus {
    Completed = 0,
    Stuck = 3,
    FuelExhausted = 4,
}

pub struct InqProgram(System);

pub struct InqArch(ArchConfig);

pub struct InqAnalysis(Analysis);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InqMetrics {
    pub e_count: u64,
    pub c_count: u64,
    pub e_depth: u64,
    pub c_depth: u64,
    pub total_cost_ns: u64,
    pub nodes: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InqRunResult {
    pub status: InqRunStatus,
    pub steps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: InqStatus, msg: impl ToString) -> InqStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> InqStatus) -> InqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(InqStatus::Internal, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, InqStatus> {
    if p.is_null() {
        return Err(fail(InqStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(InqStatus::InvalidUtf8, e))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn put<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn inq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn inq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn inq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse program text.
///
/// # Safety
/// `src` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn inq_program_parse(src: *const c_char, out: *mut *mut InqProgram) -> InqStatus {
    guard(|| {
        if out.is_null() {
            return fail(InqStatus::NullArgument, "null out pointer");
        }
        let src = match text(src) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match parse_program(src) {
            Ok(sys) => {
                put(out, InqProgram(sys));
                InqStatus::Ok
            }
            Err(e) => fail(InqStatus::Parse, e),
        }
    })
}

/// Compile an OpenQASM 2.0 circuit for `arch`. Data qubits are freed at the end.
///
/// # Safety
/// `src` must be a nul-terminated string, `arch` a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn inq_program_compile_qasm(
    src: *const c_char,
    arch: *const InqArch,
    out: *mut *mut InqProgram,
) -> InqStatus {
    guard(|| {
        if out.is_null() || arch.is_null() {
            return fail(InqStatus::NullArgument, "null argument");
        }
        let src = match text(src) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match compile_qasm(src, &(*arch).0, &LowerOptions::default()) {
            Ok((sys, _)) => {
                put(out, InqProgram(sys));
                InqStatus::Ok
            }
            Err(e) => fail(InqStatus::Compile, e),
        }
    })
}

/// Concrete syntax of a program. Free with `inq_string_free`.
///
/// # Safety
/// `prog` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_program_print(prog: *const InqProgram) -> *mut c_char {
    match prog.as_ref() {
        Some(p) => to_c(print_program(&p.0)),
        None => ptr::null_mut(),
    }
}

/// Number of processes in the program, or 0 for NULL.
///
/// # Safety
/// `prog` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_program_process_count(prog: *const InqProgram) -> usize {
    prog.as_ref().map_or(0, |p| p.0.procs.len())
}

/// Lint diagnostics as a JSON array. Free with `inq_string_free`.
///
/// # Safety
/// `prog` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_program_check_json(prog: *const InqProgram) -> *mut c_char {
    match prog.as_ref() {
        Some(p) => to_c(serde_json::to_string(&check(&p.0)).unwrap_or_default()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `prog` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn inq_program_free(prog: *mut InqProgram) {
    if !prog.is_null() {
        drop(Box::from_raw(prog));
    }
}

/// Architecture from its JSON description.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn inq_arch_from_json(json: *const c_char, out: *mut *mut InqArch) -> InqStatus {
    arch_with(json, out, ArchConfig::from_json)
}

/// Architecture from a preset such as `linear:8x2,2`, `cube:2,3` or `torus3x3:2,4`.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn inq_arch_preset(spec: *const c_char, out: *mut *mut InqArch) -> InqStatus {
    arch_with(spec, out, ArchConfig::parse_preset)
}

unsafe fn arch_with<E: ToString>(
    s: *const c_char,
    out: *mut *mut InqArch,
    f: impl FnOnce(&str) -> Result<ArchConfig, E>,
) -> InqStatus {
    guard(|| {
        if out.is_null() {
            return fail(InqStatus::NullArgument, "null out pointer");
        }
        let s = match text(s) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match f(s) {
            Ok(a) => {
                put(out, InqArch(a));
                InqStatus::Ok
            }
            Err(e) => fail(InqStatus::Arch, e),
        }
    })
}

/// Number of processors, or 0 for NULL.
///
/// # Safety
/// `arch` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_arch_processor_count(arch: *const InqArch) -> usize {
    arch.as_ref().map_or(0, |a| a.0.num_processors())
}

/// # Safety
/// `arch` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn inq_arch_free(arch: *mut InqArch) {
    if !arch.is_null() {
        drop(Box::from_raw(arch));
    }
}

/// Analyze `prog` on `arch`. `cost_json` may be NULL for the default costs.
///
/// # Safety
/// Handles must be live, `cost_json` NULL or a nul-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn inq_analyze(
    prog: *const InqProgram,
    arch: *const InqArch,
    cost_json: *const c_char,
    out: *mut *mut InqAnalysis,
) -> InqStatus {
    guard(|| {
        if prog.is_null() || arch.is_null() || out.is_null() {
            return fail(InqStatus::NullArgument, "null argument");
        }
        let cost = if cost_json.is_null() {
            CostModel::default()
        } else {
            let s = match text(cost_json) {
                Ok(s) => s,
                Err(e) => return e,
            };
            match CostModel::from_json(s) {
                Ok(c) => c,
                Err(e) => return fail(InqStatus::Analysis, e),
            }
        };
        match analyze(&(*prog).0, &(*arch).0, &cost) {
            Ok(a) => {
                put(out, InqAnalysis(a));
                InqStatus::Ok
            }
            Err(e) => fail(InqStatus::Analysis, e),
        }
    })
}

/// # Safety
/// `a` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn inq_analysis_metrics(a: *const InqAnalysis, out: *mut InqMetrics) -> InqStatus {
    let (Some(a), false) = (a.as_ref(), out.is_null()) else {
        return fail(InqStatus::NullArgument, "null argument");
    };
    let r = &a.0.report;
    *out = InqMetrics {
        e_count: r.e_count as u64,
        c_count: r.c_count as u64,
        e_depth: r.e_depth,
        c_depth: r.c_depth,
        total_cost_ns: r.total_cost_ns,
        nodes: r.nodes as u64,
    };
    InqStatus::Ok
}

/// Full report as JSON. Free with `inq_string_free`.
///
/// # Safety
/// `a` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_analysis_report_json(a: *const InqAnalysis) -> *mut c_char {
    a.as_ref().map_or(ptr::null_mut(), |a| to_c(a.0.report.to_json()))
}

/// Timeline CSV (`time_ns,processor,remaining_ops`). Free with `inq_string_free`.
///
/// # Safety
/// `a` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn inq_analysis_timeline_csv(a: *const InqAnalysis) -> *mut c_char {
    a.as_ref().map_or(ptr::null_mut(), |a| to_c(timeline_csv(&a.0.timeline)))
}

/// # Safety
/// `a` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn inq_analysis_free(a: *mut InqAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Execute `prog` with a seeded random scheduler and Born-rule outcomes.
/// `fuel` of 0 picks the default step budget. When `report_json` is not NULL
/// it receives the stuck report (or NULL if the run did not get stuck).
///
/// # Safety
/// Handles must be live; `out` valid; `report_json` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn inq_run(
    prog: *const InqProgram,
    arch: *const InqArch,
    backend: InqBackend,
    seed: u64,
    fuel: u64,
    out: *mut InqRunResult,
    report_json: *mut *mut c_char,
) -> InqStatus {
    guard(|| {
        if prog.is_null() || arch.is_null() || out.is_null() {
            return fail(InqStatus::NullArgument, "null argument");
        }
        let cfg = RunConfig {
            backend: match backend {
                InqBackend::StateVector => BackendKind::StateVector,
                InqBackend::Abstract => BackendKind::Abstract,
            },
            oracle: OutcomeOracle::born(seed),
            policy: SchedulerPolicy::SeededRandom { seed },
            fuel: (fuel > 0).then_some(fuel),
            free_seed: seed,
            ..RunConfig::default()
        };
        let outcome = match run(&(*prog).0, &(*arch).0, &cfg) {
            Ok(o) => o,
            Err(e) => return fail(InqStatus::Runtime, e),
        };
        let status = match &outcome {
            RunOutcome::Completed { .. } => InqRunStatus::Completed,
            RunOutcome::Stuck { .. } => InqRunStatus::Stuck,
            RunOutcome::FuelExhausted { .. } => InqRunStatus::FuelExhausted,
        };
        *out = InqRunResult { status, steps: outcome.state().steps() };
        if !report_json.is_null() {
            *report_json = match &outcome {
                RunOutcome::Stuck { report, .. } => to_c(report.to_json()),
                _ => ptr::null_mut(),
            };
        }
        InqStatus::Ok
    })
}

use inquir_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

fn fixture(rel: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../inquir/fixtures").join(rel);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    inq_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(inq_last_error()).to_string_lossy().into_owned()
}

unsafe fn load(prog: &str, arch: &str) -> (*mut InqProgram, *mut InqArch) {
    let mut p = ptr::null_mut();
    let mut a = ptr::null_mut();
    assert_eq!(inq_program_parse(fixture(prog).as_ptr(), &mut p), InqStatus::Ok);
    assert_eq!(inq_arch_from_json(fixture(arch).as_ptr(), &mut a), InqStatus::Ok);
    (p, a)
}

#[test]
fn parse_print_and_check() {
    unsafe {
        let (p, a) = load("examples/example1.inq", "arch/line3_e1.json");
        assert_eq!(inq_program_process_count(p), 3);
        assert_eq!(inq_arch_processor_count(a), 3);
        let text = take(inq_program_print(p));
        let mut q = ptr::null_mut();
        let c = CString::new(text).unwrap();
        assert_eq!(inq_program_parse(c.as_ptr(), &mut q), InqStatus::Ok);
        assert_eq!(take(inq_program_check_json(q)), "[]");
        inq_program_free(q);
        inq_program_free(p);
        inq_arch_free(a);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("process 0 { x = ; }").unwrap();
        assert_eq!(inq_program_parse(bad.as_ptr(), &mut p), InqStatus::Parse);
        assert!(p.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(inq_program_parse(ptr::null(), &mut p), InqStatus::NullArgument);
        let mut a = ptr::null_mut();
        let spec = CString::new("hexagon:9").unwrap();
        assert_eq!(inq_arch_preset(spec.as_ptr(), &mut a), InqStatus::Arch);
        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(inq_arch_preset(bytes.as_ptr() as *const _, &mut a), InqStatus::InvalidUtf8);
        assert!(inq_program_print(ptr::null()).is_null());
        let mut m = InqMetrics::default();
        assert_eq!(inq_analysis_metrics(ptr::null(), &mut m), InqStatus::NullArgument);
        // freeing NULL is a no-op
        inq_program_free(ptr::null_mut());
        inq_arch_free(ptr::null_mut());
        inq_analysis_free(ptr::null_mut());
        inq_string_free(ptr::null_mut());
    }
}

#[test]
fn compile_and_analyze() {
    unsafe {
        let spec = CString::new("linear:2x2,2").unwrap();
        let mut a = ptr::null_mut();
        assert_eq!(inq_arch_preset(spec.as_ptr(), &mut a), InqStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(inq_program_compile_qasm(fixture("examples/bell.qasm").as_ptr(), a, &mut p), InqStatus::Ok, "{}", last_error());
        let mut an = ptr::null_mut();
        assert_eq!(inq_analyze(p, a, ptr::null(), &mut an), InqStatus::Ok, "{}", last_error());
        let mut m = InqMetrics::default();
        assert_eq!(inq_analysis_metrics(an, &mut m), InqStatus::Ok);
        assert!(m.e_count > 0);
        assert_eq!(m.c_count, 2 * m.e_count);
        assert!(m.total_cost_ns > 0);
        let report: serde_json::Value = serde_json::from_str(&take(inq_analysis_report_json(an))).unwrap();
        assert_eq!(report["e_count"].as_u64(), Some(m.e_count));
        let csv = take(inq_analysis_timeline_csv(an));
        assert_eq!(csv.lines().next(), Some("time_ns,processor,remaining_ops"));
        inq_analysis_free(an);
        inq_program_free(p);
        inq_arch_free(a);
    }
}

#[test]
fn run_completes_and_gets_stuck() {
    unsafe {
        let (p, a) = load("examples/example1.inq", "arch/line3_e1.json");
        let mut r = InqRunResult { status: InqRunStatus::Stuck, steps: 0 };
        let mut rep = ptr::null_mut();
        assert_eq!(inq_run(p, a, InqBackend::StateVector, 7, 0, &mut r, &mut rep), InqStatus::Ok, "{}", last_error());
        assert_eq!(r.status, InqRunStatus::Completed);
        assert!(r.steps > 0);
        assert!(rep.is_null());
        inq_program_free(p);
        inq_arch_free(a);

        let (p, a) = load("examples/example3.inq", "arch/pair_q1.json");
        assert_eq!(inq_run(p, a, InqBackend::Abstract, 1, 0, &mut r, &mut rep), InqStatus::Ok);
        assert_eq!(r.status, InqRunStatus::Stuck);
        let report = take(rep);
        assert!(report.contains("exhaustion") || report.contains("Exhaustion"), "{}", report);
        assert_eq!(inq_run(p, a, InqBackend::Abstract, 1, 1, &mut r, ptr::null_mut()), InqStatus::Ok);
        assert_eq!(r.status, InqRunStatus::FuelExhausted);
        inq_program_free(p);
        inq_arch_free(a);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(inq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

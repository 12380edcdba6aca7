mod common;

use common::*;
use inquir::checker::{check, has_errors, Severity};

#[test]
fn every_lint_fixture_reports_its_code() {
    let dir = fixture_path("lint");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        let head = text.lines().next().unwrap().trim_start_matches("// expect:").trim().to_string();
        let sys = inquir::ast::parse_program(&text).unwrap();
        let ds = check(&sys);
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if head == "none" {
            assert!(ds.is_empty(), "{}: {:?}", name, ds);
        } else {
            let (code, sev) = head.split_once(' ').unwrap();
            let sev = if sev == "error" { Severity::Error } else { Severity::Warning };
            assert!(ds.iter().any(|d| d.code == code && d.severity == sev), "{}: {:?}", name, ds);
            assert_eq!(has_errors(&ds), sev == Severity::Error || ds.iter().any(|d| d.severity == Severity::Error));
        }
        seen += 1;
    }
    assert!(seen >= 12);
}

#[test]
fn paper_examples_are_clean() {
    for f in ["examples/swap.inq", "examples/example1.inq", "examples/example3.inq", "examples/barrier.inq"] {
        let ds = check(&program(f));
        assert!(!has_errors(&ds), "{}: {:?}", f, ds);
    }
    assert!(check(&program("examples/example1.inq")).is_empty());
}

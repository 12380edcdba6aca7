mod common;

use common::*;
use inquir::analyzer::{analyze, timeline_csv, CostModel, MetricsReport, TIMELINE_HEADER};
use inquir::arch::ArchConfig;
use inquir::frontend::{compile_qasm, LowerOptions};

fn bench(name: &str, arch: &ArchConfig) -> (MetricsReport, Vec<inquir::analyzer::TimelineRow>) {
    let src = fixture(&format!("bench/{}.qasm", name));
    let (sys, _) = compile_qasm(&src, arch, &LowerOptions::default()).unwrap();
    let a = analyze(&sys, arch, &CostModel::default()).unwrap();
    (a.report, a.timeline)
}

fn preset(s: &str) -> ArchConfig {
    ArchConfig::parse_preset(s).unwrap()
}

#[test]
fn ising_linear_counts_and_depth() {
    let (r, _) = bench("ising_model_16", &preset("linear:8x2,2"));
    assert_eq!((r.e_count, r.c_count), (140, 280));
    assert_eq!(r.e_depth, 10);
    let rel = (r.total_cost_ns as f64 - 13510.0).abs() / 13510.0;
    assert!(rel <= 0.15, "cost {}", r.total_cost_ns);
}

#[test]
fn rd53_linear_counts() {
    let (r, _) = bench("rd53_138", &preset("linear:8x2,2"));
    assert_eq!((r.e_count, r.c_count), (122, 244));
}

#[test]
fn adr4_depth_saturates_with_comm() {
    let d = |e: u32| bench("adr4_197", &ArchConfig::linear(8, 2, e).unwrap()).0.e_depth;
    let (d2, d4, d6) = (d(2), d(4), d(6));
    assert_eq!(d4, d6);
    assert!(d4 <= d2);
}

#[test]
fn c_is_twice_e_on_every_topology() {
    for name in ["4gt12-v1_89", "rd53_138", "ising_model_16", "adr4_197"] {
        for a in ["linear:8x2,2", "cube:2,3", "torus3x3:2,4"] {
            let (r, _) = bench(name, &preset(a));
            assert_eq!(r.c_count, 2 * r.e_count, "{} on {}", name, a);
        }
    }
}

#[test]
fn adr4_other_topologies() {
    assert_eq!(bench("adr4_197", &preset("cube:2,3")).0.e_count, 4300);
    assert_eq!(bench("adr4_197", &preset("torus3x3:2,4")).0.e_count, 3580);
}

#[test]
fn timeline_covers_every_processor() {
    let arch = preset("linear:8x2,2");
    let (r, rows) = bench("4gt12-v1_89", &arch);
    let csv = timeline_csv(&rows);
    assert_eq!(csv.lines().next(), Some(TIMELINE_HEADER));
    for p in 0..8 {
        let mine: Vec<_> = rows.iter().filter(|x| x.processor == p).collect();
        assert!(!mine.is_empty(), "processor {}", p);
        assert_eq!(mine[0].time_ns, 0);
        assert_eq!(mine.last().unwrap().remaining_ops, 0);
        assert!(mine.windows(2).all(|w| w[0].time_ns < w[1].time_ns && w[0].remaining_ops > w[1].remaining_ops));
    }
    let end = rows.iter().map(|x| x.time_ns).max().unwrap();
    assert_eq!(end, r.total_cost_ns);
}

#[test]
fn slower_genent_raises_cost() {
    let arch = preset("linear:8x2,2");
    let src = fixture("bench/ising_model_16.qasm");
    let (sys, _) = compile_qasm(&src, &arch, &LowerOptions::default()).unwrap();
    let base = analyze(&sys, &arch, &CostModel::default()).unwrap().report;
    let slow = CostModel::from_json(r#"{"genent_ns": 2000}"#).unwrap();
    let r = analyze(&sys, &arch, &slow).unwrap().report;
    assert_eq!((r.e_count, r.e_depth), (base.e_count, base.e_depth));
    assert!(r.total_cost_ns > base.total_cost_ns);
    let one = CostModel::from_json(r#"{"per_processor": {"3": {"measure_ns": 5000}}}"#).unwrap();
    assert!(analyze(&sys, &arch, &one).unwrap().report.total_cost_ns > base.total_cost_ns);
}

#[test]
fn analysis_is_deterministic() {
    let arch = preset("cube:2,3");
    assert_eq!(bench("rd53_138", &arch).0, bench("rd53_138", &arch).0);
}

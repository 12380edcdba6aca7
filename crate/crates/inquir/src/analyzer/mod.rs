//! Static resource metrics and timing estimates.

mod sim;

use crate::arch::ArchConfig;
use crate::ast::{Pid, System};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("process at participant {0} is not in the architecture")]
    UnknownParticipant(Pid),
    #[error("timing simulation stalled after {completed} of {total} operations")]
    Stuck { completed: usize, total: usize, first_blocked: Vec<u32> },
    #[error("dependency graph has a cycle")]
    CyclicDependencies,
    #[error("cost model: {0}")]
    BadCostModel(String),
}

/// Latencies in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpCosts {
    pub single_qubit_ns: u64,
    pub two_qubit_ns: u64,
    pub measure_ns: u64,
    pub send_ns: u64,
    pub recv_ns: u64,
    pub genent_ns: u64,
    pub init_ns: u64,
    pub free_ns: u64,
}

impl Default for OpCosts {
    fn default() -> Self {
        OpCosts {
            single_qubit_ns: 30,
            two_qubit_ns: 60,
            measure_ns: 240,
            send_ns: 30,
            recv_ns: 0,
            genent_ns: 1000,
            init_ns: 0,
            free_ns: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostOverride {
    pub single_qubit_ns: Option<u64>,
    pub two_qubit_ns: Option<u64>,
    pub measure_ns: Option<u64>,
    pub send_ns: Option<u64>,
    pub recv_ns: Option<u64>,
    pub genent_ns: Option<u64>,
    pub init_ns: Option<u64>,
    pub free_ns: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    #[serde(flatten)]
    pub base: OpCosts,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_processor: BTreeMap<Pid, CostOverride>,
}

impl CostModel {
    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        serde_json::from_str(text).map_err(|e| AnalysisError::BadCostModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost model serializes")
    }

    pub fn for_proc(&self, p: Pid) -> OpCosts {
        let b = self.base;
        match self.per_processor.get(&p) {
            None => b,
            Some(o) => OpCosts {
                single_qubit_ns: o.single_qubit_ns.unwrap_or(b.single_qubit_ns),
                two_qubit_ns: o.two_qubit_ns.unwrap_or(b.two_qubit_ns),
                measure_ns: o.measure_ns.unwrap_or(b.measure_ns),
                send_ns: o.send_ns.unwrap_or(b.send_ns),
                recv_ns: o.recv_ns.unwrap_or(b.recv_ns),
                genent_ns: o.genent_ns.unwrap_or(b.genent_ns),
                init_ns: o.init_ns.unwrap_or(b.init_ns),
                free_ns: o.free_ns.unwrap_or(b.free_ns),
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcStats {
    pub ops: usize,
    pub single_qubit: usize,
    pub two_qubit: usize,
    pub measurements: usize,
    pub sends: usize,
    pub recvs: usize,
    pub genents: usize,
    pub finish_ns: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub e_count: usize,
    pub c_count: usize,
    pub e_depth: u64,
    pub c_depth: u64,
    pub total_cost_ns: u64,
    pub nodes: usize,
    pub per_processor: BTreeMap<Pid, ProcStats>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One row per (time, processor) at which the processor's remaining work changed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub time_ns: u64,
    pub processor: Pid,
    pub remaining_ops: usize,
}

pub const TIMELINE_HEADER: &str = "time_ns,processor,remaining_ops";

pub fn timeline_csv(rows: &[TimelineRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 16 + 32);
    s.push_str(TIMELINE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.time_ns, r.processor, r.remaining_ops));
    }
    s
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: MetricsReport,
    pub timeline: Vec<TimelineRow>,
}

/// Count, schedule and measure `sys` on `arch`.
pub fn analyze(sys: &System, arch: &ArchConfig, cost: &CostModel) -> Result<Analysis, AnalysisError> {
    let g = sim::build(sys, cost);
    let sched = sim::simulate(&g, arch, cost)?;
    let (e_depth, c_depth) = sim::depths(&g, &sched)?;

    let mut per: BTreeMap<Pid, ProcStats> = BTreeMap::new();
    let mut by_proc: BTreeMap<Pid, Vec<u64>> = BTreeMap::new();
    let (mut e_count, mut c_count) = (0, 0);
    for (i, nd) in g.nodes.iter().enumerate() {
        let loc = g.locs[nd.proc as usize];
        let st = per.entry(loc).or_default();
        st.ops += 1;
        st.finish_ns = st.finish_ns.max(sched.end[i]);
        match nd.kind {
            sim::Kind::Gate1 => st.single_qubit += 1,
            sim::Kind::Gate2 => st.two_qubit += 1,
            sim::Kind::Measure => st.measurements += 1,
            sim::Kind::Send { .. } => {
                st.sends += 1;
                c_count += 1
            }
            sim::Kind::Recv { .. } => {
                st.recvs += 1;
                c_count += 1
            }
            sim::Kind::GenEnt { .. } => {
                st.genents += 1;
                e_count += 1
            }
            sim::Kind::Free | sim::Kind::Zero => {}
        }
        by_proc.entry(loc).or_default().push(sched.end[i]);
    }
    // idle processors still get a series
    for p in &arch.processors {
        by_proc.entry(p.id).or_default();
    }
    let mut timeline = Vec::new();
    for (loc, mut ends) in by_proc {
        ends.sort_unstable();
        let total = ends.len();
        timeline.push(TimelineRow { time_ns: 0, processor: loc, remaining_ops: total });
        let mut k = 0;
        while k < total {
            let t = ends[k];
            while k < total && ends[k] == t {
                k += 1;
            }
            if t == 0 {
                if let Some(r) = timeline.last_mut() {
                    r.remaining_ops = total - k;
                }
            } else {
                timeline.push(TimelineRow { time_ns: t, processor: loc, remaining_ops: total - k });
            }
        }
    }
    timeline.sort_by_key(|r| (r.time_ns, r.processor));
    let report = MetricsReport {
        e_count,
        c_count,
        e_depth,
        c_depth,
        total_cost_ns: sched.end.iter().copied().max().unwrap_or(0),
        nodes: g.nodes.len(),
        per_processor: per,
    };
    Ok(Analysis { report, timeline })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub circuit: String,
    pub arch: String,
    #[serde(flatten)]
    pub result: SweepResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepResult {
    Ok(MetricsReport),
    Err { error: String },
}

/// Analyze every (program, architecture) pair in parallel. `programs` are
/// produced per architecture by `build`.
pub fn sweep<F>(circuits: &[String], archs: &[(String, ArchConfig)], cost: &CostModel, build: F) -> Vec<SweepRow>
where
    F: Fn(&str, &ArchConfig) -> Result<System, String> + Sync,
{
    let jobs: Vec<(usize, usize)> =
        (0..circuits.len()).flat_map(|c| (0..archs.len()).map(move |a| (c, a))).collect();
    jobs.par_iter()
        .map(|&(c, a)| {
            let (aname, arch) = &archs[a];
            let result = build(&circuits[c], arch)
                .and_then(|sys| analyze(&sys, arch, cost).map_err(|e| e.to_string()))
                .map(|r| SweepResult::Ok(r.report))
                .unwrap_or_else(|error| SweepResult::Err { error });
            SweepRow { circuit: circuits[c].clone(), arch: aname.clone(), result }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_program;

    #[test]
    fn cost_model_overrides() {
        let m = CostModel::from_json(r#"{"two_qubit_ns": 80, "per_processor": {"3": {"measure_ns": 500}}}"#).unwrap();
        assert_eq!(m.for_proc(0).two_qubit_ns, 80);
        assert_eq!(m.for_proc(0).measure_ns, 240);
        assert_eq!(m.for_proc(3).measure_ns, 500);
        assert_eq!(CostModel::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn local_chain_cost() {
        let sys = parse_program("process 0 { x = init(); H(x); H(x); m = measure(x); }").unwrap();
        let arch = ArchConfig::linear(1, 1, 0).unwrap();
        let a = analyze(&sys, &arch, &CostModel::default()).unwrap();
        assert_eq!(a.report.total_cost_ns, 30 + 30 + 240);
        assert_eq!((a.report.e_count, a.report.c_count), (0, 0));
    }

    #[test]
    fn independent_ops_overlap() {
        let sys = parse_program("process 0 { x = init(); y = init(); H(x); H(y); }").unwrap();
        let arch = ArchConfig::linear(1, 2, 0).unwrap();
        assert_eq!(analyze(&sys, &arch, &CostModel::default()).unwrap().report.total_cost_ns, 30);
    }

    #[test]
    fn timeline_ends_at_zero() {
        let sys = parse_program("process 0 { x = init(); H(x); } process 1 { y = init(); X(y); CX(y, y); }").unwrap();
        let arch = ArchConfig::linear(2, 1, 1).unwrap();
        let a = analyze(&sys, &arch, &CostModel::default()).unwrap();
        let csv = timeline_csv(&a.timeline);
        assert!(csv.starts_with("time_ns,processor,remaining_ops\n"));
        for p in [0, 1] {
            let last = a.timeline.iter().rfind(|r| r.processor == p).unwrap();
            assert_eq!(last.remaining_ops, 0);
        }
    }

    #[test]
    fn unmatched_genent_stalls() {
        let sys = parse_program("process 0 { x = genEnt[1](l); }").unwrap();
        let arch = ArchConfig::linear(2, 1, 1).unwrap();
        assert!(matches!(analyze(&sys, &arch, &CostModel::default()), Err(AnalysisError::Stuck { .. })));
    }
}

use super::{classify_stuck, RunConfig, RuntimeError, RuntimeState, StuckReport};
use crate::arch::ArchConfig;
use crate::ast::{print_instr, System, Value};
use std::collections::{BTreeSet, HashSet};

/// Result of enumerating every interleaving from the initial state.
#[derive(Clone, Debug, Default)]
pub struct ExploreSummary {
    pub states: usize,
    pub completed: usize,
    pub stuck: Vec<StuckReport>,
    /// Order-independent fingerprints of terminal states.
    pub terminals: BTreeSet<String>,
    pub truncated: bool,
}

impl ExploreSummary {
    pub fn any_deadlock(&self) -> bool {
        self.stuck.iter().any(|r| r.kind.name() == "Deadlock")
    }
}

fn env_fingerprint(st: &RuntimeState, i: usize) -> String {
    let p = &st.procs[i];
    let mut kv: Vec<String> = p
        .env
        .iter()
        .filter(|(k, _)| !k.starts_with("_t"))
        .map(|(k, v)| match v {
            Value::Bit(b) => format!("{}={}", k, *b as u8),
            Value::Qubit(q) => format!("{}={}", k, q),
            Value::Var(s) => format!("{}={}", k, s),
        })
        .collect();
    kv.sort();
    let rest: Vec<String> = p.remaining().iter().map(|i| print_instr(i)).collect();
    format!("{}|{}|{}", p.loc, kv.join(","), rest.join(" "))
}

fn key(st: &RuntimeState) -> String {
    let mut procs: Vec<String> = (0..st.procs.len()).map(|i| env_fingerprint(st, i)).collect();
    procs.sort();
    format!(
        "{}#{:?}#{:?}#{:?}",
        procs.join(";"),
        st.heap.iter().map(|(k, v)| (k, v.iter().map(|e| (&e.label, &e.value)).collect::<Vec<_>>())).collect::<Vec<_>>(),
        st.data_store,
        st.epr_free
    )
}

/// Depth-first enumeration of schedules, merging states with equal classical
/// configuration. Stops after `limit` distinct states.
pub fn explore(sys: &System, arch: &ArchConfig, cfg: &RunConfig, limit: usize) -> Result<ExploreSummary, RuntimeError> {
    let init = RuntimeState::new(sys, arch, cfg)?;
    let mut out = ExploreSummary::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut stack = vec![init];
    while let Some(st) = stack.pop() {
        if !seen.insert(key(&st)) {
            continue;
        }
        out.states += 1;
        if out.states > limit {
            out.truncated = true;
            break;
        }
        let enabled = st.enabled_transitions();
        if enabled.is_empty() {
            let k = key(&st);
            if st.is_terminated() {
                out.completed += 1;
                out.terminals.insert(format!("done {}", k));
            } else {
                let r = classify_stuck(&st)?;
                out.terminals.insert(format!("stuck {} {}", r.kind.name(), k));
                out.stuck.push(r);
            }
            continue;
        }
        for t in enabled.iter().rev() {
            let mut next = st.clone();
            next.step_unchecked(t)?;
            stack.push(next);
        }
    }
    Ok(out)
}

use super::{Block, RuntimeError, RuntimeState};
use crate::ast::{print_instr, Instr, Pid, QubitKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// `waiter` cannot proceed until `holder` acts on `resource`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaitEdge {
    pub waiter: usize,
    pub holder: usize,
    pub resource: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StuckKind {
    Deadlock { cycle: Vec<WaitEdge> },
    QubitExhaustion { participant: Pid, procs: Vec<usize> },
    MessageStarvation { session: String, label: String, procs: Vec<usize> },
    MixedOrUnknown,
}

impl StuckKind {
    pub fn name(&self) -> &'static str {
        match self {
            StuckKind::Deadlock { .. } => "Deadlock",
            StuckKind::QubitExhaustion { .. } => "QubitExhaustion",
            StuckKind::MessageStarvation { .. } => "MessageStarvation",
            StuckKind::MixedOrUnknown => "MixedOrUnknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedProc {
    pub proc: usize,
    pub name: String,
    pub loc: Pid,
    pub instr: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StuckReport {
    pub kind: StuckKind,
    pub blocked: Vec<BlockedProc>,
    pub edges: Vec<WaitEdge>,
}

impl StuckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Processes on the reported cycle, in cycle order.
    pub fn cycle_procs(&self) -> Vec<usize> {
        match &self.kind {
            StuckKind::Deadlock { cycle } => cycle.iter().map(|e| e.waiter).collect(),
            _ => vec![],
        }
    }
}

fn contains(body: &[&Instr], pred: &dyn Fn(&Instr) -> bool) -> bool {
    fn walk(b: &[Instr], pred: &dyn Fn(&Instr) -> bool) -> bool {
        b.iter().any(|i| {
            pred(i)
                || match i {
                    Instr::If { then, els, .. } => walk(then, pred) || walk(els, pred),
                    _ => false,
                }
        })
    }
    body.iter().any(|i| {
        pred(i)
            || match i {
                Instr::If { then, els, .. } => walk(then, pred) || walk(els, pred),
                _ => false,
            }
    })
}

/// Explain why no transition is enabled.
pub fn classify_stuck(st: &RuntimeState) -> Result<StuckReport, RuntimeError> {
    if st.is_terminated() || !st.enabled_transitions().is_empty() {
        return Err(RuntimeError::NotStuck);
    }
    let mut edges: BTreeSet<WaitEdge> = BTreeSet::new();
    let mut blocked = Vec::new();
    let mut exhausted: BTreeMap<Pid, Vec<usize>> = BTreeMap::new();
    let mut starved: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();

    // processes at `loc` (other than `me`) whose remaining code satisfies `pred`
    let pending = |me: usize, loc: Option<Pid>, pred: &dyn Fn(&Instr) -> bool| -> Vec<usize> {
        st.procs
            .iter()
            .enumerate()
            .filter(|(j, p)| *j != me && !p.is_done() && loc.is_none_or(|l| p.loc == l))
            .filter(|(_, p)| contains(&p.remaining(), pred))
            .map(|(j, _)| j)
            .collect()
    };
    let holders_of = |me: usize, sel: &dyn Fn(crate::ast::QubitRef) -> bool| -> Vec<(usize, String)> {
        st.holders
            .iter()
            .filter(|(q, h)| **h != me && sel(**q))
            .map(|(q, h)| (*h, q.to_string()))
            .collect()
    };

    for (i, p) in st.procs.iter().enumerate() {
        let h = match p.head() {
            Some(h) => h,
            None => continue,
        };
        blocked.push(BlockedProc {
            proc: i,
            name: p.name.clone(),
            loc: p.loc,
            instr: print_instr(&h.substitute(&p.env)),
        });
        let mut add = |holder: usize, resource: String| {
            if holder != i {
                edges.insert(WaitEdge { waiter: i, holder, resource });
            }
        };
        match h {
            Instr::GenEnt { peer, label, .. } => {
                let li = p.loc;
                let at_head = st.procs.iter().enumerate().any(|(j, q)| {
                    j != i
                        && q.loc == *peer
                        && matches!(q.head(), Some(Instr::GenEnt { peer: pp, label: l2, .. }) if *pp == li && l2 == label)
                });
                if at_head {
                    for (owner, other) in [(li, *peer), (*peer, li)] {
                        if st.comm_candidate(owner, other).is_some() {
                            continue;
                        }
                        let sel = |q: crate::ast::QubitRef| {
                            q.kind == QubitKind::Comm
                                && st.layout.comm_slot(q).is_some_and(|s| {
                                    s.owner == owner && (s.peer.is_none() || s.peer == Some(other))
                                })
                        };
                        for (hj, q) in holders_of(i, &sel) {
                            add(hj, q);
                        }
                    }
                } else {
                    let pred = |x: &Instr| matches!(x, Instr::GenEnt { peer: pp, label: l2, .. } if *pp == li && l2 == label);
                    for j in pending(i, Some(*peer), &pred) {
                        add(j, format!("genEnt({})", label));
                    }
                }
            }
            Instr::Open { sess, parts } => {
                for part in parts {
                    let pred = |x: &Instr| matches!(x, Instr::Open { sess: s2, .. } if s2 == sess);
                    for j in pending(i, Some(*part), &pred) {
                        add(j, format!("open({})", sess));
                    }
                }
            }
            Instr::RcxC { peer, sess, label, .. } | Instr::RcxT { peer, sess, label, .. } => {
                let li = p.loc;
                let ctrl = matches!(h, Instr::RcxC { .. });
                let pred = |x: &Instr| match x {
                    Instr::RcxT { peer: pp, sess: s2, label: l2, .. } if ctrl => *pp == li && s2 == sess && l2 == label,
                    Instr::RcxC { peer: pp, sess: s2, label: l2, .. } if !ctrl => *pp == li && s2 == sess && l2 == label,
                    _ => false,
                };
                for j in pending(i, Some(*peer), &pred) {
                    add(j, format!("rcx({})", label));
                }
            }
            _ => match st.local_block(i) {
                Some(Block::NoDataQubit(loc)) => {
                    let sel = |q: crate::ast::QubitRef| st.layout.data_home(q) == Some(loc);
                    let hs = holders_of(i, &sel);
                    if hs.is_empty() {
                        exhausted.entry(loc).or_default().push(i);
                    }
                    for (hj, q) in hs {
                        add(hj, q);
                    }
                }
                Some(Block::NoMessage { sess, at, label }) => {
                    let pred = |x: &Instr| match x {
                        Instr::Send { sess: s2, peer, label: l2, .. } | Instr::QSend { sess: s2, peer, label: l2, .. } => {
                            *s2 == sess && *peer == at && *l2 == label
                        }
                        _ => false,
                    };
                    let js = pending(i, None, &pred);
                    if js.is_empty() {
                        starved.entry((sess.clone(), label.clone())).or_default().push(i);
                    }
                    for j in js {
                        add(j, format!("{}:{}", sess, label));
                    }
                }
                Some(Block::SessionClosed { sess, at }) => {
                    let pred = |x: &Instr| matches!(x, Instr::Open { sess: s2, .. } if *s2 == sess);
                    for j in pending(i, Some(at), &pred) {
                        add(j, format!("open({})", sess));
                    }
                }
                _ => {}
            },
        }
    }

    let edges: Vec<WaitEdge> = edges.into_iter().collect();
    let kind = if let Some(cycle) = shortest_cycle(st.procs.len(), &edges) {
        StuckKind::Deadlock { cycle }
    } else if let Some((participant, procs)) = exhausted.into_iter().next() {
        StuckKind::QubitExhaustion { participant, procs }
    } else if let Some(((session, label), procs)) = starved.into_iter().next() {
        StuckKind::MessageStarvation { session, label, procs }
    } else {
        StuckKind::MixedOrUnknown
    };
    Ok(StuckReport { kind, blocked, edges })
}

fn shortest_cycle(n: usize, edges: &[WaitEdge]) -> Option<Vec<WaitEdge>> {
    let mut adj: Vec<Vec<&WaitEdge>> = vec![Vec::new(); n];
    for e in edges {
        adj[e.waiter].push(e);
    }
    let mut best: Option<Vec<WaitEdge>> = None;
    for s in 0..n {
        // BFS from s back to s
        let mut prev: Vec<Option<&WaitEdge>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut q = VecDeque::new();
        q.push_back(s);
        let mut closing: Option<&WaitEdge> = None;
        'bfs: while let Some(u) = q.pop_front() {
            for e in &adj[u] {
                if e.holder == s {
                    closing = Some(e);
                    break 'bfs;
                }
                if !seen[e.holder] {
                    seen[e.holder] = true;
                    prev[e.holder] = Some(e);
                    q.push_back(e.holder);
                }
            }
        }
        if let Some(last) = closing {
            let mut path = vec![last.clone()];
            let mut u = last.waiter;
            while u != s {
                let e = prev[u].expect("bfs tree");
                path.push(e.clone());
                u = e.waiter;
            }
            path.reverse();
            if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                best = Some(path);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(w: usize, h: usize) -> WaitEdge {
        WaitEdge { waiter: w, holder: h, resource: String::new() }
    }

    #[test]
    fn finds_shortest() {
        let edges = vec![e(0, 1), e(1, 2), e(2, 0), e(3, 4), e(4, 3)];
        let c = shortest_cycle(5, &edges).unwrap();
        assert_eq!(c.iter().map(|x| x.waiter).collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn acyclic() {
        assert!(shortest_cycle(3, &[e(0, 1), e(1, 2)]).is_none());
    }
}

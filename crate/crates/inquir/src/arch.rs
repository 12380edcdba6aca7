//! Processor topology and qubit capacities.

use crate::ast::{Pid, QubitRef};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchError {
    #[error("processor ids must be 0..{0} without gaps or repeats")]
    BadIds(usize),
    #[error("link {0}-{1} references an unknown processor or is a self loop")]
    BadLink(Pid, Pid),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(Pid, Pid),
    #[error("unknown processor {0}")]
    UnknownProcessor(Pid),
    #[error("no path from {0} to {1}")]
    Disconnected(Pid, Pid),
    #[error("bad architecture spec `{0}`")]
    BadSpec(String),
    #[error("processor {0} has degree {1} but only {2} comm qubits")]
    TooFewComm(Pid, usize, u32),
    #[error("{0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessorSpec {
    pub id: Pid,
    pub data_qubits: u32,
    /// Comm qubits usable on any of the processor's links.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub comm_qubits: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: Pid,
    pub b: Pid,
    /// Comm qubits dedicated to this link on each side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm_qubits: Option<u32>,
    /// Per-side overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm_a: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm_b: Option<u32>,
}

impl LinkSpec {
    pub fn side(&self, p: Pid) -> u32 {
        let over = if p == self.a { self.comm_a } else { self.comm_b };
        over.or(self.comm_qubits).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub processors: Vec<ProcessorSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

/// A communication qubit and the link side it serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommSlot {
    pub qubit: QubitRef,
    pub owner: Pid,
    /// `None` for processor-wide comm qubits.
    pub peer: Option<Pid>,
}

/// Concrete qubit identities derived from an `ArchConfig`.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitLayout {
    pub data: BTreeMap<Pid, Vec<QubitRef>>,
    pub comm: Vec<CommSlot>,
}

impl QubitLayout {
    pub fn data_home(&self, q: QubitRef) -> Option<Pid> {
        self.data.iter().find(|(_, v)| v.contains(&q)).map(|(p, _)| *p)
    }

    pub fn comm_slot(&self, q: QubitRef) -> Option<&CommSlot> {
        self.comm.iter().find(|s| s.qubit == q)
    }
}

impl ArchConfig {
    pub fn from_json(text: &str) -> Result<Self, ArchError> {
        let a: ArchConfig = serde_json::from_str(text).map_err(|e| ArchError::Json(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("arch serializes")
    }

    pub fn num_processors(&self) -> usize {
        self.processors.len()
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let n = self.processors.len();
        let ids: BTreeSet<Pid> = self.processors.iter().map(|p| p.id).collect();
        if ids.len() != n || ids.iter().any(|&i| i as usize >= n) {
            return Err(ArchError::BadIds(n));
        }
        let mut seen = BTreeSet::new();
        for l in &self.links {
            if l.a == l.b || !ids.contains(&l.a) || !ids.contains(&l.b) {
                return Err(ArchError::BadLink(l.a, l.b));
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                return Err(ArchError::DuplicateLink(l.a, l.b));
            }
        }
        Ok(())
    }

    pub fn processor(&self, id: Pid) -> Option<&ProcessorSpec> {
        self.processors.iter().find(|p| p.id == id)
    }

    /// Sorted neighbor list of every processor.
    pub fn adjacency(&self) -> Vec<Vec<Pid>> {
        let mut adj = vec![Vec::new(); self.processors.len()];
        for l in &self.links {
            adj[l.a as usize].push(l.b);
            adj[l.b as usize].push(l.a);
        }
        for v in adj.iter_mut() {
            v.sort_unstable();
        }
        adj
    }

    pub fn adjacent(&self, a: Pid, b: Pid) -> bool {
        self.links.iter().any(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
    }

    /// BFS shortest path, neighbors visited in increasing id order.
    pub fn shortest_path(&self, from: Pid, to: Pid) -> Result<Vec<Pid>, ArchError> {
        let n = self.processors.len();
        if from as usize >= n {
            return Err(ArchError::UnknownProcessor(from));
        }
        if to as usize >= n {
            return Err(ArchError::UnknownProcessor(to));
        }
        let adj = self.adjacency();
        let mut parent: Vec<Option<Pid>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[from as usize] = true;
        let mut q = VecDeque::from([from]);
        while let Some(u) = q.pop_front() {
            if u == to {
                break;
            }
            for &v in &adj[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    parent[v as usize] = Some(u);
                    q.push_back(v);
                }
            }
        }
        if !seen[to as usize] {
            return Err(ArchError::Disconnected(from, to));
        }
        let mut path = vec![to];
        let mut cur = to;
        while let Some(p) = parent[cur as usize] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }

    /// Assign qubit uids: data qubits processor by processor, then link comm
    /// qubits (a side before b side), then processor-wide comm qubits.
    pub fn layout(&self) -> QubitLayout {
        let mut uid = 0u32;
        let mut data = BTreeMap::new();
        let mut procs: Vec<&ProcessorSpec> = self.processors.iter().collect();
        procs.sort_by_key(|p| p.id);
        for p in &procs {
            let v: Vec<QubitRef> = (0..p.data_qubits).map(|k| QubitRef::data(uid + k)).collect();
            uid += p.data_qubits;
            data.insert(p.id, v);
        }
        let mut comm = Vec::new();
        for l in &self.links {
            for (owner, peer) in [(l.a, l.b), (l.b, l.a)] {
                for _ in 0..l.side(owner) {
                    comm.push(CommSlot { qubit: QubitRef::comm(uid), owner, peer: Some(peer) });
                    uid += 1;
                }
            }
        }
        for p in &procs {
            for _ in 0..p.comm_qubits {
                comm.push(CommSlot { qubit: QubitRef::comm(uid), owner: p.id, peer: None });
                uid += 1;
            }
        }
        QubitLayout { data, comm }
    }

    pub fn total_data_qubits(&self) -> u32 {
        self.processors.iter().map(|p| p.data_qubits).sum()
    }

    // E comm qubits per processor are split evenly over its links, and a link
    // side never holds more halves than the processor has data qubits.
    fn from_edges(n: usize, q: u32, e: u32, edges: &[(Pid, Pid)]) -> Result<Self, ArchError> {
        let mut deg = vec![0usize; n];
        for &(a, b) in edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let side = |p: Pid| -> Result<u32, ArchError> {
            let d = deg[p as usize].max(1) as u32;
            let s = e / d;
            if s == 0 {
                return Err(ArchError::TooFewComm(p, deg[p as usize], e));
            }
            Ok(s.min(q.max(1)))
        };
        let mut links = Vec::new();
        for &(a, b) in edges {
            links.push(LinkSpec { a, b, comm_qubits: None, comm_a: Some(side(a)?), comm_b: Some(side(b)?) });
        }
        let processors = (0..n as Pid).map(|id| ProcessorSpec { id, data_qubits: q, comm_qubits: 0 }).collect();
        let a = ArchConfig { processors, links };
        a.validate()?;
        Ok(a)
    }

    /// `m` processors in a line.
    pub fn linear(m: usize, q: u32, e: u32) -> Result<Self, ArchError> {
        if m == 0 {
            return Err(ArchError::BadSpec("linear with zero processors".into()));
        }
        let edges: Vec<(Pid, Pid)> = (1..m as Pid).map(|i| (i - 1, i)).collect();
        Self::from_edges(m, q, e, &edges)
    }

    /// Eight processors on the cube; processor i sits at vertex gray(i).
    pub fn cube(q: u32, e: u32) -> Result<Self, ArchError> {
        let gray = |i: u32| i ^ (i >> 1);
        let mut edges = Vec::new();
        for i in 0..8u32 {
            for j in i + 1..8 {
                if (gray(i) ^ gray(j)).count_ones() == 1 {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(8, q, e, &edges)
    }

    /// Nine processors on a 3x3 torus, row-major ids.
    pub fn torus3x3(q: u32, e: u32) -> Result<Self, ArchError> {
        let mut set = BTreeSet::new();
        for r in 0..3u32 {
            for c in 0..3u32 {
                let id = 3 * r + c;
                for nb in [3 * r + (c + 1) % 3, 3 * ((r + 1) % 3) + c] {
                    set.insert((id.min(nb), id.max(nb)));
                }
            }
        }
        let edges: Vec<(Pid, Pid)> = set.into_iter().collect();
        Self::from_edges(9, q, e, &edges)
    }

    /// Inline preset: `linear:8x2,2`, `linear(8,2,2)`, `cube:2,3`, `cube(2,3)`,
    /// `torus3x3:2,4`, `torus3x3(2,4)`.
    pub fn parse_preset(spec: &str) -> Result<Self, ArchError> {
        let bad = || ArchError::BadSpec(spec.to_string());
        let s = spec.trim();
        let (name, rest) = if let Some(i) = s.find(':') {
            (&s[..i], s[i + 1..].to_string())
        } else if let (Some(i), true) = (s.find('('), s.ends_with(')')) {
            (&s[..i], s[i + 1..s.len() - 1].to_string())
        } else {
            return Err(bad());
        };
        let nums: Vec<u32> = rest
            .split([',', 'x'])
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (name.trim(), nums.as_slice()) {
            ("linear", [m, q, e]) => Self::linear(*m as usize, *q, *e),
            ("cube", [q, e]) => Self::cube(*q, *e),
            ("torus3x3" | "torus", [q, e]) => Self::torus3x3(*q, *e),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_shape() {
        let a = ArchConfig::linear(8, 2, 2).unwrap();
        assert_eq!(a.links.len(), 7);
        assert_eq!(a.adjacency()[0], vec![1]);
        assert_eq!(a.adjacency()[3], vec![2, 4]);
        // interior sides split E over two links, end sides keep min(E, Q)
        assert_eq!(a.links[0].side(0), 2);
        assert_eq!(a.links[0].side(1), 1);
        assert_eq!(a.shortest_path(0, 3).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn capacity_capped_by_data_qubits() {
        let a = ArchConfig::linear(8, 2, 6).unwrap();
        assert_eq!(a.links[3].side(3), 2);
        assert_eq!(ArchConfig::linear(8, 2, 4).unwrap().links[3].side(3), 2);
    }

    #[test]
    fn cube_is_three_regular() {
        let a = ArchConfig::cube(2, 3).unwrap();
        assert_eq!(a.links.len(), 12);
        assert!(a.adjacency().iter().all(|n| n.len() == 3));
        assert!(a.adjacent(0, 1) && a.adjacent(0, 7) && a.adjacent(3, 4) && a.adjacent(1, 6));
        assert!(!a.adjacent(0, 2));
        assert_eq!(a.shortest_path(0, 2).unwrap().len(), 3);
    }

    #[test]
    fn torus_is_four_regular() {
        let a = ArchConfig::torus3x3(2, 4).unwrap();
        assert_eq!(a.links.len(), 18);
        assert!(a.adjacency().iter().all(|n| n.len() == 4));
        assert!(a.adjacent(0, 2) && a.adjacent(0, 6));
        assert_eq!(a.links[0].side(0), 1);
    }

    #[test]
    fn lowest_id_tie_break() {
        let a = ArchConfig::torus3x3(2, 4).unwrap();
        // 0 -> 4 has two shortest routes, via 1 or via 3
        assert_eq!(a.shortest_path(0, 4).unwrap(), vec![0, 1, 4]);
    }

    #[test]
    fn preset_syntax() {
        assert_eq!(ArchConfig::parse_preset("linear:8x2,2").unwrap(), ArchConfig::linear(8, 2, 2).unwrap());
        assert_eq!(ArchConfig::parse_preset("linear(8,2,2)").unwrap(), ArchConfig::linear(8, 2, 2).unwrap());
        assert_eq!(ArchConfig::parse_preset("cube:2,3").unwrap(), ArchConfig::cube(2, 3).unwrap());
        assert!(ArchConfig::parse_preset("ring:3").is_err());
        assert!(ArchConfig::torus3x3(2, 2).is_err());
    }

    #[test]
    fn layout_uids_disjoint() {
        let a = ArchConfig::linear(3, 1, 2).unwrap();
        let l = a.layout();
        assert_eq!(l.data[&0], vec![QubitRef::data(0)]);
        assert_eq!(l.data[&2], vec![QubitRef::data(2)]);
        assert_eq!(l.comm[0].qubit, QubitRef::comm(3));
        let all: BTreeSet<u32> = l.data.values().flatten().chain(l.comm.iter().map(|s| &s.qubit)).map(|q| q.uid).collect();
        assert_eq!(all.len(), 3 + l.comm.len());
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"processors":[{"id":0,"data_qubits":2},{"id":1,"data_qubits":2,"comm_qubits":1}],
                       "links":[{"a":0,"b":1,"comm_qubits":2}]}"#;
        let a = ArchConfig::from_json(text).unwrap();
        assert_eq!(ArchConfig::from_json(&a.to_json()).unwrap(), a);
        assert_eq!(a.layout().comm.len(), 5);
    }

    #[test]
    fn rejects_bad_ids() {
        let text = r#"{"processors":[{"id":1,"data_qubits":2}],"links":[]}"#;
        assert!(ArchConfig::from_json(text).is_err());
    }
}

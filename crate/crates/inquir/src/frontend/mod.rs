//! Monolithic circuit -> distributed InQuIR program.

mod qasm;

pub use qasm::{eval_param, parse_qasm, Circuit, CircuitOp, QasmError};

use crate::arch::{ArchConfig, ArchError};
use crate::ast::{Expr, Gate, Instr, Pid, Process, System};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("circuit needs {need} data qubits, architecture has {have}")]
    TooManyQubits { need: usize, have: usize },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Qasm(#[from] QasmError),
}

/// Sequential placement: fill processor 0, then 1, and so on.
pub fn partition(circ: &Circuit, arch: &ArchConfig) -> Result<Vec<Pid>, CompileError> {
    let have = arch.total_data_qubits() as usize;
    if circ.num_qubits > have {
        return Err(CompileError::TooManyQubits { need: circ.num_qubits, have });
    }
    let mut procs: Vec<&crate::arch::ProcessorSpec> = arch.processors.iter().collect();
    procs.sort_by_key(|p| p.id);
    let mut out = Vec::with_capacity(circ.num_qubits);
    for p in procs {
        for _ in 0..p.data_qubits {
            if out.len() == circ.num_qubits {
                return Ok(out);
            }
            out.push(p.id);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LowerOptions {
    /// Free every data qubit and close the session at the end of each process.
    pub release_at_end: bool,
    pub session: String,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { release_at_end: true, session: "s".into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CompileStats {
    pub qubits: usize,
    pub local_two_qubit: usize,
    pub remote_cx: usize,
    /// Sum of shortest-path lengths over remote CX gates.
    pub hops: usize,
    pub swaps: usize,
}

struct Lowering<'a> {
    arch: &'a ArchConfig,
    place: &'a [Pid],
    bodies: BTreeMap<Pid, Vec<Instr>>,
    sess: String,
    next_var: usize,
    next_label: usize,
    stats: CompileStats,
}

fn q(i: usize) -> Expr {
    Expr::var(format!("q{}", i))
}

impl<'a> Lowering<'a> {
    fn var(&mut self, prefix: &str) -> String {
        self.next_var += 1;
        format!("{}{}", prefix, self.next_var)
    }

    fn label(&mut self, prefix: &str) -> String {
        self.next_label += 1;
        format!("{}{}", prefix, self.next_label)
    }

    fn push(&mut self, p: Pid, i: Instr) {
        self.bodies.entry(p).or_default().push(i);
    }

    fn gate(&mut self, p: Pid, g: Gate, args: Vec<Expr>) {
        self.push(p, Instr::Gate { gate: g, args });
    }

    fn remote_cx(&mut self, a: usize, b: usize) -> Result<(), CompileError> {
        let (pa, pb) = (self.place[a], self.place[b]);
        let path = self.arch.shortest_path(pa, pb)?;
        let k = path.len() - 1;
        self.stats.remote_cx += 1;
        self.stats.hops += k;
        let mut left: Vec<Option<String>> = vec![None; k + 1];
        let mut right: Vec<Option<String>> = vec![None; k + 1];
        for h in 0..k {
            let l = self.label("e");
            let (u, v) = (path[h], path[h + 1]);
            let (cu, cv) = (self.var("c"), self.var("c"));
            self.push(u, Instr::GenEnt { var: cu.clone(), peer: v, label: l.clone() });
            self.push(v, Instr::GenEnt { var: cv.clone(), peer: u, label: l });
            right[h] = Some(cu);
            left[h + 1] = Some(cv);
        }
        let ca = right[0].clone().expect("first hop");
        let cb = left[k].clone().expect("last hop");
        for h in 1..k {
            self.stats.swaps += 1;
            let n = path[h];
            let (w1, w2) = (self.var("w"), self.var("w"));
            let l = self.label("m");
            let (lc, rc) = (left[h].clone().expect("hop"), right[h].clone().expect("hop"));
            self.push(n, Instr::EntSwap { out1: w1.clone(), out2: w2.clone(), a: Expr::var(lc), b: Expr::var(rc) });
            let s = self.sess.clone();
            self.push(n, Instr::Send { sess: s.clone(), peer: pa, label: l.clone(), expr: Expr::var(w1) });
            self.push(n, Instr::Send { sess: s.clone(), peer: pb, label: l.clone(), expr: Expr::var(w2) });
            let (r1, r2) = (self.var("r"), self.var("r"));
            self.push(pa, Instr::Recv { sess: s.clone(), label: l.clone(), var: r1.clone() });
            self.push(
                pa,
                Instr::If {
                    cond: Expr::var(r1),
                    then: vec![Instr::Gate { gate: Gate::Z, args: vec![Expr::var(ca.as_str())] }],
                    els: vec![],
                },
            );
            self.push(pb, Instr::Recv { sess: s, label: l, var: r2.clone() });
            self.push(
                pb,
                Instr::If {
                    cond: Expr::var(r2),
                    then: vec![Instr::Gate { gate: Gate::X, args: vec![Expr::var(cb.as_str())] }],
                    els: vec![],
                },
            );
        }
        let l = self.label("x");
        let s = self.sess.clone();
        self.push(pa, Instr::RcxC { peer: pb, sess: s.clone(), label: l.clone(), data: q(a), comm: Expr::var(ca) });
        self.push(pb, Instr::RcxT { peer: pa, sess: s, label: l, data: q(b), comm: Expr::var(cb) });
        Ok(())
    }
}

/// Lower a placed circuit. Every processor that takes part gets one process.
pub fn lower(
    circ: &Circuit,
    arch: &ArchConfig,
    place: &[Pid],
    opts: &LowerOptions,
) -> Result<(System, CompileStats), CompileError> {
    arch.validate()?;
    let mut lw = Lowering {
        arch,
        place,
        bodies: BTreeMap::new(),
        sess: opts.session.clone(),
        next_var: 0,
        next_label: 0,
        stats: CompileStats { qubits: circ.num_qubits, ..Default::default() },
    };
    for (i, &p) in place.iter().enumerate() {
        lw.push(p, Instr::Init { var: format!("q{}", i) });
    }
    for op in &circ.ops {
        match op {
            CircuitOp::Gate { gate, qubits } if qubits.len() == 1 => lw.gate(place[qubits[0]], *gate, vec![q(qubits[0])]),
            CircuitOp::Gate { qubits, .. } => {
                let (a, b) = (qubits[0], qubits[1]);
                if place[a] == place[b] {
                    lw.stats.local_two_qubit += 1;
                    lw.gate(place[a], Gate::CX, vec![q(a), q(b)]);
                } else {
                    lw.remote_cx(a, b)?;
                }
            }
            CircuitOp::Measure { qubit, clbit } => {
                lw.push(place[*qubit], Instr::Measure { var: format!("b{}", clbit), args: vec![q(*qubit)] })
            }
            CircuitOp::Barrier { .. } => {}
        }
    }
    if opts.release_at_end {
        for (i, &p) in place.iter().enumerate() {
            lw.push(p, Instr::Free { arg: q(i) });
        }
        let s = lw.sess.clone();
        for body in lw.bodies.values_mut() {
            body.push(Instr::Close { sess: s.clone() });
        }
    }
    let parts: Vec<Pid> = lw.bodies.keys().copied().collect();
    let procs = lw
        .bodies
        .into_iter()
        .map(|(p, mut body)| {
            body.insert(0, Instr::Open { sess: opts.session.clone(), parts: parts.clone() });
            Process::new(p, body)
        })
        .collect();
    Ok((System::new(procs), lw.stats))
}

/// Parse, place and lower in one go.
pub fn compile_qasm(src: &str, arch: &ArchConfig, opts: &LowerOptions) -> Result<(System, CompileStats), CompileError> {
    let circ = parse_qasm(src)?;
    let place = partition(&circ, arch)?;
    lower(&circ, arch, &place, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_partition() {
        let circ = parse_qasm("qreg q[5]; h q[4];").unwrap();
        let arch = ArchConfig::linear(4, 2, 2).unwrap();
        assert_eq!(partition(&circ, &arch).unwrap(), vec![0, 0, 1, 1, 2]);
        let big = parse_qasm("qreg q[9]; h q[4];").unwrap();
        assert!(matches!(partition(&big, &arch), Err(CompileError::TooManyQubits { need: 9, have: 8 })));
    }

    #[test]
    fn adjacent_remote_cx_shape() {
        let arch = ArchConfig::linear(2, 1, 1).unwrap();
        let (sys, st) = compile_qasm("qreg q[2]; cx q[0], q[1];", &arch, &LowerOptions::default()).unwrap();
        assert_eq!(st.hops, 1);
        let ops: Vec<&str> = sys.procs[0].body.iter().map(|i| i.mnemonic()).collect();
        assert_eq!(ops, ["open", "init", "genEnt", "rcxc", "free", "close"]);
    }

    #[test]
    fn two_hop_inserts_swap() {
        let arch = ArchConfig::linear(3, 1, 2).unwrap();
        let (sys, st) = compile_qasm("qreg q[3]; cx q[0], q[2];", &arch, &LowerOptions::default()).unwrap();
        assert_eq!((st.hops, st.swaps), (2, 1));
        let mid: Vec<&str> = sys.procs[1].body.iter().map(|i| i.mnemonic()).collect();
        assert_eq!(mid, ["open", "init", "genEnt", "genEnt", "entSwap", "send", "send", "free", "close"]);
    }
}

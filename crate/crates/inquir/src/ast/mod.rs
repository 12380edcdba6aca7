//! Program representation: located processes, instructions, expressions.

mod parse;
mod print;

pub use parse::{parse_program, ParseError};
pub use print::{print_expr, print_instr, print_program};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Index of a quantum processor.
pub type Pid = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitKind {
    Data,
    Comm,
}

/// A physical qubit. Uids are unique across both kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitRef {
    pub kind: QubitKind,
    pub uid: u32,
}

impl QubitRef {
    pub fn data(uid: u32) -> Self {
        QubitRef { kind: QubitKind::Data, uid }
    }
    pub fn comm(uid: u32) -> Self {
        QubitRef { kind: QubitKind::Comm, uid }
    }
}

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            QubitKind::Data => write!(f, "@q{}", self.uid),
            QubitKind::Comm => write!(f, "@c{}", self.uid),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Bit(bool),
    Qubit(QubitRef),
    Var(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Val(Value),
    And(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Val(Value::Var(name.into()))
    }
    pub fn bit(b: bool) -> Expr {
        Expr::Val(Value::Bit(b))
    }
    pub fn qubit(q: QubitRef) -> Expr {
        Expr::Val(Value::Qubit(q))
    }

    /// Variables read by this expression, in first-occurrence order.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Val(Value::Var(v)) => {
                if !out.contains(&v.as_str()) {
                    out.push(v)
                }
            }
            Expr::Val(_) => {}
            Expr::And(a, b) | Expr::Xor(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Not(a) => a.collect_vars(out),
        }
    }

    pub fn substitute(&self, env: &HashMap<String, Value>) -> Expr {
        match self {
            Expr::Val(Value::Var(v)) => match env.get(v) {
                Some(val) => Expr::Val(val.clone()),
                None => self.clone(),
            },
            Expr::Val(_) => self.clone(),
            Expr::And(a, b) => Expr::And(Box::new(a.substitute(env)), Box::new(b.substitute(env))),
            Expr::Xor(a, b) => Expr::Xor(Box::new(a.substitute(env)), Box::new(b.substitute(env))),
            Expr::Not(a) => Expr::Not(Box::new(a.substitute(env))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx { theta: f64 },
    Ry { theta: f64 },
    Rz { theta: f64 },
    U1 { lambda: f64 },
    U2 { phi: f64, lambda: f64 },
    U3 { theta: f64, phi: f64, lambda: f64 },
    CX,
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::CX => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::Sdg => "Sdg",
            Gate::T => "T",
            Gate::Tdg => "Tdg",
            Gate::Rx { .. } => "RX",
            Gate::Ry { .. } => "RY",
            Gate::Rz { .. } => "RZ",
            Gate::U1 { .. } => "U1",
            Gate::U2 { .. } => "U2",
            Gate::U3 { .. } => "U3",
            Gate::CX => "CX",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::Rx { theta } | Gate::Ry { theta } | Gate::Rz { theta } => vec![theta],
            Gate::U1 { lambda } => vec![lambda],
            Gate::U2 { phi, lambda } => vec![phi, lambda],
            Gate::U3 { theta, phi, lambda } => vec![theta, phi, lambda],
            _ => vec![],
        }
    }

    /// Build a gate from its concrete-syntax name and parameter list.
    pub fn from_name(name: &str, params: &[f64]) -> Option<Gate> {
        let g = match (name, params) {
            ("X", []) => Gate::X,
            ("Y", []) => Gate::Y,
            ("Z", []) => Gate::Z,
            ("H", []) => Gate::H,
            ("S", []) => Gate::S,
            ("Sdg", []) => Gate::Sdg,
            ("T", []) => Gate::T,
            ("Tdg", []) => Gate::Tdg,
            ("RX", [t]) => Gate::Rx { theta: *t },
            ("RY", [t]) => Gate::Ry { theta: *t },
            ("RZ", [t]) => Gate::Rz { theta: *t },
            ("U1", [l]) => Gate::U1 { lambda: *l },
            ("U2", [p, l]) => Gate::U2 { phi: *p, lambda: *l },
            ("U3", [t, p, l]) => Gate::U3 { theta: *t, phi: *p, lambda: *l },
            ("CX", []) => Gate::CX,
            _ => return None,
        };
        Some(g)
    }

    pub fn is_gate_name(name: &str) -> bool {
        matches!(
            name,
            "X" | "Y" | "Z" | "H" | "S" | "Sdg" | "T" | "Tdg" | "RX" | "RY" | "RZ" | "U1" | "U2" | "U3" | "CX"
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instr {
    Stop,
    Open { sess: String, parts: Vec<Pid> },
    Close { sess: String },
    Init { var: String },
    Free { arg: Expr },
    Assign { var: String, expr: Expr },
    Gate { gate: Gate, args: Vec<Expr> },
    Measure { var: String, args: Vec<Expr> },
    GenEnt { var: String, peer: Pid, label: String },
    EntSwap { out1: String, out2: String, a: Expr, b: Expr },
    If { cond: Expr, then: Vec<Instr>, els: Vec<Instr> },
    QSend { peer: Pid, sess: String, label: String, data: Expr, comm: Expr },
    QRecv { var: String, sess: String, label: String, comm: Expr },
    RcxC { peer: Pid, sess: String, label: String, data: Expr, comm: Expr },
    RcxT { peer: Pid, sess: String, label: String, data: Expr, comm: Expr },
    Send { sess: String, peer: Pid, label: String, expr: Expr },
    Recv { sess: String, label: String, var: String },
}

impl Instr {
    /// Short mnemonic used in traces and reports.
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Stop => "stop",
            Instr::Open { .. } => "open",
            Instr::Close { .. } => "close",
            Instr::Init { .. } => "init",
            Instr::Free { .. } => "free",
            Instr::Assign { .. } => "assign",
            Instr::Gate { .. } => "gate",
            Instr::Measure { .. } => "measure",
            Instr::GenEnt { .. } => "genEnt",
            Instr::EntSwap { .. } => "entSwap",
            Instr::If { .. } => "if",
            Instr::QSend { .. } => "qsend",
            Instr::QRecv { .. } => "qrecv",
            Instr::RcxC { .. } => "rcxc",
            Instr::RcxT { .. } => "rcxt",
            Instr::Send { .. } => "send",
            Instr::Recv { .. } => "recv",
        }
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, Instr::QSend { .. } | Instr::QRecv { .. } | Instr::RcxC { .. } | Instr::RcxT { .. })
    }

    /// Expressions read by this instruction (not descending into branches).
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Instr::Free { arg } => vec![arg],
            Instr::Assign { expr, .. } => vec![expr],
            Instr::Gate { args, .. } | Instr::Measure { args, .. } => args.iter().collect(),
            Instr::EntSwap { a, b, .. } => vec![a, b],
            Instr::If { cond, .. } => vec![cond],
            Instr::QSend { data, comm, .. } | Instr::RcxC { data, comm, .. } | Instr::RcxT { data, comm, .. } => {
                vec![data, comm]
            }
            Instr::QRecv { comm, .. } => vec![comm],
            Instr::Send { expr, .. } => vec![expr],
            _ => vec![],
        }
    }

    /// Variables bound by this instruction.
    pub fn binds(&self) -> Vec<&str> {
        match self {
            Instr::Init { var }
            | Instr::Assign { var, .. }
            | Instr::Measure { var, .. }
            | Instr::GenEnt { var, .. }
            | Instr::QRecv { var, .. }
            | Instr::Recv { var, .. } => vec![var],
            Instr::EntSwap { out1, out2, .. } => vec![out1, out2],
            _ => vec![],
        }
    }

    /// Apply an environment to every expression of this instruction, including branches.
    pub fn substitute(&self, env: &HashMap<String, Value>) -> Instr {
        let s = |e: &Expr| e.substitute(env);
        match self {
            Instr::Free { arg } => Instr::Free { arg: s(arg) },
            Instr::Assign { var, expr } => Instr::Assign { var: var.clone(), expr: s(expr) },
            Instr::Gate { gate, args } => Instr::Gate { gate: *gate, args: args.iter().map(s).collect() },
            Instr::Measure { var, args } => Instr::Measure { var: var.clone(), args: args.iter().map(s).collect() },
            Instr::EntSwap { out1, out2, a, b } => Instr::EntSwap {
                out1: out1.clone(),
                out2: out2.clone(),
                a: s(a),
                b: s(b),
            },
            Instr::If { cond, then, els } => Instr::If {
                cond: s(cond),
                then: then.iter().map(|i| i.substitute(env)).collect(),
                els: els.iter().map(|i| i.substitute(env)).collect(),
            },
            Instr::QSend { peer, sess, label, data, comm } => Instr::QSend {
                peer: *peer,
                sess: sess.clone(),
                label: label.clone(),
                data: s(data),
                comm: s(comm),
            },
            Instr::QRecv { var, sess, label, comm } => Instr::QRecv {
                var: var.clone(),
                sess: sess.clone(),
                label: label.clone(),
                comm: s(comm),
            },
            Instr::RcxC { peer, sess, label, data, comm } => Instr::RcxC {
                peer: *peer,
                sess: sess.clone(),
                label: label.clone(),
                data: s(data),
                comm: s(comm),
            },
            Instr::RcxT { peer, sess, label, data, comm } => Instr::RcxT {
                peer: *peer,
                sess: sess.clone(),
                label: label.clone(),
                data: s(data),
                comm: s(comm),
            },
            Instr::Send { sess, peer, label, expr } => Instr::Send {
                sess: sess.clone(),
                peer: *peer,
                label: label.clone(),
                expr: s(expr),
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Process {
    pub loc: Pid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub body: Vec<Instr>,
}

impl Process {
    pub fn new(loc: Pid, body: Vec<Instr>) -> Self {
        Process { loc, name: None, body }
    }

    /// Label used in reports: the explicit name if any, else `p<loc>#<index>`.
    pub fn display_name(&self, index: usize) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("p{}#{}", self.loc, index),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub procs: Vec<Process>,
}

impl System {
    pub fn new(procs: Vec<Process>) -> Self {
        System { procs }
    }

    /// Total instruction count, descending into branches.
    pub fn instr_count(&self) -> usize {
        fn count(b: &[Instr]) -> usize {
            b.iter()
                .map(|i| match i {
                    Instr::If { then, els, .. } => 1 + count(then) + count(els),
                    _ => 1,
                })
                .sum()
        }
        self.procs.iter().map(|p| count(&p.body)).sum()
    }

    pub fn participants(&self) -> Vec<Pid> {
        let mut v: Vec<Pid> = self.procs.iter().map(|p| p.loc).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Qubit literals referenced anywhere in the process bodies, with the owning location.
    pub fn qubit_literals(&self) -> Vec<(Pid, QubitRef)> {
        fn walk_expr(e: &Expr, loc: Pid, out: &mut Vec<(Pid, QubitRef)>) {
            match e {
                Expr::Val(Value::Qubit(q)) => {
                    if !out.contains(&(loc, *q)) {
                        out.push((loc, *q))
                    }
                }
                Expr::Val(_) => {}
                Expr::And(a, b) | Expr::Xor(a, b) => {
                    walk_expr(a, loc, out);
                    walk_expr(b, loc, out);
                }
                Expr::Not(a) => walk_expr(a, loc, out),
            }
        }
        fn walk(b: &[Instr], loc: Pid, out: &mut Vec<(Pid, QubitRef)>) {
            for i in b {
                for e in i.exprs() {
                    walk_expr(e, loc, out);
                }
                if let Instr::If { then, els, .. } = i {
                    walk(then, loc, out);
                    walk(els, loc, out);
                }
            }
        }
        let mut out = Vec::new();
        for p in &self.procs {
            walk(&p.body, p.loc, &mut out);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

//! Proptest strategies for random programs.

use inquir::ast::{Expr, Gate, Instr, Process, QubitRef, System, Value};
use proptest::prelude::*;

const RESERVED: &[&str] = &[
    "process", "as", "stop", "close", "free", "if", "else", "qsend", "rcxc", "rcxt", "entSwap", "open", "init",
    "measure", "genEnt", "qrecv",
];

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,5}".prop_filter("reserved", |s| !RESERVED.contains(&s.as_str()))
}

fn pid() -> impl Strategy<Value = u32> {
    0u32..6
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<bool>().prop_map(Value::Bit),
        (0u32..40).prop_map(|u| Value::Qubit(QubitRef::data(u))),
        (0u32..40).prop_map(|u| Value::Qubit(QubitRef::comm(u))),
        ident().prop_map(Value::Var),
    ]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    value().prop_map(Expr::Val).prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Xor(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Not(Box::new(a))),
        ]
    })
}

fn angle() -> impl Strategy<Value = f64> {
    -10.0f64..10.0
}

fn gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        Just(Gate::X),
        Just(Gate::Y),
        Just(Gate::Z),
        Just(Gate::H),
        Just(Gate::S),
        Just(Gate::Sdg),
        Just(Gate::T),
        Just(Gate::Tdg),
        angle().prop_map(|theta| Gate::Rx { theta }),
        angle().prop_map(|theta| Gate::Ry { theta }),
        angle().prop_map(|theta| Gate::Rz { theta }),
        angle().prop_map(|lambda| Gate::U1 { lambda }),
        (angle(), angle()).prop_map(|(phi, lambda)| Gate::U2 { phi, lambda }),
        (angle(), angle(), angle()).prop_map(|(theta, phi, lambda)| Gate::U3 { theta, phi, lambda }),
        Just(Gate::CX),
    ]
}

fn simple_instr() -> impl Strategy<Value = Instr> {
    prop_oneof![
        Just(Instr::Stop),
        (ident(), prop::collection::vec(pid(), 1..4)).prop_map(|(sess, parts)| Instr::Open { sess, parts }),
        ident().prop_map(|sess| Instr::Close { sess }),
        ident().prop_map(|var| Instr::Init { var }),
        expr().prop_map(|arg| Instr::Free { arg }),
        (ident(), expr()).prop_map(|(var, expr)| Instr::Assign { var, expr }),
        (gate(), expr(), expr()).prop_map(|(gate, a, b)| {
            let args = if gate.arity() == 2 { vec![a, b] } else { vec![a] };
            Instr::Gate { gate, args }
        }),
        (ident(), prop::collection::vec(expr(), 1..3)).prop_map(|(var, args)| Instr::Measure { var, args }),
        (ident(), pid(), ident()).prop_map(|(var, peer, label)| Instr::GenEnt { var, peer, label }),
        (ident(), ident(), expr(), expr()).prop_map(|(out1, out2, a, b)| Instr::EntSwap { out1, out2, a, b }),
        (pid(), ident(), ident(), expr(), expr())
            .prop_map(|(peer, sess, label, data, comm)| Instr::QSend { peer, sess, label, data, comm }),
        (ident(), ident(), ident(), expr()).prop_map(|(var, sess, label, comm)| Instr::QRecv { var, sess, label, comm }),
        (pid(), ident(), ident(), expr(), expr())
            .prop_map(|(peer, sess, label, data, comm)| Instr::RcxC { peer, sess, label, data, comm }),
        (pid(), ident(), ident(), expr(), expr())
            .prop_map(|(peer, sess, label, data, comm)| Instr::RcxT { peer, sess, label, data, comm }),
        (ident(), pid(), ident(), expr()).prop_map(|(sess, peer, label, expr)| Instr::Send { sess, peer, label, expr }),
        (ident(), ident(), ident()).prop_map(|(sess, label, var)| Instr::Recv { sess, label, var }),
    ]
}

fn instr() -> impl Strategy<Value = Instr> {
    simple_instr().prop_recursive(2, 16, 4, |inner| {
        (expr(), prop::collection::vec(inner.clone(), 0..3), prop::collection::vec(inner, 0..3))
            .prop_map(|(cond, then, els)| Instr::If { cond, then, els })
    })
}

pub fn system() -> impl Strategy<Value = System> {
    prop::collection::vec((pid(), prop::option::of(ident()), prop::collection::vec(instr(), 0..6)), 1..4).prop_map(
        |ps| {
            let mut seen = std::collections::HashSet::new();
            let procs = ps
                .into_iter()
                .map(|(loc, name, body)| {
                    // names must be unique within a system
                    let name = name.filter(|n| seen.insert(n.clone()));
                    Process { loc, name, body }
                })
                .collect();
            System::new(procs)
        },
    )
}

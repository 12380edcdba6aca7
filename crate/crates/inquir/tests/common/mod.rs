#![allow(dead_code)]

pub mod gen;

use inquir::arch::ArchConfig;
use inquir::ast::{parse_program, QubitRef, System, Value};
use inquir::frontend::{lower, parse_qasm, partition, Circuit, CircuitOp, LowerOptions};
use inquir::qstate::{OutcomeOracle, StateVector};
use inquir::runtime::{run, RunConfig, RunOutcome, SchedulerPolicy};
use num_complex::Complex64 as C;
use rand::Rng;
use std::path::PathBuf;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{}: {}", rel, e))
}

pub fn program(rel: &str) -> System {
    parse_program(&fixture(rel)).unwrap_or_else(|e| panic!("{}: {}", rel, e))
}

pub fn arch(rel: &str) -> ArchConfig {
    ArchConfig::from_json(&fixture(rel)).unwrap()
}

pub fn bell() -> Vec<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![C::new(h, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(h, 0.0)]
}

/// All 2^n outcome scripts of length n, most significant bit first.
pub fn scripts(n: usize) -> Vec<Vec<bool>> {
    (0..1usize << n).map(|k| (0..n).map(|i| k >> (n - 1 - i) & 1 == 1).collect()).collect()
}

/// Final state of a unitary circuit on one register. Qubit i is bit i.
pub fn monolithic(circ: &Circuit) -> Vec<C> {
    let mut sv = StateVector::new();
    let order: Vec<QubitRef> = (0..circ.num_qubits as u32).map(QubitRef::data).collect();
    for &q in &order {
        sv.alloc(q).unwrap();
    }
    for op in &circ.ops {
        if let CircuitOp::Gate { gate, qubits } = op {
            let qs: Vec<QubitRef> = qubits.iter().map(|&i| order[i]).collect();
            sv.apply_gate(gate, &qs).unwrap();
        }
    }
    sv.amplitudes_in(&order).unwrap()
}

const ONE_QUBIT: &[&str] = &["h", "x", "y", "z", "s", "sdg", "t", "tdg"];

/// Random unitary QASM circuit on `n` qubits with `len` gates.
pub fn random_qasm(rng: &mut impl Rng, n: usize, len: usize) -> String {
    let mut s = format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{}];\n", n);
    for _ in 0..len {
        let k = rng.gen_range(0..10);
        if k < 4 && n > 1 {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            s.push_str(&format!("cx q[{}], q[{}];\n", a, b));
        } else if k < 6 {
            let q = rng.gen_range(0..n);
            let (t, p, l): (f64, f64, f64) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
            match rng.gen_range(0..4) {
                0 => s.push_str(&format!("rz({}) q[{}];\n", t, q)),
                1 => s.push_str(&format!("rx({}) q[{}];\n", t, q)),
                2 => s.push_str(&format!("ry({}) q[{}];\n", t, q)),
                _ => s.push_str(&format!("u3({},{},{}) q[{}];\n", t, p, l, q)),
            }
        } else {
            let g = ONE_QUBIT[rng.gen_range(0..ONE_QUBIT.len())];
            s.push_str(&format!("{} q[{}];\n", g, rng.gen_range(0..n)));
        }
    }
    s
}

/// Architecture for `n` qubits on `m` processors in a line.
pub fn line_for(n: usize, m: usize) -> ArchConfig {
    let q = n.div_ceil(m) as u32;
    ArchConfig::linear(m, q, 2).unwrap()
}

/// Data qubit holding circuit qubit `i` after a run of a lowered program.
pub fn data_ref(out: &RunOutcome, loc: u32, i: usize) -> QubitRef {
    let st = out.state();
    let p = st.procs.iter().find(|p| p.loc == loc).expect("process at location");
    match &p.env[&format!("q{}", i)] {
        Value::Qubit(q) => *q,
        v => panic!("q{} bound to {:?}", i, v),
    }
}

/// Compile, run on the statevector backend and return the fidelity with
/// the monolithic result.
pub fn distributed_fidelity(src: &str, arch: &ArchConfig, cfg: &RunConfig) -> f64 {
    let circ = parse_qasm(src).unwrap();
    let place = partition(&circ, arch).unwrap();
    let opts = LowerOptions { release_at_end: false, ..Default::default() };
    let (sys, _) = lower(&circ, arch, &place, &opts).unwrap();
    let out = run(&sys, arch, cfg).unwrap();
    assert_eq!(out.label(), "completed", "{}", inquir::ast::print_program(&sys));
    let order: Vec<QubitRef> = (0..circ.num_qubits).map(|i| data_ref(&out, place[i], i)).collect();
    let sv = out.state().backend.statevector().unwrap();
    sv.fidelity(&order, &monolithic(&circ)).unwrap()
}

pub fn sv_config(seed: u64, policy: SchedulerPolicy) -> RunConfig {
    RunConfig { oracle: OutcomeOracle::born(seed), policy, free_seed: seed, ..RunConfig::default() }
}

pub fn scripted(bits: &[bool]) -> RunConfig {
    RunConfig { oracle: OutcomeOracle::scripted(bits.to_vec()), ..RunConfig::default() }
}

/// Haar-random single-qubit state as U3 angles applied to |0>.
pub fn haar_angles(rng: &mut impl Rng) -> (f64, f64) {
    let z: f64 = rng.gen_range(-1.0..1.0);
    (z.acos(), rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn u3_state(theta: f64, phi: f64) -> Vec<C> {
    vec![C::new((theta / 2.0).cos(), 0.0), C::from_polar((theta / 2.0).sin(), phi)]
}

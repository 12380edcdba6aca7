//! Quantum state backends: a dense statevector and an allocation-only abstract state.

mod statevector;

pub use statevector::{StateVector, MAX_QUBITS};

use crate::ast::{Gate, QubitRef};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

pub type Mat2 = [[C; 2]; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("qubit {0} is already allocated")]
    AlreadyAllocated(QubitRef),
    #[error("qubit {0} is not allocated")]
    UnknownQubit(QubitRef),
    #[error("gate {gate} takes {expected} operand(s), got {got}")]
    ArityMismatch { gate: &'static str, expected: usize, got: usize },
    #[error("qubit {0} appears twice in one operation")]
    DuplicateOperand(QubitRef),
    #[error("measurement needs at least one qubit")]
    EmptyMeasurement,
    #[error("statevector limited to {0} qubits")]
    CapacityExceeded(usize),
    #[error("scripted outcome has zero probability")]
    ImpossibleOutcome,
    #[error("outcome script exhausted")]
    ScriptExhausted,
    #[error("qubit sets differ")]
    DimensionMismatch,
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// 2x2 unitary for a single-qubit gate. Panics on CX.
pub fn gate_matrix(g: &Gate) -> Mat2 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let h = FRAC_1_SQRT_2;
    let u3 = |t: f64, p: f64, l: f64| -> Mat2 {
        let (ct, st) = ((t / 2.0).cos(), (t / 2.0).sin());
        [
            [c(ct, 0.0), -C::from_polar(st, l)],
            [C::from_polar(st, p), C::from_polar(ct, p + l)],
        ]
    };
    match *g {
        Gate::X => [[z, o], [o, z]],
        Gate::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        Gate::Z => [[o, z], [z, -o]],
        Gate::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Gate::S => [[o, z], [z, c(0.0, 1.0)]],
        Gate::Sdg => [[o, z], [z, c(0.0, -1.0)]],
        Gate::T => [[o, z], [z, c(h, h)]],
        Gate::Tdg => [[o, z], [z, c(h, -h)]],
        Gate::Rx { theta } => {
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [[c(ct, 0.0), c(0.0, -st)], [c(0.0, -st), c(ct, 0.0)]]
        }
        Gate::Ry { theta } => {
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [[c(ct, 0.0), c(-st, 0.0)], [c(st, 0.0), c(ct, 0.0)]]
        }
        Gate::Rz { theta } => [[C::from_polar(1.0, -theta / 2.0), z], [z, C::from_polar(1.0, theta / 2.0)]],
        Gate::U1 { lambda } => [[o, z], [z, C::from_polar(1.0, lambda)]],
        Gate::U2 { phi, lambda } => u3(std::f64::consts::FRAC_PI_2, phi, lambda),
        Gate::U3 { theta, phi, lambda } => u3(theta, phi, lambda),
        Gate::CX => panic!("CX has no 2x2 matrix"),
    }
}

/// Source of measurement outcomes.
#[derive(Clone, Debug)]
pub enum OutcomeOracle {
    /// Sample from the Born rule (fair coin on the abstract backend).
    BornRule { seed: u64, rng: ChaCha8Rng },
    /// Replay a fixed list of outcomes in measurement order.
    Scripted { bits: Vec<bool>, pos: usize },
}

impl OutcomeOracle {
    pub fn born(seed: u64) -> Self {
        OutcomeOracle::BornRule { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn scripted(bits: impl Into<Vec<bool>>) -> Self {
        OutcomeOracle::Scripted { bits: bits.into(), pos: 0 }
    }

    /// Outcome for a measurement whose odd-parity probability is `p_one`.
    /// `None` means the backend cannot compute probabilities.
    pub fn draw(&mut self, p_one: Option<f64>) -> Result<bool, QStateError> {
        match self {
            OutcomeOracle::BornRule { rng, .. } => {
                let p = p_one.unwrap_or(0.5);
                Ok(rng.gen::<f64>() < p)
            }
            OutcomeOracle::Scripted { bits, pos } => {
                let b = *bits.get(*pos).ok_or(QStateError::ScriptExhausted)?;
                *pos += 1;
                Ok(b)
            }
        }
    }

    pub fn consumed(&self) -> usize {
        match self {
            OutcomeOracle::BornRule { .. } => 0,
            OutcomeOracle::Scripted { pos, .. } => *pos,
        }
    }
}

/// Which backend realizes the quantum part of the runtime state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    StateVector,
    Abstract,
}

/// Allocation-only state: tracks which qubits exist.
#[derive(Clone, Debug, Default)]
pub struct AbstractState {
    live: BTreeSet<QubitRef>,
}

impl AbstractState {
    pub fn qubits(&self) -> impl Iterator<Item = &QubitRef> {
        self.live.iter()
    }
}

/// Result of releasing a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Release {
    Clean,
    /// The qubit was entangled; it was measured in Z with this outcome before removal.
    MeasuredEntangled(bool),
}

#[derive(Clone, Debug)]
pub enum Backend {
    StateVector(StateVector),
    Abstract(AbstractState),
}

impl Backend {
    pub fn new(kind: BackendKind) -> Self {
        match kind {
            BackendKind::StateVector => Backend::StateVector(StateVector::new()),
            BackendKind::Abstract => Backend::Abstract(AbstractState::default()),
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::StateVector(_) => BackendKind::StateVector,
            Backend::Abstract(_) => BackendKind::Abstract,
        }
    }

    pub fn statevector(&self) -> Option<&StateVector> {
        match self {
            Backend::StateVector(s) => Some(s),
            Backend::Abstract(_) => None,
        }
    }

    pub fn contains(&self, q: QubitRef) -> bool {
        match self {
            Backend::StateVector(s) => s.contains(q),
            Backend::Abstract(a) => a.live.contains(&q),
        }
    }

    pub fn alloc(&mut self, q: QubitRef) -> Result<(), QStateError> {
        match self {
            Backend::StateVector(s) => s.alloc(q),
            Backend::Abstract(a) => {
                if a.live.insert(q) {
                    Ok(())
                } else {
                    Err(QStateError::AlreadyAllocated(q))
                }
            }
        }
    }

    pub fn make_epr(&mut self, qa: QubitRef, qb: QubitRef) -> Result<(), QStateError> {
        match self {
            Backend::StateVector(s) => s.make_epr(qa, qb),
            Backend::Abstract(a) => {
                if qa == qb || a.live.contains(&qa) || a.live.contains(&qb) {
                    let dup = if a.live.contains(&qa) { qa } else { qb };
                    return Err(QStateError::AlreadyAllocated(dup));
                }
                a.live.insert(qa);
                a.live.insert(qb);
                Ok(())
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate, ops: &[QubitRef]) -> Result<(), QStateError> {
        match self {
            Backend::StateVector(s) => s.apply_gate(g, ops),
            Backend::Abstract(a) => {
                if ops.len() != g.arity() {
                    return Err(QStateError::ArityMismatch { gate: g.name(), expected: g.arity(), got: ops.len() });
                }
                for (i, q) in ops.iter().enumerate() {
                    if !a.live.contains(q) {
                        return Err(QStateError::UnknownQubit(*q));
                    }
                    if ops[..i].contains(q) {
                        return Err(QStateError::DuplicateOperand(*q));
                    }
                }
                Ok(())
            }
        }
    }

    /// Parity measurement with projector (I + (-1)^v Z..Z)/2.
    pub fn measure_parity(&mut self, qs: &[QubitRef], oracle: &mut OutcomeOracle) -> Result<bool, QStateError> {
        match self {
            Backend::StateVector(s) => {
                let p1 = s.parity_prob_one(qs)?;
                let v = oracle.draw(Some(p1))?;
                s.project_parity(qs, v)?;
                Ok(v)
            }
            Backend::Abstract(a) => {
                if qs.is_empty() {
                    return Err(QStateError::EmptyMeasurement);
                }
                for q in qs {
                    if !a.live.contains(q) {
                        return Err(QStateError::UnknownQubit(*q));
                    }
                }
                oracle.draw(None)
            }
        }
    }

    /// Partial trace of one qubit. Entangled qubits are measured in Z first,
    /// with the outcome sampled from `rng` so outcome scripts stay aligned.
    pub fn trace_out(&mut self, q: QubitRef, rng: &mut ChaCha8Rng) -> Result<Release, QStateError> {
        match self {
            Backend::StateVector(s) => {
                if s.try_factor_out(q)? {
                    return Ok(Release::Clean);
                }
                let p1 = s.parity_prob_one(&[q])?;
                let v = rng.gen::<f64>() < p1;
                s.measure_and_remove(q, v)?;
                Ok(Release::MeasuredEntangled(v))
            }
            Backend::Abstract(a) => {
                if a.live.remove(&q) {
                    Ok(Release::Clean)
                } else {
                    Err(QStateError::UnknownQubit(q))
                }
            }
        }
    }

    pub fn live_count(&self) -> usize {
        match self {
            Backend::StateVector(s) => s.qubits().len(),
            Backend::Abstract(a) => a.live.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut r = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        r
    }

    fn dagger(a: &Mat2) -> Mat2 {
        [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
    }

    fn all_gates() -> Vec<Gate> {
        vec![
            Gate::X,
            Gate::Y,
            Gate::Z,
            Gate::H,
            Gate::S,
            Gate::Sdg,
            Gate::T,
            Gate::Tdg,
            Gate::Rx { theta: 0.7 },
            Gate::Ry { theta: -1.3 },
            Gate::Rz { theta: 2.1 },
            Gate::U1 { lambda: 0.4 },
            Gate::U2 { phi: 0.3, lambda: -0.9 },
            Gate::U3 { theta: 1.1, phi: 0.2, lambda: 2.5 },
        ]
    }

    #[test]
    fn gates_are_unitary() {
        for g in all_gates() {
            let m = gate_matrix(&g);
            let p = mul(&m, &dagger(&m));
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i][j] - C::new(want, 0.0)).norm() < 1e-12, "{:?}", g);
                }
            }
        }
    }

    #[test]
    fn t_to_the_eighth_is_identity() {
        let t = gate_matrix(&Gate::T);
        let mut acc = gate_matrix(&Gate::Z);
        acc = mul(&acc, &acc);
        for _ in 0..8 {
            acc = mul(&acc, &t);
        }
        assert!((acc[0][0] - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!((acc[1][1] - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!(acc[0][1].norm() < 1e-12 && acc[1][0].norm() < 1e-12);
    }

    #[test]
    fn sdg_and_tdg_invert() {
        for (a, b) in [(Gate::S, Gate::Sdg), (Gate::T, Gate::Tdg)] {
            let p = mul(&gate_matrix(&a), &gate_matrix(&b));
            assert!((p[1][1] - C::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn scripted_runs_out() {
        let mut o = OutcomeOracle::scripted(vec![true]);
        assert_eq!(o.draw(Some(0.5)), Ok(true));
        assert_eq!(o.draw(Some(0.5)), Err(QStateError::ScriptExhausted));
    }

    #[test]
    fn abstract_backend_tracks_allocation() {
        let mut b = Backend::new(BackendKind::Abstract);
        let q = QubitRef::data(0);
        b.alloc(q).unwrap();
        assert_eq!(b.alloc(q), Err(QStateError::AlreadyAllocated(q)));
        let mut o = OutcomeOracle::scripted(vec![true]);
        assert!(b.measure_parity(&[q], &mut o).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(b.trace_out(q, &mut rng), Ok(Release::Clean));
        assert_eq!(b.live_count(), 0);
    }

    #[test]
    fn sv_zero_measures_zero() {
        let mut b = Backend::new(BackendKind::StateVector);
        let q = QubitRef::data(0);
        b.alloc(q).unwrap();
        let mut o = OutcomeOracle::born(3);
        for _ in 0..10 {
            assert!(!b.measure_parity(&[q], &mut o).unwrap());
        }
    }
}

use super::{gate_matrix, Mat2, QStateError};
use crate::ast::{Gate, QubitRef};
use num_complex::Complex64 as C;
use serde::Serialize;

/// Most qubits a dense state may hold at once.
pub const MAX_QUBITS: usize = 20;

/// Dense pure state. Register position `k` is bit `k` of the amplitude index.
#[derive(Clone, Debug)]
pub struct StateVector {
    regs: Vec<QubitRef>,
    amps: Vec<C>,
}

impl Default for StateVector {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Serialize)]
struct Dump {
    qubits: Vec<String>,
    amplitudes: Vec<[f64; 2]>,
}

impl StateVector {
    pub fn new() -> Self {
        StateVector { regs: Vec::new(), amps: vec![C::new(1.0, 0.0)] }
    }

    pub fn qubits(&self) -> &[QubitRef] {
        &self.regs
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn contains(&self, q: QubitRef) -> bool {
        self.regs.contains(&q)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn pos(&self, q: QubitRef) -> Result<usize, QStateError> {
        self.regs.iter().position(|r| *r == q).ok_or(QStateError::UnknownQubit(q))
    }

    fn grow(&mut self, q: QubitRef) -> Result<(), QStateError> {
        if self.regs.contains(&q) {
            return Err(QStateError::AlreadyAllocated(q));
        }
        if self.regs.len() >= MAX_QUBITS {
            return Err(QStateError::CapacityExceeded(MAX_QUBITS));
        }
        self.regs.push(q);
        let n = self.amps.len();
        self.amps.resize(2 * n, C::new(0.0, 0.0));
        Ok(())
    }

    pub fn alloc(&mut self, q: QubitRef) -> Result<(), QStateError> {
        self.grow(q)
    }

    pub fn make_epr(&mut self, a: QubitRef, b: QubitRef) -> Result<(), QStateError> {
        if a == b || self.regs.contains(&b) {
            return Err(QStateError::AlreadyAllocated(b));
        }
        self.grow(a)?;
        if let Err(e) = self.grow(b) {
            self.remove_zero(a);
            return Err(e);
        }
        let pa = self.regs.len() - 2;
        self.apply1(pa, &gate_matrix(&Gate::H));
        self.cx(pa, pa + 1);
        Ok(())
    }

    // drop a freshly grown |0> register (error path only)
    fn remove_zero(&mut self, q: QubitRef) {
        if let Ok(p) = self.pos(q) {
            self.project_out(p, 0);
        }
    }

    fn apply1(&mut self, k: usize, m: &Mat2) {
        let bit = 1usize << k;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn cx(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate, ops: &[QubitRef]) -> Result<(), QStateError> {
        if ops.len() != g.arity() {
            return Err(QStateError::ArityMismatch { gate: g.name(), expected: g.arity(), got: ops.len() });
        }
        let pos: Vec<usize> = ops.iter().map(|q| self.pos(*q)).collect::<Result<_, _>>()?;
        match g {
            Gate::CX => {
                if pos[0] == pos[1] {
                    return Err(QStateError::DuplicateOperand(ops[0]));
                }
                self.cx(pos[0], pos[1]);
            }
            _ => self.apply1(pos[0], &gate_matrix(g)),
        }
        Ok(())
    }

    /// Probability that the parity of `qs` is odd.
    pub fn parity_prob_one(&self, qs: &[QubitRef]) -> Result<f64, QStateError> {
        let mask = self.mask(qs)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask).count_ones() % 2 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn mask(&self, qs: &[QubitRef]) -> Result<usize, QStateError> {
        if qs.is_empty() {
            return Err(QStateError::EmptyMeasurement);
        }
        let mut mask = 0usize;
        for q in qs {
            let b = 1usize << self.pos(*q)?;
            if mask & b != 0 {
                return Err(QStateError::DuplicateOperand(*q));
            }
            mask |= b;
        }
        Ok(mask)
    }

    /// Project onto parity `v` of `qs` and renormalize. Returns the outcome probability.
    pub fn project_parity(&mut self, qs: &[QubitRef], v: bool) -> Result<f64, QStateError> {
        let mask = self.mask(qs)?;
        let want = v as u32;
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & mask).count_ones() % 2 != want {
                *a = C::new(0.0, 0.0);
            } else {
                p += a.norm_sqr();
            }
        }
        if p < 1e-14 {
            return Err(QStateError::ImpossibleOutcome);
        }
        let s = 1.0 / p.sqrt();
        for a in self.amps.iter_mut() {
            *a *= s;
        }
        Ok(p)
    }

    /// Reduced 2x2 density matrix of one qubit.
    pub fn reduced(&self, q: QubitRef) -> Result<Mat2, QStateError> {
        let bit = 1usize << self.pos(q)?;
        let mut r = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                r[0][0] += a0 * a0.conj();
                r[0][1] += a0 * a1.conj();
                r[1][0] += a1 * a0.conj();
                r[1][1] += a1 * a1.conj();
            }
        }
        Ok(r)
    }

    /// True when the qubit is (numerically) in a product state with the rest.
    pub fn is_separable(&self, q: QubitRef) -> Result<bool, QStateError> {
        let r = self.reduced(q)?;
        let purity = (r[0][0] * r[0][0] + r[0][1] * r[1][0] + r[1][0] * r[0][1] + r[1][1] * r[1][1]).re;
        Ok(purity > 1.0 - 1e-9)
    }

    // remove register k after it has been forced to basis value b
    fn project_out(&mut self, k: usize, b: usize) {
        let bit = 1usize << k;
        let low = bit - 1;
        let half = self.amps.len() / 2;
        let mut next = Vec::with_capacity(half);
        for j in 0..half {
            let i = (j & low) | ((j & !low) << 1) | (b * bit);
            next.push(self.amps[i]);
        }
        self.amps = next;
        self.regs.remove(k);
    }

    /// Remove a qubit that is in a product state, factoring it out exactly.
    /// Returns `false` (state untouched) if the qubit is entangled.
    pub fn try_factor_out(&mut self, q: QubitRef) -> Result<bool, QStateError> {
        if !self.is_separable(q)? {
            return Ok(false);
        }
        let k = self.pos(q)?;
        let bit = 1usize << k;
        // local state |phi> = the column of the largest amplitude pair
        let r = self.reduced(q)?;
        let (p0, p1) = (r[0][0].re, r[1][1].re);
        let phi = if p0 >= p1 {
            let n = p0.sqrt();
            [C::new(n, 0.0), r[1][0] / n]
        } else {
            let n = p1.sqrt();
            [r[0][1] / n, C::new(n, 0.0)]
        };
        let low = bit - 1;
        let half = self.amps.len() / 2;
        let mut next = Vec::with_capacity(half);
        for j in 0..half {
            let i0 = (j & low) | ((j & !low) << 1);
            next.push(phi[0].conj() * self.amps[i0] + phi[1].conj() * self.amps[i0 | bit]);
        }
        let n = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in next.iter_mut() {
            *a /= n;
        }
        self.amps = next;
        self.regs.remove(k);
        Ok(true)
    }

    /// Measure in Z with a caller-supplied outcome then drop the register.
    pub fn measure_and_remove(&mut self, q: QubitRef, outcome: bool) -> Result<(), QStateError> {
        self.project_parity(&[q], outcome)?;
        let k = self.pos(q)?;
        self.project_out(k, outcome as usize);
        Ok(())
    }

    /// |<ref|state>|^2 where `reference` is laid out over `order` (bit k of the index = order[k]).
    pub fn fidelity(&self, order: &[QubitRef], reference: &[C]) -> Result<f64, QStateError> {
        if order.len() != self.regs.len() || reference.len() != self.amps.len() {
            return Err(QStateError::DimensionMismatch);
        }
        let perm: Vec<usize> = order.iter().map(|q| self.pos(*q)).collect::<Result<_, _>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(QStateError::DimensionMismatch);
            }
            seen[p] = true;
        }
        let mut ov = C::new(0.0, 0.0);
        for (j, r) in reference.iter().enumerate() {
            let mut i = 0usize;
            for (k, &p) in perm.iter().enumerate() {
                if j >> k & 1 == 1 {
                    i |= 1 << p;
                }
            }
            ov += r.conj() * self.amps[i];
        }
        Ok(ov.norm_sqr())
    }

    /// Amplitudes re-laid over `order`.
    pub fn amplitudes_in(&self, order: &[QubitRef]) -> Result<Vec<C>, QStateError> {
        if order.len() != self.regs.len() {
            return Err(QStateError::DimensionMismatch);
        }
        let perm: Vec<usize> = order.iter().map(|q| self.pos(*q)).collect::<Result<_, _>>()?;
        let mut out = vec![C::new(0.0, 0.0); self.amps.len()];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut i = 0usize;
            for (k, &p) in perm.iter().enumerate() {
                if j >> k & 1 == 1 {
                    i |= 1 << p;
                }
            }
            *slot = self.amps[i];
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let d = Dump {
            qubits: self.regs.iter().map(|q| q.to_string()).collect(),
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string(&d).expect("dump serializes")
    }
}

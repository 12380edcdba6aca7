use crate::ast::Gate;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, name: String },
    #[error("line {line}: unknown register `{name}`")]
    UnknownRegister { line: usize, name: String },
    #[error("line {line}: index {index} out of range for `{name}`")]
    OutOfRange { line: usize, name: String, index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitOp {
    Gate { gate: Gate, qubits: Vec<usize> },
    Measure { qubit: usize, clbit: usize },
    Barrier { qubits: Vec<usize> },
}

/// A flat monolithic circuit over `num_qubits` qubits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, CircuitOp::Gate { qubits, .. } if qubits.len() == 2)).count()
    }
}

struct Regs {
    q: BTreeMap<String, (usize, usize)>,
    c: BTreeMap<String, (usize, usize)>,
    nq: usize,
    nc: usize,
}

// `name` or `name[idx]`; a bare register expands to all of its elements
fn operand(s: &str, regs: &BTreeMap<String, (usize, usize)>, line: usize) -> Result<Vec<usize>, QasmError> {
    let s = s.trim();
    if let Some(open) = s.find('[') {
        let name = s[..open].trim();
        let idx: usize = s[open + 1..]
            .trim_end_matches(']')
            .trim()
            .parse()
            .map_err(|_| QasmError::Syntax { line, msg: format!("bad operand `{}`", s) })?;
        let (off, size) =
            *regs.get(name).ok_or_else(|| QasmError::UnknownRegister { line, name: name.to_string() })?;
        if idx >= size {
            return Err(QasmError::OutOfRange { line, name: name.to_string(), index: idx });
        }
        Ok(vec![off + idx])
    } else {
        let (off, size) = *regs.get(s).ok_or_else(|| QasmError::UnknownRegister { line, name: s.to_string() })?;
        Ok((off..off + size).collect())
    }
}

// tiny recursive-descent evaluator for gate parameters
struct ParamParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> ParamParser<'a> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn expr(&mut self) -> Option<f64> {
        let mut v = self.term()?;
        loop {
            self.ws();
            match self.s.get(self.i) {
                Some(b'+') => {
                    self.i += 1;
                    v += self.term()?
                }
                Some(b'-') => {
                    self.i += 1;
                    v -= self.term()?
                }
                _ => return Some(v),
            }
        }
    }
    fn term(&mut self) -> Option<f64> {
        let mut v = self.unary()?;
        loop {
            self.ws();
            match self.s.get(self.i) {
                Some(b'*') => {
                    self.i += 1;
                    v *= self.unary()?
                }
                Some(b'/') => {
                    self.i += 1;
                    v /= self.unary()?
                }
                _ => return Some(v),
            }
        }
    }
    fn unary(&mut self) -> Option<f64> {
        self.ws();
        match self.s.get(self.i) {
            Some(b'-') => {
                self.i += 1;
                Some(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                self.ws();
                if self.s.get(self.i) != Some(&b')') {
                    return None;
                }
                self.i += 1;
                Some(v)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let st = self.i;
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                match &self.s[st..self.i] {
                    b"pi" => Some(std::f64::consts::PI),
                    _ => None,
                }
            }
            Some(_) => {
                let st = self.i;
                while self.i < self.s.len()
                    && (self.s[self.i].is_ascii_digit()
                        || self.s[self.i] == b'.'
                        || self.s[self.i] == b'e'
                        || self.s[self.i] == b'E'
                        || ((self.s[self.i] == b'-' || self.s[self.i] == b'+')
                            && self.i > st
                            && (self.s[self.i - 1] == b'e' || self.s[self.i - 1] == b'E')))
                {
                    self.i += 1;
                }
                std::str::from_utf8(&self.s[st..self.i]).ok()?.parse().ok()
            }
            None => None,
        }
    }
}

pub fn eval_param(s: &str) -> Option<f64> {
    let mut p = ParamParser { s: s.as_bytes(), i: 0 };
    let v = p.expr()?;
    p.ws();
    (p.i == p.s.len()).then_some(v)
}

fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn push_gate(ops: &mut Vec<CircuitOp>, g: Gate, qs: &[usize]) {
    ops.push(CircuitOp::Gate { gate: g, qubits: qs.to_vec() });
}

fn emit(ops: &mut Vec<CircuitOp>, name: &str, params: &[f64], qs: &[usize], line: usize) -> Result<(), QasmError> {
    let cx = |ops: &mut Vec<CircuitOp>, a, b| push_gate(ops, Gate::CX, &[a, b]);
    match (name, qs.len()) {
        ("id", 1) => {}
        ("ccx", 3) => {
            let (a, b, c) = (qs[0], qs[1], qs[2]);
            push_gate(ops, Gate::H, &[c]);
            cx(ops, b, c);
            push_gate(ops, Gate::Tdg, &[c]);
            cx(ops, a, c);
            push_gate(ops, Gate::T, &[c]);
            cx(ops, b, c);
            push_gate(ops, Gate::Tdg, &[c]);
            cx(ops, a, c);
            push_gate(ops, Gate::T, &[b]);
            push_gate(ops, Gate::T, &[c]);
            push_gate(ops, Gate::H, &[c]);
            cx(ops, a, b);
            push_gate(ops, Gate::T, &[a]);
            push_gate(ops, Gate::Tdg, &[b]);
            cx(ops, a, b);
        }
        ("swap", 2) => {
            cx(ops, qs[0], qs[1]);
            cx(ops, qs[1], qs[0]);
            cx(ops, qs[0], qs[1]);
        }
        ("cz", 2) => {
            push_gate(ops, Gate::H, &[qs[1]]);
            cx(ops, qs[0], qs[1]);
            push_gate(ops, Gate::H, &[qs[1]]);
        }
        _ => {
            let key = match name {
                "x" => "X",
                "y" => "Y",
                "z" => "Z",
                "h" => "H",
                "s" => "S",
                "sdg" => "Sdg",
                "t" => "T",
                "tdg" => "Tdg",
                "rx" => "RX",
                "ry" => "RY",
                "rz" => "RZ",
                "u1" | "p" => "U1",
                "u2" => "U2",
                "u3" | "u" | "U" => "U3",
                "cx" | "CX" => "CX",
                other => other,
            };
            let g = Gate::from_name(key, params).ok_or_else(|| QasmError::UnsupportedGate { line, name: name.to_string() })?;
            if g.arity() != qs.len() {
                return Err(QasmError::Syntax { line, msg: format!("`{}` expects {} operands", name, g.arity()) });
            }
            push_gate(ops, g, qs);
        }
    }
    Ok(())
}

/// Parse an OpenQASM 2.0 program into a flat circuit.
pub fn parse_qasm(src: &str) -> Result<Circuit, QasmError> {
    let mut regs = Regs { q: BTreeMap::new(), c: BTreeMap::new(), nq: 0, nc: 0 };
    let mut ops = Vec::new();
    // statements end at ';', line numbers are those of the statement start
    let mut stmts: Vec<(usize, String)> = Vec::new();
    let mut cur = String::new();
    let mut cur_line = 0;
    for (ln, raw) in src.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        for ch in line.chars() {
            if cur.trim().is_empty() {
                cur_line = ln + 1;
            }
            if ch == ';' {
                stmts.push((cur_line, cur.trim().to_string()));
                cur.clear();
            } else {
                cur.push(ch);
            }
        }
        cur.push(' ');
    }
    if !cur.trim().is_empty() {
        return Err(QasmError::Syntax { line: cur_line, msg: "missing `;`".into() });
    }
    for (line, st) in stmts {
        if st.is_empty() || st.starts_with("OPENQASM") || st.starts_with("include") {
            continue;
        }
        let head_end = st.find(|c: char| c.is_whitespace() || c == '(').unwrap_or(st.len());
        let head = &st[..head_end];
        let rest = st[head_end..].trim();
        match head {
            "qreg" | "creg" => {
                let open = rest.find('[').ok_or_else(|| QasmError::Syntax { line, msg: "expected `[`".into() })?;
                let name = rest[..open].trim().to_string();
                let size: usize = rest[open + 1..]
                    .trim_end_matches(']')
                    .trim()
                    .parse()
                    .map_err(|_| QasmError::Syntax { line, msg: "bad register size".into() })?;
                if head == "qreg" {
                    regs.q.insert(name, (regs.nq, size));
                    regs.nq += size;
                } else {
                    regs.c.insert(name, (regs.nc, size));
                    regs.nc += size;
                }
            }
            "measure" => {
                let mut parts = rest.split("->");
                let qs = operand(parts.next().unwrap_or(""), &regs.q, line)?;
                let cs = operand(
                    parts.next().ok_or_else(|| QasmError::Syntax { line, msg: "expected `->`".into() })?,
                    &regs.c,
                    line,
                )?;
                if qs.len() != cs.len() {
                    return Err(QasmError::Syntax { line, msg: "register size mismatch".into() });
                }
                for (q, c) in qs.into_iter().zip(cs) {
                    ops.push(CircuitOp::Measure { qubit: q, clbit: c });
                }
            }
            "barrier" => {
                let mut qs = Vec::new();
                for a in split_top(rest) {
                    qs.extend(operand(a, &regs.q, line)?);
                }
                ops.push(CircuitOp::Barrier { qubits: qs });
            }
            "gate" | "opaque" | "if" | "reset" => {
                return Err(QasmError::UnsupportedGate { line, name: head.to_string() });
            }
            name => {
                let (params, args) = if rest.starts_with('(') {
                    let mut depth = 0;
                    let mut close = None;
                    for (i, c) in rest.char_indices() {
                        match c {
                            '(' => depth += 1,
                            ')' => {
                                depth -= 1;
                                if depth == 0 {
                                    close = Some(i);
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    let close = close.ok_or_else(|| QasmError::Syntax { line, msg: "unbalanced `(`".into() })?;
                    let ps = split_top(&rest[1..close])
                        .into_iter()
                        .map(|p| {
                            eval_param(p).ok_or_else(|| QasmError::Syntax { line, msg: format!("bad parameter `{}`", p) })
                        })
                        .collect::<Result<Vec<f64>, _>>()?;
                    (ps, rest[close + 1..].trim())
                } else {
                    (vec![], rest)
                };
                let operands: Vec<Vec<usize>> =
                    split_top(args).into_iter().map(|a| operand(a, &regs.q, line)).collect::<Result<_, _>>()?;
                let width = operands.iter().map(|o| o.len()).max().unwrap_or(0);
                if operands.iter().any(|o| o.len() != 1 && o.len() != width) {
                    return Err(QasmError::Syntax { line, msg: "register size mismatch".into() });
                }
                for k in 0..width {
                    let qs: Vec<usize> = operands.iter().map(|o| if o.len() == 1 { o[0] } else { o[k] }).collect();
                    emit(&mut ops, name, &params, &qs, line)?;
                }
            }
        }
    }
    Ok(Circuit { num_qubits: regs.nq, num_clbits: regs.nc, ops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_with_pi() {
        assert!((eval_param("pi/2").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((eval_param("-3*pi/4 + 1e-3").unwrap() - (-3.0 * std::f64::consts::PI / 4.0 + 1e-3)).abs() < 1e-15);
        assert_eq!(eval_param("2.5e+1"), Some(25.0));
        assert_eq!(eval_param("tau"), None);
    }

    #[test]
    fn ccx_expansion_counts() {
        let c = parse_qasm("OPENQASM 2.0;\nqreg q[3];\nccx q[0],q[1],q[2];").unwrap();
        let cx = c.ops.iter().filter(|o| matches!(o, CircuitOp::Gate { gate: Gate::CX, .. })).count();
        let t = c
            .ops
            .iter()
            .filter(|o| matches!(o, CircuitOp::Gate { gate: Gate::T | Gate::Tdg, .. }))
            .count();
        assert_eq!((cx, t), (6, 7));
    }

    #[test]
    fn registers_flatten() {
        let c = parse_qasm("qreg a[2]; qreg b[3]; creg m[2]; cx a[1], b[2]; h b; measure a -> m;").unwrap();
        assert_eq!(c.num_qubits, 5);
        assert_eq!(c.ops[0], CircuitOp::Gate { gate: Gate::CX, qubits: vec![1, 4] });
        assert_eq!(c.ops.len(), 1 + 3 + 2);
    }

    #[test]
    fn rz_parameter() {
        let c = parse_qasm("qreg q[1]; rz(-pi/8) q[0];").unwrap();
        match &c.ops[0] {
            CircuitOp::Gate { gate: Gate::Rz { theta }, .. } => assert!((theta + std::f64::consts::PI / 8.0).abs() < 1e-15),
            o => panic!("{:?}", o),
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_qasm("qreg q[1]; foo q[0];"), Err(QasmError::UnsupportedGate { line: 1, .. })));
        assert!(matches!(parse_qasm("qreg q[1];\nh q[3];"), Err(QasmError::OutOfRange { line: 2, .. })));
        assert!(matches!(parse_qasm("qreg q[1];\nh r[0];"), Err(QasmError::UnknownRegister { .. })));
    }
}

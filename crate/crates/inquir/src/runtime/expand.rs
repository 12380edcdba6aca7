use crate::ast::{Expr, Gate, Instr, Process, System};
use std::collections::HashSet;

struct Fresh {
    used: HashSet<String>,
    next: usize,
}

impl Fresh {
    fn name(&mut self) -> String {
        loop {
            let n = format!("_t{}", self.next);
            self.next += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }
}

fn collect_names(body: &[Instr], out: &mut HashSet<String>) {
    for i in body {
        out.extend(i.binds().into_iter().map(String::from));
        for e in i.exprs() {
            out.extend(e.vars().into_iter().map(String::from));
        }
        if let Instr::If { then, els, .. } = i {
            collect_names(then, out);
            collect_names(els, out);
        }
    }
}

fn gate(g: Gate, args: &[&Expr]) -> Instr {
    Instr::Gate { gate: g, args: args.iter().map(|e| (*e).clone()).collect() }
}

fn when(v: &str, body: Instr) -> Instr {
    Instr::If { cond: Expr::var(v), then: vec![body], els: vec![] }
}

fn expand_block(body: &[Instr], f: &mut Fresh) -> Vec<Instr> {
    let mut out = Vec::with_capacity(body.len());
    for i in body {
        match i {
            Instr::QSend { peer, sess, label, data, comm } => {
                let (y1, y2) = (f.name(), f.name());
                out.push(gate(Gate::CX, &[data, comm]));
                out.push(gate(Gate::H, &[data]));
                out.push(Instr::Measure { var: y1.clone(), args: vec![data.clone()] });
                out.push(Instr::Measure { var: y2.clone(), args: vec![comm.clone()] });
                for y in [y1, y2] {
                    out.push(Instr::Send { sess: sess.clone(), peer: *peer, label: label.clone(), expr: Expr::var(y) });
                }
                out.push(Instr::Free { arg: data.clone() });
                out.push(Instr::Free { arg: comm.clone() });
            }
            Instr::QRecv { var, sess, label, comm } => {
                let (y1, y2) = (f.name(), f.name());
                let x = Expr::var(var.as_str());
                out.push(Instr::Init { var: var.clone() });
                out.push(Instr::Recv { sess: sess.clone(), label: label.clone(), var: y1.clone() });
                out.push(Instr::Recv { sess: sess.clone(), label: label.clone(), var: y2.clone() });
                out.push(when(&y1, gate(Gate::Z, &[comm])));
                out.push(when(&y2, gate(Gate::X, &[comm])));
                out.push(gate(Gate::CX, &[&x, comm]));
                out.push(gate(Gate::CX, &[comm, &x]));
                out.push(gate(Gate::CX, &[&x, comm]));
                out.push(Instr::Free { arg: comm.clone() });
            }
            Instr::RcxC { peer, sess, label, data, comm } | Instr::RcxT { peer, sess, label, data, comm } => {
                let ctrl = matches!(i, Instr::RcxC { .. });
                let (y, z) = (f.name(), f.name());
                if ctrl {
                    out.push(gate(Gate::CX, &[data, comm]));
                } else {
                    out.push(gate(Gate::CX, &[comm, data]));
                    out.push(gate(Gate::H, &[comm]));
                }
                out.push(Instr::Measure { var: y.clone(), args: vec![comm.clone()] });
                out.push(Instr::Free { arg: comm.clone() });
                out.push(Instr::Send { sess: sess.clone(), peer: *peer, label: label.clone(), expr: Expr::var(y) });
                out.push(Instr::Recv { sess: sess.clone(), label: label.clone(), var: z.clone() });
                out.push(when(&z, gate(if ctrl { Gate::Z } else { Gate::X }, &[data])));
            }
            Instr::If { cond, then, els } => out.push(Instr::If {
                cond: cond.clone(),
                then: expand_block(then, f),
                els: expand_block(els, f),
            }),
            other => out.push(other.clone()),
        }
    }
    out
}

/// Replace qsend, qrecv, rcxc and rcxt by primitive sequences.
pub fn expand_derived(p: &Process) -> Process {
    let mut used = HashSet::new();
    collect_names(&p.body, &mut used);
    let mut f = Fresh { used, next: 0 };
    Process { loc: p.loc, name: p.name.clone(), body: expand_block(&p.body, &mut f) }
}

pub fn expand_system(sys: &System) -> System {
    System::new(sys.procs.iter().map(expand_derived).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_program;

    #[test]
    fn no_derived_left() {
        let src = "process 0 { _t0 = 1; if 1 { rcxc[1](s, l, @q0, c); } qsend[1](s, m, @q0, c); }";
        let sys = expand_system(&parse_program(src).unwrap());
        fn walk(b: &[Instr]) {
            for i in b {
                assert!(!i.is_derived());
                if let Instr::If { then, els, .. } = i {
                    walk(then);
                    walk(els);
                }
            }
        }
        walk(&sys.procs[0].body);
        let text = sys.to_string();
        assert!(!text.contains("_t0 = measure"));
    }

    #[test]
    fn rcx_frees_comm_before_messaging() {
        let sys = expand_system(&parse_program("process 0 { rcxt[1](s, l, d, c); }").unwrap());
        let ops: Vec<&str> = sys.procs[0].body.iter().map(|i| i.mnemonic()).collect();
        assert_eq!(ops, ["gate", "gate", "measure", "free", "send", "recv", "if"]);
    }
}

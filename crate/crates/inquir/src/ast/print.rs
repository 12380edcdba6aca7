use super::{Expr, Instr, System, Value};
use std::fmt::Write;

fn atom(v: &Value) -> String {
    match v {
        Value::Bit(b) => if *b { "1" } else { "0" }.to_string(),
        Value::Qubit(q) => q.to_string(),
        Value::Var(s) => s.clone(),
    }
}

fn operand(e: &Expr) -> String {
    match e {
        Expr::And(..) | Expr::Xor(..) => format!("({})", print_expr(e)),
        _ => print_expr(e),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Val(v) => atom(v),
        Expr::And(a, b) => format!("{} & {}", operand(a), operand(b)),
        Expr::Xor(a, b) => format!("{} ^ {}", operand(a), operand(b)),
        Expr::Not(a) => format!("!{}", operand(a)),
    }
}

fn list(es: &[Expr]) -> String {
    es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
}

fn block(out: &mut String, body: &[Instr], depth: usize) {
    for i in body {
        instr(out, i, depth);
    }
}

fn instr(out: &mut String, i: &Instr, depth: usize) {
    let pad = "    ".repeat(depth);
    match i {
        Instr::If { cond, then, els } => {
            let _ = writeln!(out, "{}if {} {{", pad, print_expr(cond));
            block(out, then, depth + 1);
            if els.is_empty() {
                let _ = writeln!(out, "{}}}", pad);
            } else {
                let _ = writeln!(out, "{}}} else {{", pad);
                block(out, els, depth + 1);
                let _ = writeln!(out, "{}}}", pad);
            }
        }
        other => {
            let _ = writeln!(out, "{}{}", pad, print_instr(other));
        }
    }
}

/// One-line rendering of a single instruction. Branch bodies are inlined.
pub fn print_instr(i: &Instr) -> String {
    match i {
        Instr::Stop => "stop;".into(),
        Instr::Open { sess, parts } => format!(
            "{} = open[{}];",
            sess,
            parts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        ),
        Instr::Close { sess } => format!("close({});", sess),
        Instr::Init { var } => format!("{} = init();", var),
        Instr::Free { arg } => format!("free {};", print_expr(arg)),
        Instr::Assign { var, expr } => format!("{} = {};", var, print_expr(expr)),
        Instr::Gate { gate, args } => {
            let params = gate.params();
            if params.is_empty() {
                format!("{}({});", gate.name(), list(args))
            } else {
                let ps: Vec<String> = params.iter().map(|p| format!("{:?}", p)).collect();
                format!("{}({})({});", gate.name(), ps.join(", "), list(args))
            }
        }
        Instr::Measure { var, args } => format!("{} = measure({});", var, list(args)),
        Instr::GenEnt { var, peer, label } => format!("{} = genEnt[{}]({});", var, peer, label),
        Instr::EntSwap { out1, out2, a, b } => {
            format!("({}, {}) = entSwap({}, {});", out1, out2, print_expr(a), print_expr(b))
        }
        Instr::If { cond, then, els } => {
            let t: Vec<String> = then.iter().map(print_instr).collect();
            let e: Vec<String> = els.iter().map(print_instr).collect();
            if els.is_empty() {
                format!("if {} {{ {} }}", print_expr(cond), t.join(" "))
            } else {
                format!("if {} {{ {} }} else {{ {} }}", print_expr(cond), t.join(" "), e.join(" "))
            }
        }
        Instr::QSend { peer, sess, label, data, comm } => {
            format!("qsend[{}]({}, {}, {}, {});", peer, sess, label, print_expr(data), print_expr(comm))
        }
        Instr::QRecv { var, sess, label, comm } => {
            format!("{} = qrecv({}, {}, {});", var, sess, label, print_expr(comm))
        }
        Instr::RcxC { peer, sess, label, data, comm } => {
            format!("rcxc[{}]({}, {}, {}, {});", peer, sess, label, print_expr(data), print_expr(comm))
        }
        Instr::RcxT { peer, sess, label, data, comm } => {
            format!("rcxt[{}]({}, {}, {}, {});", peer, sess, label, print_expr(data), print_expr(comm))
        }
        Instr::Send { sess, peer, label, expr } => format!("{}[{}]!({}: {});", sess, peer, label, print_expr(expr)),
        Instr::Recv { sess, label, var } => format!("{}?({}: {});", sess, label, var),
    }
}

/// Render a system in the concrete syntax accepted by `parse_program`.
pub fn print_program(sys: &System) -> String {
    let mut out = String::new();
    for (k, p) in sys.procs.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        match &p.name {
            Some(n) => {
                let _ = writeln!(out, "process {} as {} {{", p.loc, n);
            }
            None => {
                let _ = writeln!(out, "process {} {{", p.loc);
            }
        }
        block(&mut out, &p.body, 1);
        out.push_str("}\n");
    }
    out
}

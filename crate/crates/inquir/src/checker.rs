//! Static lints over InQuIR programs.

use crate::ast::{Expr, Instr, Pid, System, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub proc: usize,
    pub loc: Pid,
    /// Position of the instruction, e.g. `4` or `2.then.0`.
    pub at: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}[{}]: process {} (participant {}) at {}: {}", sev, self.code, self.proc, self.loc, self.at, self.message)
    }
}

pub fn has_errors(ds: &[Diagnostic]) -> bool {
    ds.iter().any(|d| d.severity == Severity::Error)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum St {
    Live,
    Dead,
    MaybeDead,
    /// bound on some paths only
    MaybeUnbound,
}

#[derive(Clone, Debug, Default)]
struct Env {
    /// qubit-typed names (variables and literals)
    q: BTreeMap<String, St>,
    /// names bound on every path so far
    bound: BTreeSet<String>,
    maybe: BTreeSet<String>,
    /// qubits this process allocated (leak candidates)
    owned: BTreeSet<String>,
}

struct Linear<'a> {
    proc: usize,
    loc: Pid,
    out: &'a mut Vec<Diagnostic>,
}

fn expr_names(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Val(Value::Var(v)) => out.push(v.clone()),
        Expr::Val(Value::Qubit(q)) => out.push(q.to_string()),
        Expr::Val(Value::Bit(_)) => {}
        Expr::And(a, b) | Expr::Xor(a, b) => {
            expr_names(a, out);
            expr_names(b, out);
        }
        Expr::Not(a) => expr_names(a, out),
    }
}

fn is_literal(n: &str) -> bool {
    n.starts_with('@')
}

impl<'a> Linear<'a> {
    fn diag(&mut self, code: &str, sev: Severity, at: &str, msg: String) {
        self.out.push(Diagnostic {
            code: code.into(),
            severity: sev,
            proc: self.proc,
            loc: self.loc,
            at: at.into(),
            message: msg,
        });
    }

    fn read(&mut self, env: &Env, e: &Expr, at: &str) {
        let mut ns = Vec::new();
        expr_names(e, &mut ns);
        for n in ns {
            if is_literal(&n) {
                if let Some(St::Dead) = env.q.get(&n) {
                    self.diag("USE_AFTER_FREE", Severity::Error, at, format!("{} used after it was freed", n));
                }
                continue;
            }
            if !env.bound.contains(&n) {
                if env.maybe.contains(&n) {
                    self.diag("UNBOUND", Severity::Warning, at, format!("`{}` may be unbound here", n));
                } else {
                    self.diag("UNBOUND", Severity::Error, at, format!("`{}` is not bound", n));
                }
                continue;
            }
            match env.q.get(&n) {
                Some(St::Dead) => {
                    self.diag("USE_AFTER_FREE", Severity::Error, at, format!("`{}` used after it was freed", n))
                }
                Some(St::MaybeDead) => {
                    self.diag("USE_AFTER_FREE", Severity::Warning, at, format!("`{}` may have been freed", n))
                }
                _ => {}
            }
        }
    }

    // release a qubit operand: free, or consumed by a derived operation
    fn release(&mut self, env: &mut Env, e: &Expr, at: &str, explicit: bool) {
        let mut ns = Vec::new();
        expr_names(e, &mut ns);
        let n = match ns.as_slice() {
            [n] => n.clone(),
            _ => return self.read(env, e, at),
        };
        match env.q.get(&n).copied() {
            Some(St::Dead) => {
                if explicit {
                    self.diag("DOUBLE_FREE", Severity::Error, at, format!("`{}` is freed twice", n))
                } else {
                    self.diag("USE_AFTER_FREE", Severity::Error, at, format!("`{}` used after it was freed", n))
                }
            }
            Some(St::MaybeDead) => {
                let code = if explicit { "DOUBLE_FREE" } else { "USE_AFTER_FREE" };
                self.diag(code, Severity::Warning, at, format!("`{}` may already be freed", n))
            }
            _ => self.read(env, e, at),
        }
        env.q.insert(n, St::Dead);
    }

    fn bind(&mut self, env: &mut Env, v: &str, qubit: bool, at: &str) {
        if qubit {
            if let Some(St::Live) = env.q.get(v) {
                if env.owned.contains(v) {
                    self.diag("QUBIT_LEAK", Severity::Warning, at, format!("live qubit `{}` is overwritten", v));
                }
            }
            env.q.insert(v.to_string(), St::Live);
            env.owned.insert(v.to_string());
        } else {
            env.q.remove(v);
            env.owned.remove(v);
        }
        env.bound.insert(v.to_string());
    }

    fn is_qubit_expr(env: &Env, e: &Expr) -> bool {
        match e {
            Expr::Val(Value::Qubit(_)) => true,
            Expr::Val(Value::Var(v)) => env.q.contains_key(v),
            _ => false,
        }
    }

    fn join(a: Option<Env>, b: Option<Env>) -> Option<Env> {
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            (x, None) | (None, x) => return x,
        };
        let mut out = Env::default();
        out.bound = a.bound.intersection(&b.bound).cloned().collect();
        out.maybe = a.bound.symmetric_difference(&b.bound).cloned().chain(a.maybe.union(&b.maybe).cloned()).collect();
        for k in a.q.keys().chain(b.q.keys()) {
            let s = match (a.q.get(k), b.q.get(k)) {
                (Some(x), Some(y)) if x == y => *x,
                (Some(St::Live), None) | (None, Some(St::Live)) => St::MaybeUnbound,
                (Some(_), None) | (None, Some(_)) => St::MaybeDead,
                _ => St::MaybeDead,
            };
            out.q.insert(k.clone(), s);
        }
        out.owned = a.owned.union(&b.owned).cloned().collect();
        Some(out)
    }

    // None when every path through the block stops
    fn block(&mut self, mut env: Env, body: &[Instr], prefix: &str) -> Option<Env> {
        for (k, i) in body.iter().enumerate() {
            let at = if prefix.is_empty() { k.to_string() } else { format!("{}.{}", prefix, k) };
            match i {
                Instr::Stop => return None,
                Instr::Open { sess, .. } => {
                    env.bound.insert(sess.clone());
                }
                Instr::Close { .. } => {}
                Instr::Init { var } => self.bind(&mut env, var, true, &at),
                Instr::Free { arg } => self.release(&mut env, arg, &at, true),
                Instr::Assign { var, expr } => {
                    self.read(&env, expr, &at);
                    let q = Self::is_qubit_expr(&env, expr);
                    self.bind(&mut env, var, false, &at);
                    if q {
                        // aliases share the referent; do not treat as a new allocation
                        env.q.insert(var.clone(), St::Live);
                    }
                }
                Instr::Gate { args, .. } | Instr::Measure { args, .. } => {
                    for a in args {
                        self.read(&env, a, &at);
                    }
                    if let Instr::Measure { var, .. } = i {
                        self.bind(&mut env, var, false, &at);
                    }
                }
                Instr::GenEnt { var, .. } => self.bind(&mut env, var, true, &at),
                Instr::EntSwap { out1, out2, a, b } => {
                    self.release(&mut env, a, &at, false);
                    self.release(&mut env, b, &at, false);
                    self.bind(&mut env, out1, false, &at);
                    self.bind(&mut env, out2, false, &at);
                }
                Instr::If { cond, then, els } => {
                    self.read(&env, cond, &at);
                    let t = self.block(env.clone(), then, &format!("{}.then", at));
                    let e = self.block(env.clone(), els, &format!("{}.else", at));
                    env = Self::join(t, e)?;
                }
                Instr::QSend { data, comm, .. } => {
                    self.release(&mut env, data, &at, false);
                    self.release(&mut env, comm, &at, false);
                }
                Instr::QRecv { var, comm, .. } => {
                    self.release(&mut env, comm, &at, false);
                    self.bind(&mut env, var, true, &at);
                }
                Instr::RcxC { data, comm, .. } | Instr::RcxT { data, comm, .. } => {
                    self.read(&env, data, &at);
                    self.release(&mut env, comm, &at, false);
                }
                Instr::Send { expr, .. } => self.read(&env, expr, &at),
                Instr::Recv { var, .. } => self.bind(&mut env, var, false, &at),
            }
        }
        Some(env)
    }
}

/// Linearity of qubit variables: double free, use after free, unbound names, leaks.
pub fn lint_linear(sys: &System) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (k, p) in sys.procs.iter().enumerate() {
        let mut lin = Linear { proc: k, loc: p.loc, out: &mut out };
        if let Some(env) = lin.block(Env::default(), &p.body, "") {
            for (v, s) in &env.q {
                if !env.owned.contains(v) {
                    continue;
                }
                match s {
                    St::Live => lin.diag("QUBIT_LEAK", Severity::Warning, "end", format!("qubit `{}` is never freed", v)),
                    St::MaybeDead | St::MaybeUnbound => lin.diag(
                        "QUBIT_LEAK",
                        Severity::Warning,
                        "end",
                        format!("qubit `{}` is freed on some paths only", v),
                    ),
                    St::Dead => {}
                }
            }
        }
    }
    out
}

fn walk<'a>(body: &'a [Instr], prefix: &str, f: &mut dyn FnMut(&'a Instr, String)) {
    for (k, i) in body.iter().enumerate() {
        let at = if prefix.is_empty() { k.to_string() } else { format!("{}.{}", prefix, k) };
        f(i, at.clone());
        if let Instr::If { then, els, .. } = i {
            walk(then, &format!("{}.then", at), f);
            walk(els, &format!("{}.else", at), f);
        }
    }
}

/// Pairing of genEnt and rcx, session openings, and message matching.
pub fn lint_sessions(sys: &System) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut d = |code: &str, sev: Severity, proc: usize, loc: Pid, at: String, message: String| {
        out.push(Diagnostic { code: code.into(), severity: sev, proc, loc, at, message })
    };
    // (from, to, label) -> sites
    let mut ents: BTreeMap<(Pid, Pid, String), Vec<(usize, String)>> = BTreeMap::new();
    let mut rcx: BTreeMap<(bool, Pid, Pid, String, String), Vec<(usize, String)>> = BTreeMap::new();
    let mut opens: BTreeMap<String, Vec<(usize, BTreeSet<Pid>, String)>> = BTreeMap::new();
    let mut sends: BTreeMap<(String, Pid, String), Vec<(usize, String, usize)>> = BTreeMap::new();
    let mut recvs: BTreeMap<(String, Pid, String), Vec<(usize, String, usize)>> = BTreeMap::new();
    for (k, p) in sys.procs.iter().enumerate() {
        walk(&p.body, "", &mut |i, at| match i {
            Instr::GenEnt { peer, label, .. } => ents.entry((p.loc, *peer, label.clone())).or_default().push((k, at)),
            Instr::RcxC { peer, sess, label, .. } => {
                rcx.entry((true, p.loc, *peer, sess.clone(), label.clone())).or_default().push((k, at))
            }
            Instr::RcxT { peer, sess, label, .. } => {
                rcx.entry((false, p.loc, *peer, sess.clone(), label.clone())).or_default().push((k, at))
            }
            Instr::Open { sess, parts } => {
                opens.entry(sess.clone()).or_default().push((k, parts.iter().copied().collect(), at))
            }
            Instr::Send { sess, peer, label, .. } => {
                sends.entry((sess.clone(), *peer, label.clone())).or_default().push((k, at, 1))
            }
            Instr::QSend { sess, peer, label, .. } => {
                sends.entry((sess.clone(), *peer, label.clone())).or_default().push((k, at, 2))
            }
            Instr::Recv { sess, label, .. } => {
                recvs.entry((sess.clone(), p.loc, label.clone())).or_default().push((k, at, 1))
            }
            Instr::QRecv { sess, label, .. } => {
                recvs.entry((sess.clone(), p.loc, label.clone())).or_default().push((k, at, 2))
            }
            _ => {}
        });
    }
    let loc = |k: usize| sys.procs[k].loc;

    for ((a, b, l), sites) in &ents {
        let back = ents.get(&(*b, *a, l.clone())).map_or(0, |v| v.len());
        if a == b {
            for (k, at) in sites {
                d("UNPAIRED_GENENT", Severity::Error, *k, loc(*k), at.clone(), format!("genEnt with own participant {}", a));
            }
        } else if sites.len() != back {
            for (k, at) in sites {
                d(
                    "UNPAIRED_GENENT",
                    Severity::Error,
                    *k,
                    loc(*k),
                    at.clone(),
                    format!("{} genEnt({}) toward {} but {} in return", sites.len(), l, b, back),
                );
            }
        } else if sites.len() > 1 {
            let (k, at) = &sites[1];
            d(
                "AMBIGUOUS_LABEL",
                Severity::Warning,
                *k,
                loc(*k),
                at.clone(),
                format!("label `{}` is used by {} genEnt pairs between {} and {}", l, sites.len(), a, b),
            );
        }
    }
    for ((ctrl, a, b, s, l), sites) in &rcx {
        let back = rcx.get(&(!ctrl, *b, *a, s.clone(), l.clone())).map_or(0, |v| v.len());
        if sites.len() != back {
            for (k, at) in sites {
                d(
                    "UNPAIRED_RCX",
                    Severity::Error,
                    *k,
                    loc(*k),
                    at.clone(),
                    format!("rcx{}({}, {}) toward {} has no partner", if *ctrl { "c" } else { "t" }, s, l, b),
                );
            }
        }
    }
    for (s, sites) in &opens {
        let first = &sites[0].1;
        for (k, parts, at) in sites {
            if !parts.contains(&loc(*k)) {
                d(
                    "OPEN_MISMATCH",
                    Severity::Error,
                    *k,
                    loc(*k),
                    at.clone(),
                    format!("session `{}` opened without its own participant {}", s, loc(*k)),
                );
            }
            if parts != first {
                d(
                    "OPEN_MISMATCH",
                    Severity::Error,
                    *k,
                    loc(*k),
                    at.clone(),
                    format!("session `{}` is opened with differing participant lists", s),
                );
            }
            for p in parts {
                if !sites.iter().any(|(j, _, _)| loc(*j) == *p) {
                    d(
                        "OPEN_MISMATCH",
                        Severity::Error,
                        *k,
                        loc(*k),
                        at.clone(),
                        format!("participant {} never opens session `{}`", p, s),
                    );
                }
            }
        }
    }
    let keys: BTreeSet<&(String, Pid, String)> = sends.keys().chain(recvs.keys()).collect();
    for key in keys {
        let ns: usize = sends.get(key).map_or(0, |v| v.iter().map(|x| x.2).sum());
        let nr: usize = recvs.get(key).map_or(0, |v| v.iter().map(|x| x.2).sum());
        let (s, to, l) = key;
        if ns > nr {
            let (k, at, _) = &sends[key][0];
            d(
                "UNMATCHED_SEND",
                Severity::Warning,
                *k,
                loc(*k),
                at.clone(),
                format!("{} message(s) {}:{} to {} but {} receive(s)", ns, s, l, to, nr),
            );
        } else if nr > ns {
            let (k, at, _) = &recvs[key][0];
            d(
                "UNMATCHED_RECV",
                Severity::Warning,
                *k,
                loc(*k),
                at.clone(),
                format!("{} receive(s) of {}:{} at {} but {} message(s)", nr, s, l, to, ns),
            );
        }
        if let Some(v) = sends.get(key) {
            let senders: BTreeSet<usize> = v.iter().map(|x| x.0).collect();
            if senders.len() > 1 {
                let (k, at, _) = &v[0];
                d(
                    "AMBIGUOUS_LABEL",
                    Severity::Warning,
                    *k,
                    loc(*k),
                    at.clone(),
                    format!("{}:{} to {} is sent by {} processes; delivery order depends on scheduling", s, l, to, senders.len()),
                );
            }
        }
    }
    out
}

/// All lints, sorted by process and position.
pub fn check(sys: &System) -> Vec<Diagnostic> {
    let mut v = lint_linear(sys);
    v.extend(lint_sessions(sys));
    v.sort_by(|a, b| (a.proc, &a.at, &a.code).cmp(&(b.proc, &b.at, &b.code)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_program;

    fn codes(src: &str) -> Vec<String> {
        check(&parse_program(src).unwrap()).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn clean_program() {
        assert!(codes("process 0 { x = init(); H(x); m = measure(x); free x; }").is_empty());
    }

    #[test]
    fn double_free() {
        assert_eq!(codes("process 0 { x = init(); free x; free x; }"), ["DOUBLE_FREE"]);
    }

    #[test]
    fn use_after_free_in_branch_is_path_sensitive() {
        let ds = check(&parse_program("process 0 { x = init(); m = measure(x); if m { free x; } H(x); free x; }").unwrap());
        assert!(ds.iter().any(|d| d.code == "USE_AFTER_FREE" && d.severity == Severity::Warning));
        let both = check(&parse_program("process 0 { x = init(); if 1 { free x; } else { free x; } H(x); }").unwrap());
        assert!(both.iter().any(|d| d.code == "USE_AFTER_FREE" && d.severity == Severity::Error));
    }

    #[test]
    fn unbound_and_leak() {
        let c = codes("process 0 { H(y); x = init(); }");
        assert!(c.contains(&"UNBOUND".to_string()));
        assert!(c.contains(&"QUBIT_LEAK".to_string()));
    }

    #[test]
    fn stop_branch_does_not_leak() {
        assert!(codes("process 0 { x = init(); m = measure(x); if m { free x; stop; } free x; }").is_empty());
    }

    #[test]
    fn session_lints() {
        let c = codes("process 0 { s = open[0,1]; x = genEnt[1](l); free x; } process 1 { s = open[0]; }");
        assert!(c.contains(&"UNPAIRED_GENENT".to_string()));
        assert!(c.contains(&"OPEN_MISMATCH".to_string()));
        let m = codes("process 0 { s = open[0,1]; s[1]!(a: 1); } process 1 { s = open[0,1]; s?(b: v); }");
        assert!(m.contains(&"UNMATCHED_SEND".to_string()));
        assert!(m.contains(&"UNMATCHED_RECV".to_string()));
    }
}

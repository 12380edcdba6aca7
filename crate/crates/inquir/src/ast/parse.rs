use super::{Expr, Gate, Instr, Pid, Process, QubitKind, QubitRef, System, Value};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: duplicate process header `{name}`")]
    DuplicateProcessHeader { line: usize, col: usize, name: String },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::DuplicateProcessHeader { line, col, .. } => (*line, *col),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "process", "as", "stop", "close", "free", "if", "else", "qsend", "rcxc", "rcxt", "entSwap", "open", "init",
    "measure", "genEnt", "qrecv",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Qubit(QubitRef),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Num(s) => format!("number `{}`", s),
            Tok::Qubit(q) => format!("qubit `{}`", q),
            Tok::Sym(c) => format!("`{}`", c),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String| ParseError::Syntax {
        line,
        col,
        expected: vec!["token".into()],
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (sl, sc) = (line, col);
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: sl, col: sc });
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Num(chars[start..i].iter().collect()), line: sl, col: sc });
        } else if c == '@' {
            let kind = match chars.get(i + 1) {
                Some('q') => QubitKind::Data,
                Some('c') => QubitKind::Comm,
                _ => return Err(err(sl, sc, "`@`".into())),
            };
            i += 2;
            let ds = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[ds..i].iter().collect();
            let uid = digits.parse::<u32>().map_err(|_| err(sl, sc, format!("`@{}`", digits)))?;
            out.push(Token { tok: Tok::Qubit(QubitRef { kind, uid }), line: sl, col: sc });
        } else if "{}()[];,=!?:&^-".contains(c) {
            i += 1;
            out.push(Token { tok: Tok::Sym(c), line: sl, col: sc });
        } else {
            return Err(err(sl, sc, format!("`{}`", c)));
        }
        col += i - start;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type R<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn fail<T>(&self, expected: &[&str]) -> R<T> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }
    fn sym(&mut self, c: char) -> R<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{}`", c)])
        }
    }
    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }
    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }
    fn kw(&mut self, kw: &str) -> R<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{}`", kw)])
        }
    }
    fn ident(&mut self) -> R<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }
    fn pid(&mut self) -> R<Pid> {
        match self.peek().clone() {
            Tok::Num(s) => match s.parse::<Pid>() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.fail(&["participant id"]),
            },
            _ => self.fail(&["participant id"]),
        }
    }
    fn float(&mut self) -> R<f64> {
        let neg = self.eat_sym('-');
        match self.peek().clone() {
            Tok::Num(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    self.bump();
                    Ok(if neg { -v } else { v })
                }
                _ => self.fail(&["finite number"]),
            },
            _ => self.fail(&["number"]),
        }
    }

    fn program(&mut self) -> R<System> {
        let mut procs = Vec::new();
        let mut names = HashSet::new();
        while *self.peek() != Tok::Eof {
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            self.kw("process")?;
            let loc = self.pid()?;
            let name = if self.is_kw("as") {
                self.bump();
                let n = self.ident()?;
                if !names.insert(n.clone()) {
                    return Err(ParseError::DuplicateProcessHeader { line, col, name: n });
                }
                Some(n)
            } else {
                None
            };
            let body = self.block()?;
            procs.push(Process { loc, name, body });
        }
        Ok(System { procs })
    }

    fn block(&mut self) -> R<Vec<Instr>> {
        self.sym('{')?;
        let mut body = Vec::new();
        while !self.eat_sym('}') {
            if *self.peek() == Tok::Eof {
                return self.fail(&["`}`"]);
            }
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn stmt(&mut self) -> R<Instr> {
        if self.eat_sym('(') {
            let out1 = self.ident()?;
            self.sym(',')?;
            let out2 = self.ident()?;
            self.sym(')')?;
            self.sym('=')?;
            self.kw("entSwap")?;
            self.sym('(')?;
            let a = self.expr()?;
            self.sym(',')?;
            let b = self.expr()?;
            self.sym(')')?;
            self.sym(';')?;
            return Ok(Instr::EntSwap { out1, out2, a, b });
        }
        let head = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.fail(&["statement"]),
        };
        match head.as_str() {
            "stop" => {
                self.bump();
                self.sym(';')?;
                Ok(Instr::Stop)
            }
            "close" => {
                self.bump();
                self.sym('(')?;
                let sess = self.ident()?;
                self.sym(')')?;
                self.sym(';')?;
                Ok(Instr::Close { sess })
            }
            "free" => {
                self.bump();
                let arg = self.expr()?;
                self.sym(';')?;
                Ok(Instr::Free { arg })
            }
            "if" => {
                self.bump();
                let cond = self.expr()?;
                let then = self.block()?;
                let els = if self.is_kw("else") {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Instr::If { cond, then, els })
            }
            "qsend" | "rcxc" | "rcxt" => {
                self.bump();
                self.sym('[')?;
                let peer = self.pid()?;
                self.sym(']')?;
                self.sym('(')?;
                let sess = self.ident()?;
                self.sym(',')?;
                let label = self.ident()?;
                self.sym(',')?;
                let data = self.expr()?;
                self.sym(',')?;
                let comm = self.expr()?;
                self.sym(')')?;
                self.sym(';')?;
                Ok(match head.as_str() {
                    "qsend" => Instr::QSend { peer, sess, label, data, comm },
                    "rcxc" => Instr::RcxC { peer, sess, label, data, comm },
                    _ => Instr::RcxT { peer, sess, label, data, comm },
                })
            }
            _ if is_keyword(&head) => self.fail(&["statement"]),
            _ => match self.peek_at(1).clone() {
                Tok::Sym('=') => self.binding(),
                Tok::Sym('[') => self.send(),
                Tok::Sym('?') => self.recv(),
                Tok::Sym('(') if Gate::is_gate_name(&head) => self.gate(),
                _ => {
                    self.bump();
                    self.fail(&["`=`", "`[`", "`?`", "`(`"])
                }
            },
        }
    }

    fn binding(&mut self) -> R<Instr> {
        let var = self.ident()?;
        self.sym('=')?;
        let rhs = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => String::new(),
        };
        let instr = match rhs.as_str() {
            "open" => {
                self.bump();
                self.sym('[')?;
                let mut parts = vec![self.pid()?];
                while self.eat_sym(',') {
                    parts.push(self.pid()?);
                }
                self.sym(']')?;
                Instr::Open { sess: var, parts }
            }
            "init" => {
                self.bump();
                self.sym('(')?;
                self.sym(')')?;
                Instr::Init { var }
            }
            "measure" => {
                self.bump();
                self.sym('(')?;
                let args = self.expr_list()?;
                self.sym(')')?;
                Instr::Measure { var, args }
            }
            "genEnt" => {
                self.bump();
                self.sym('[')?;
                let peer = self.pid()?;
                self.sym(']')?;
                self.sym('(')?;
                let label = self.ident()?;
                self.sym(')')?;
                Instr::GenEnt { var, peer, label }
            }
            "qrecv" => {
                self.bump();
                self.sym('(')?;
                let sess = self.ident()?;
                self.sym(',')?;
                let label = self.ident()?;
                self.sym(',')?;
                let comm = self.expr()?;
                self.sym(')')?;
                Instr::QRecv { var, sess, label, comm }
            }
            _ => Instr::Assign { var, expr: self.expr()? },
        };
        self.sym(';')?;
        Ok(instr)
    }

    fn send(&mut self) -> R<Instr> {
        let sess = self.ident()?;
        self.sym('[')?;
        let peer = self.pid()?;
        self.sym(']')?;
        self.sym('!')?;
        self.sym('(')?;
        let label = self.ident()?;
        self.sym(':')?;
        let expr = self.expr()?;
        self.sym(')')?;
        self.sym(';')?;
        Ok(Instr::Send { sess, peer, label, expr })
    }

    fn recv(&mut self) -> R<Instr> {
        let sess = self.ident()?;
        self.sym('?')?;
        self.sym('(')?;
        let label = self.ident()?;
        self.sym(':')?;
        let var = self.ident()?;
        self.sym(')')?;
        self.sym(';')?;
        Ok(Instr::Recv { sess, label, var })
    }

    fn gate(&mut self) -> R<Instr> {
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => unreachable!(),
        };
        let nparams = match name.as_str() {
            "RX" | "RY" | "RZ" | "U1" => 1,
            "U2" => 2,
            "U3" => 3,
            _ => 0,
        };
        let mut params = Vec::new();
        if nparams > 0 {
            self.sym('(')?;
            params.push(self.float()?);
            for _ in 1..nparams {
                self.sym(',')?;
                params.push(self.float()?);
            }
            self.sym(')')?;
        }
        let gate = Gate::from_name(&name, &params).expect("gate name checked");
        self.sym('(')?;
        let args = self.expr_list()?;
        self.sym(')')?;
        self.sym(';')?;
        if args.len() != gate.arity() {
            self.pos -= 1;
            return self.fail(&[&format!("{} operand(s) for {}", gate.arity(), name)]);
        }
        Ok(Instr::Gate { gate, args })
    }

    fn expr_list(&mut self) -> R<Vec<Expr>> {
        let mut v = vec![self.expr()?];
        while self.eat_sym(',') {
            v.push(self.expr()?);
        }
        Ok(v)
    }

    fn expr(&mut self) -> R<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_sym('^') {
            let rhs = self.and_expr()?;
            lhs = Expr::Xor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> R<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_sym('&') {
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> R<Expr> {
        if self.eat_sym('!') {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        match self.peek().clone() {
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.sym(')')?;
                Ok(e)
            }
            Tok::Num(s) if s == "0" || s == "1" => {
                self.bump();
                Ok(Expr::Val(Value::Bit(s == "1")))
            }
            Tok::Qubit(q) => {
                self.bump();
                Ok(Expr::Val(Value::Qubit(q)))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Expr::Val(Value::Var(s)))
            }
            _ => self.fail(&["expression"]),
        }
    }
}

/// Parse a program in the concrete `.inq` syntax.
pub fn parse_program(text: &str) -> Result<System, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_stop() {
        let sys = parse_program("process 0 { stop; }").unwrap();
        assert_eq!(sys.procs.len(), 1);
        assert_eq!(sys.procs[0].loc, 0);
        assert_eq!(sys.procs[0].body, vec![Instr::Stop]);
    }

    #[test]
    fn init_free_stop() {
        let sys = parse_program("process 0 { x = init(); free x; stop; }").unwrap();
        assert_eq!(
            sys.procs[0].body,
            vec![Instr::Init { var: "x".into() }, Instr::Free { arg: Expr::var("x") }, Instr::Stop]
        );
    }

    #[test]
    fn every_statement_form() {
        let src = r#"
            process 1 as main {
                s = open[0,1];
                x = genEnt[0](l1);
                y = init();
                m = measure(y, x);
                (w1, w2) = entSwap(x, y);
                b = !w1 ^ w2 & 1;
                if b { Z(y); } else { X(y); }
                RZ(-0.25)(y);
                U3(1.5, 2, 3e-2)(y);
                CX(y, @q3);
                s[0]!(l2: m);
                s?(l2: r);
                qsend[0](s, l3, y, x);
                z = qrecv(s, l3, x);
                rcxc[0](s, l4, z, x);
                rcxt[0](s, l4, z, @c9);
                close(s);
                stop;
            }
        "#;
        let sys = parse_program(src).unwrap();
        assert_eq!(sys.procs[0].name.as_deref(), Some("main"));
        assert_eq!(sys.procs[0].body.len(), 18);
        assert!(matches!(sys.procs[0].body[7], Instr::Gate { gate: Gate::Rz { theta }, .. } if theta == -0.25));
    }

    #[test]
    fn precedence() {
        let sys = parse_program("process 0 { a = x ^ y & !z; }").unwrap();
        let expected = Expr::Xor(
            Box::new(Expr::var("x")),
            Box::new(Expr::And(Box::new(Expr::var("y")), Box::new(Expr::Not(Box::new(Expr::var("z")))))),
        );
        assert_eq!(sys.procs[0].body[0], Instr::Assign { var: "a".into(), expr: expected });
    }

    #[test]
    fn error_has_location() {
        let err = parse_program("process 0 {\n  x = init()\n}").unwrap_err();
        assert_eq!(err.location(), (3, 1));
    }

    #[test]
    fn duplicate_named_header() {
        let err = parse_program("process 0 as a { } process 1 as a { }").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateProcessHeader { .. }));
    }

    #[test]
    fn keyword_not_identifier() {
        assert!(parse_program("process 0 { init = init(); }").is_err());
    }

    #[test]
    fn gate_arity_checked() {
        assert!(parse_program("process 0 { CX(a); }").is_err());
    }
}

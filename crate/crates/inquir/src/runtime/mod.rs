//! Small-step interpreter over runtime states <rho, Q, E, S, H>.

mod expand;
mod explore;
mod stuck;

pub use expand::{expand_derived, expand_system};
pub use explore::{explore, ExploreSummary};
pub use stuck::{classify_stuck, StuckKind, StuckReport, WaitEdge};

use crate::arch::{ArchConfig, QubitLayout};
use crate::ast::{print_instr, Expr, Gate, Instr, Pid, QubitKind, QubitRef, System, Value};
use crate::qstate::{Backend, BackendKind, OutcomeOracle, QStateError, Release};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("backend: {0}")]
    Backend(#[from] QStateError),
    #[error("process {proc}: unbound variable `{var}`")]
    UnboundVariable { proc: usize, var: String },
    #[error("process {proc}: {msg}")]
    TypeError { proc: usize, msg: String },
    #[error("qubit {0} is not in use")]
    NotInUse(QubitRef),
    #[error("transition is not enabled")]
    IllegalChoice,
    #[error("state is not stuck")]
    NotStuck,
}

/// One applicable rule instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Transition {
    /// Any rule that involves a single process.
    Local { proc: usize },
    /// Session opening, one process per listed participant.
    Open { procs: Vec<usize> },
    /// EPR generation between two processes.
    GenEnt { a: usize, b: usize },
    /// Atomic remote CX: control side, target side.
    Rcx { ctrl: usize, targ: usize },
}

impl Transition {
    pub fn procs(&self) -> Vec<usize> {
        match self {
            Transition::Local { proc } => vec![*proc],
            Transition::Open { procs } => procs.clone(),
            Transition::GenEnt { a, b } => vec![*a, *b],
            Transition::Rcx { ctrl, targ } => vec![*ctrl, *targ],
        }
    }

    pub fn is_joint(&self) -> bool {
        !matches!(self, Transition::Local { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Transition::Local { .. } => "local",
            Transition::Open { .. } => "open",
            Transition::GenEnt { .. } => "genEnt",
            Transition::Rcx { .. } => "rcx",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SchedulerPolicy {
    RoundRobin,
    SeededRandom { seed: u64 },
    InOrderPerProcess,
    DependencyResolved,
}

impl SchedulerPolicy {
    pub fn parse(s: &str, seed: u64) -> Option<Self> {
        match s {
            "roundrobin" | "rr" => Some(SchedulerPolicy::RoundRobin),
            "random" => Some(SchedulerPolicy::SeededRandom { seed }),
            "inorder" => Some(SchedulerPolicy::InOrderPerProcess),
            "depresolved" => Some(SchedulerPolicy::DependencyResolved),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
struct Frame {
    body: Arc<Vec<Instr>>,
    pc: usize,
}

#[derive(Clone, Debug)]
pub struct ProcState {
    pub loc: Pid,
    pub name: String,
    stack: Vec<Frame>,
    pub env: HashMap<String, Value>,
    clock: u64,
    last_step: Option<u64>,
}

impl ProcState {
    pub fn head(&self) -> Option<&Instr> {
        self.stack.last().map(|f| &f.body[f.pc])
    }

    pub fn is_done(&self) -> bool {
        self.stack.is_empty()
    }

    fn advance(&mut self) {
        if let Some(f) = self.stack.last_mut() {
            f.pc += 1;
        }
        self.normalize();
    }

    fn normalize(&mut self) {
        while let Some(f) = self.stack.last() {
            if f.pc < f.body.len() {
                break;
            }
            self.stack.pop();
        }
    }

    /// Remaining instructions in execution order, flattening pending frames.
    pub fn remaining(&self) -> Vec<&Instr> {
        let mut out = Vec::new();
        for f in self.stack.iter().rev() {
            out.extend(f.body[f.pc..].iter());
        }
        out
    }

    /// Current head with the environment applied.
    pub fn head_substituted(&self) -> Option<Instr> {
        self.head().map(|i| i.substitute(&self.env))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeapEntry {
    pub label: String,
    pub value: Value,
    #[serde(skip)]
    step: u64,
}

/// One executed transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub time: u64,
    pub rule: String,
    pub procs: Vec<usize>,
    pub participants: Vec<Pid>,
    pub op: String,
    pub operands: Vec<String>,
    pub deps: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcome: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("event serializes"));
            s.push('\n');
        }
        s
    }

    /// Joint transitions as (rule, sorted participants).
    pub fn joint_multiset(&self) -> Vec<(String, Vec<Pid>)> {
        let mut v: Vec<(String, Vec<Pid>)> = self
            .events
            .iter()
            .filter(|e| e.rule != "local")
            .map(|e| {
                let mut p = e.participants.clone();
                p.sort_unstable();
                (e.rule.clone(), p)
            })
            .collect();
        v.sort();
        v
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.events.iter().filter_map(|e| e.warning.as_deref()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct RuntimeState {
    pub backend: Backend,
    pub oracle: OutcomeOracle,
    free_rng: ChaCha8Rng,
    layout: Arc<QubitLayout>,
    /// Free data qubits per participant.
    pub data_store: BTreeMap<Pid, BTreeSet<QubitRef>>,
    /// Free communication qubits.
    pub epr_free: BTreeSet<QubitRef>,
    pub procs: Vec<ProcState>,
    pub heap: BTreeMap<(String, Pid), Vec<HeapEntry>>,
    /// In-use qubit -> process holding it.
    pub holders: BTreeMap<QubitRef, usize>,
    steps: u64,
    trace: Trace,
}

/// How a run should be configured.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub oracle: OutcomeOracle,
    pub policy: SchedulerPolicy,
    /// Step budget; `None` means 10 times the instruction count.
    pub fuel: Option<u64>,
    /// Replace derived operations by their primitive sequences first.
    pub expand: bool,
    /// Seed for Z-measurements performed when freeing entangled qubits.
    pub free_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendKind::StateVector,
            oracle: OutcomeOracle::born(0),
            policy: SchedulerPolicy::RoundRobin,
            fuel: None,
            expand: false,
            free_seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum RunOutcome {
    Completed { state: Box<RuntimeState> },
    Stuck { report: StuckReport, state: Box<RuntimeState> },
    FuelExhausted { state: Box<RuntimeState> },
}

impl RunOutcome {
    pub fn state(&self) -> &RuntimeState {
        match self {
            RunOutcome::Completed { state } | RunOutcome::Stuck { state, .. } | RunOutcome::FuelExhausted { state } => {
                state
            }
        }
    }

    pub fn trace(&self) -> &Trace {
        &self.state().trace
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunOutcome::Completed { .. } => 0,
            RunOutcome::Stuck { .. } => 3,
            RunOutcome::FuelExhausted { .. } => 4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RunOutcome::Completed { .. } => "completed",
            RunOutcome::Stuck { .. } => "stuck",
            RunOutcome::FuelExhausted { .. } => "fuel_exhausted",
        }
    }
}

/// Why a process cannot take a local step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Block {
    NoDataQubit(Pid),
    NoMessage { sess: String, at: Pid, label: String },
    SessionClosed { sess: String, at: Pid },
    Rendezvous,
}

fn qubit_of(v: &Value, proc: usize) -> Result<QubitRef, RuntimeError> {
    match v {
        Value::Qubit(q) => Ok(*q),
        other => Err(RuntimeError::TypeError { proc, msg: format!("expected a qubit, got {:?}", other) }),
    }
}

fn bit_of(v: &Value, proc: usize) -> Result<bool, RuntimeError> {
    match v {
        Value::Bit(b) => Ok(*b),
        other => Err(RuntimeError::TypeError { proc, msg: format!("expected a bit, got {:?}", other) }),
    }
}

fn show(v: &Value) -> String {
    match v {
        Value::Bit(b) => (*b as u8).to_string(),
        Value::Qubit(q) => q.to_string(),
        Value::Var(s) => s.clone(),
    }
}

impl RuntimeState {
    /// Initial state for `sys` on `arch`. Data-qubit literals in the program are
    /// taken from their home store and allocated in |0> up front.
    pub fn new(sys: &System, arch: &ArchConfig, cfg: &RunConfig) -> Result<Self, RuntimeError> {
        arch.validate().map_err(|e| RuntimeError::ConfigMismatch(e.to_string()))?;
        let sys = if cfg.expand { expand_system(sys) } else { sys.clone() };
        let n = arch.num_processors() as Pid;
        for p in &sys.procs {
            if p.loc >= n {
                return Err(RuntimeError::ConfigMismatch(format!("process at unknown participant {}", p.loc)));
            }
        }
        let layout = arch.layout();
        let mut data_store: BTreeMap<Pid, BTreeSet<QubitRef>> =
            layout.data.iter().map(|(p, v)| (*p, v.iter().copied().collect())).collect();
        let epr_free: BTreeSet<QubitRef> = layout.comm.iter().map(|s| s.qubit).collect();
        let mut backend = Backend::new(cfg.backend);
        let mut holders = BTreeMap::new();
        let procs: Vec<ProcState> = sys
            .procs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut ps = ProcState {
                    loc: p.loc,
                    name: p.display_name(i),
                    stack: vec![Frame { body: Arc::new(p.body.clone()), pc: 0 }],
                    env: HashMap::new(),
                    clock: 0,
                    last_step: None,
                };
                ps.normalize();
                ps
            })
            .collect();
        for (loc, q) in sys.qubit_literals() {
            match q.kind {
                QubitKind::Comm => {
                    return Err(RuntimeError::ConfigMismatch(format!("comm qubit literal {} in initial program", q)))
                }
                QubitKind::Data => {
                    if layout.data_home(q) != Some(loc) {
                        return Err(RuntimeError::ConfigMismatch(format!(
                            "data qubit {} does not belong to participant {}",
                            q, loc
                        )));
                    }
                    if holders.contains_key(&q) {
                        continue;
                    }
                    data_store.get_mut(&loc).map(|s| s.remove(&q));
                    backend.alloc(q)?;
                    let owner = sys
                        .procs
                        .iter()
                        .position(|p| {
                            p.loc == loc && System::new(vec![p.clone()]).qubit_literals().iter().any(|(_, r)| *r == q)
                        })
                        .unwrap_or(0);
                    holders.insert(q, owner);
                }
            }
        }
        Ok(RuntimeState {
            backend,
            oracle: cfg.oracle.clone(),
            free_rng: ChaCha8Rng::seed_from_u64(cfg.free_seed),
            layout: Arc::new(layout),
            data_store,
            epr_free,
            procs,
            heap: BTreeMap::new(),
            holders,
            steps: 0,
            trace: Trace::default(),
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// S is congruent to 0.
    pub fn is_terminated(&self) -> bool {
        self.procs.iter().all(|p| p.is_done())
    }

    /// Lowest-uid free comm qubit usable by `owner` toward `peer`.
    pub fn comm_candidate(&self, owner: Pid, peer: Pid) -> Option<QubitRef> {
        self.layout
            .comm
            .iter()
            .filter(|s| s.owner == owner && (s.peer.is_none() || s.peer == Some(peer)))
            .map(|s| s.qubit)
            .filter(|q| self.epr_free.contains(q))
            .min()
    }

    /// Free comm qubits grouped by (owner, peer); `None` peer is processor-wide.
    pub fn epr_store(&self) -> BTreeMap<(Pid, Option<Pid>), Vec<QubitRef>> {
        let mut m: BTreeMap<(Pid, Option<Pid>), Vec<QubitRef>> = BTreeMap::new();
        for s in &self.layout.comm {
            let e = m.entry((s.owner, s.peer)).or_default();
            if self.epr_free.contains(&s.qubit) {
                e.push(s.qubit);
            }
        }
        m
    }

    fn eval(&self, proc: usize, e: &Expr) -> Result<Value, RuntimeError> {
        let env = &self.procs[proc].env;
        match e {
            Expr::Val(Value::Var(v)) => {
                env.get(v).cloned().ok_or_else(|| RuntimeError::UnboundVariable { proc, var: v.clone() })
            }
            Expr::Val(v) => Ok(v.clone()),
            Expr::And(a, b) => {
                Ok(Value::Bit(bit_of(&self.eval(proc, a)?, proc)? & bit_of(&self.eval(proc, b)?, proc)?))
            }
            Expr::Xor(a, b) => {
                Ok(Value::Bit(bit_of(&self.eval(proc, a)?, proc)? ^ bit_of(&self.eval(proc, b)?, proc)?))
            }
            Expr::Not(a) => Ok(Value::Bit(!bit_of(&self.eval(proc, a)?, proc)?)),
        }
    }

    fn eval_qubit(&self, proc: usize, e: &Expr) -> Result<QubitRef, RuntimeError> {
        qubit_of(&self.eval(proc, e)?, proc)
    }

    fn heap_count(&self, sess: &str, at: Pid, label: &str) -> Option<usize> {
        self.heap.get(&(sess.to_string(), at)).map(|v| v.iter().filter(|e| e.label == label).count())
    }

    /// Local blocking condition for process `i`, if any.
    pub(crate) fn local_block(&self, i: usize) -> Option<Block> {
        let p = &self.procs[i];
        let h = p.head()?;
        let no_data = || self.data_store.get(&p.loc).is_none_or(|s| s.is_empty());
        match h {
            Instr::Open { .. } | Instr::GenEnt { .. } | Instr::RcxC { .. } | Instr::RcxT { .. } => Some(Block::Rendezvous),
            Instr::Init { .. } if no_data() => Some(Block::NoDataQubit(p.loc)),
            Instr::Close { sess } if !self.heap.contains_key(&(sess.clone(), p.loc)) => {
                Some(Block::SessionClosed { sess: sess.clone(), at: p.loc })
            }
            Instr::Send { sess, peer, .. } | Instr::QSend { sess, peer, .. }
                if !self.heap.contains_key(&(sess.clone(), *peer)) =>
            {
                Some(Block::SessionClosed { sess: sess.clone(), at: *peer })
            }
            Instr::Recv { sess, label, .. } => match self.heap_count(sess, p.loc, label) {
                None => Some(Block::SessionClosed { sess: sess.clone(), at: p.loc }),
                Some(0) => Some(Block::NoMessage { sess: sess.clone(), at: p.loc, label: label.clone() }),
                _ => None,
            },
            Instr::QRecv { sess, label, .. } => match self.heap_count(sess, p.loc, label) {
                None => Some(Block::SessionClosed { sess: sess.clone(), at: p.loc }),
                Some(n) if n < 2 => Some(Block::NoMessage { sess: sess.clone(), at: p.loc, label: label.clone() }),
                _ if no_data() => Some(Block::NoDataQubit(p.loc)),
                _ => None,
            },
            _ => None,
        }
    }

    fn open_candidates(&self, i: usize) -> Vec<Vec<usize>> {
        let (sess, parts) = match self.procs[i].head() {
            Some(Instr::Open { sess, parts }) => (sess, parts),
            _ => return vec![],
        };
        let want: BTreeSet<Pid> = parts.iter().copied().collect();
        if !want.contains(&self.procs[i].loc) || want.iter().any(|p| self.heap.contains_key(&(sess.clone(), *p))) {
            return vec![];
        }
        let mut per: Vec<Vec<usize>> = Vec::new();
        for &loc in &want {
            let c: Vec<usize> = self
                .procs
                .iter()
                .enumerate()
                .filter(|(_, p)| p.loc == loc)
                .filter(|(_, p)| {
                    matches!(p.head(), Some(Instr::Open { sess: s2, parts: p2 })
                        if s2 == sess && p2.iter().copied().collect::<BTreeSet<_>>() == want)
                })
                .map(|(k, _)| k)
                .collect();
            if c.is_empty() {
                return vec![];
            }
            per.push(c);
        }
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for c in per {
            combos = combos
                .into_iter()
                .flat_map(|pre| {
                    c.iter().map(move |&k| {
                        let mut v = pre.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        combos.retain(|v| v.contains(&i));
        combos
    }

    /// Every rule instance whose premises hold, in a canonical order.
    pub fn enabled_transitions(&self) -> Vec<Transition> {
        let mut out = BTreeSet::new();
        for (i, p) in self.procs.iter().enumerate() {
            let h = match p.head() {
                Some(h) => h,
                None => continue,
            };
            match h {
                Instr::Open { .. } => {
                    for mut c in self.open_candidates(i) {
                        c.sort_unstable();
                        out.insert(Transition::Open { procs: c });
                    }
                }
                Instr::GenEnt { peer, label, .. } => {
                    if *peer == p.loc {
                        continue;
                    }
                    for (j, q) in self.procs.iter().enumerate().skip(i + 1) {
                        if q.loc != *peer {
                            continue;
                        }
                        if let Some(Instr::GenEnt { peer: pp, label: l2, .. }) = q.head() {
                            if *pp == p.loc
                                && l2 == label
                                && self.comm_candidate(p.loc, q.loc).is_some()
                                && self.comm_candidate(q.loc, p.loc).is_some()
                            {
                                out.insert(Transition::GenEnt { a: i, b: j });
                            }
                        }
                    }
                }
                Instr::RcxC { peer, sess, label, .. } => {
                    for (j, q) in self.procs.iter().enumerate() {
                        if j == i || q.loc != *peer {
                            continue;
                        }
                        if let Some(Instr::RcxT { peer: pp, sess: s2, label: l2, .. }) = q.head() {
                            if *pp == p.loc && s2 == sess && l2 == label {
                                out.insert(Transition::Rcx { ctrl: i, targ: j });
                            }
                        }
                    }
                }
                Instr::RcxT { .. } => {}
                _ => {
                    if self.local_block(i).is_none() {
                        out.insert(Transition::Local { proc: i });
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    fn take_data(&mut self, loc: Pid, proc: usize) -> Result<QubitRef, RuntimeError> {
        let q = self
            .data_store
            .get_mut(&loc)
            .and_then(|s| s.pop_first())
            .ok_or(RuntimeError::IllegalChoice)?;
        self.backend.alloc(q)?;
        self.holders.insert(q, proc);
        Ok(q)
    }

    // trace out and return a qubit to the store it came from
    fn release(&mut self, q: QubitRef) -> Result<Option<String>, RuntimeError> {
        if self.holders.remove(&q).is_none() {
            return Err(RuntimeError::NotInUse(q));
        }
        let r = self.backend.trace_out(q, &mut self.free_rng)?;
        match q.kind {
            QubitKind::Data => {
                let home = self.layout.data_home(q).ok_or(RuntimeError::NotInUse(q))?;
                self.data_store.entry(home).or_default().insert(q);
            }
            QubitKind::Comm => {
                self.epr_free.insert(q);
            }
        }
        Ok(match r {
            Release::Clean => None,
            Release::MeasuredEntangled(v) => Some(format!("freed entangled qubit {} (measured {})", q, v as u8)),
        })
    }

    fn measure(&mut self, qs: &[QubitRef]) -> Result<bool, RuntimeError> {
        Ok(self.backend.measure_parity(qs, &mut self.oracle)?)
    }

    fn gate(&mut self, g: Gate, qs: &[QubitRef]) -> Result<(), RuntimeError> {
        Ok(self.backend.apply_gate(&g, qs)?)
    }

    fn push_heap(&mut self, sess: &str, at: Pid, label: &str, value: Value) -> Result<(), RuntimeError> {
        let step = self.steps;
        let v = self.heap.get_mut(&(sess.to_string(), at)).ok_or(RuntimeError::IllegalChoice)?;
        v.push(HeapEntry { label: label.to_string(), value, step });
        Ok(())
    }

    fn pop_heap(&mut self, sess: &str, at: Pid, label: &str) -> Result<HeapEntry, RuntimeError> {
        let v = self.heap.get_mut(&(sess.to_string(), at)).ok_or(RuntimeError::IllegalChoice)?;
        let k = v.iter().position(|e| e.label == label).ok_or(RuntimeError::IllegalChoice)?;
        Ok(v.remove(k))
    }

    /// Apply one enabled transition.
    pub fn step(&mut self, t: &Transition) -> Result<(), RuntimeError> {
        if !self.enabled_transitions().contains(t) {
            return Err(RuntimeError::IllegalChoice);
        }
        self.step_unchecked(t)
    }

    fn step_unchecked(&mut self, t: &Transition) -> Result<(), RuntimeError> {
        let procs = t.procs();
        let mut deps: Vec<u64> = procs.iter().filter_map(|&i| self.procs[i].last_step).collect();
        let mut time = procs.iter().map(|&i| self.procs[i].clock).max().unwrap_or(0);
        let mut ev = TraceEvent {
            step: self.steps,
            time: 0,
            rule: t.kind().to_string(),
            procs: procs.clone(),
            participants: procs.iter().map(|&i| self.procs[i].loc).collect(),
            op: String::new(),
            operands: vec![],
            deps: vec![],
            outcome: vec![],
            warning: None,
        };
        match t {
            Transition::Open { procs } => {
                let (sess, parts) = match self.procs[procs[0]].head() {
                    Some(Instr::Open { sess, parts }) => (sess.clone(), parts.clone()),
                    _ => return Err(RuntimeError::IllegalChoice),
                };
                for p in &parts {
                    self.heap.insert((sess.clone(), *p), Vec::new());
                }
                ev.op = "open".into();
                ev.operands = vec![sess];
                for &i in procs {
                    self.procs[i].advance();
                }
            }
            Transition::GenEnt { a, b } => {
                let (va, vb) = match (self.procs[*a].head(), self.procs[*b].head()) {
                    (Some(Instr::GenEnt { var: va, .. }), Some(Instr::GenEnt { var: vb, .. })) => (va.clone(), vb.clone()),
                    _ => return Err(RuntimeError::IllegalChoice),
                };
                let (la, lb) = (self.procs[*a].loc, self.procs[*b].loc);
                let qa = self.comm_candidate(la, lb).ok_or(RuntimeError::IllegalChoice)?;
                let qb = self.comm_candidate(lb, la).ok_or(RuntimeError::IllegalChoice)?;
                self.backend.make_epr(qa, qb)?;
                self.epr_free.remove(&qa);
                self.epr_free.remove(&qb);
                self.holders.insert(qa, *a);
                self.holders.insert(qb, *b);
                self.procs[*a].env.insert(va, Value::Qubit(qa));
                self.procs[*b].env.insert(vb, Value::Qubit(qb));
                ev.op = "genEnt".into();
                ev.operands = vec![qa.to_string(), qb.to_string()];
                self.procs[*a].advance();
                self.procs[*b].advance();
            }
            Transition::Rcx { ctrl, targ } => {
                let (c, tg) = (*ctrl, *targ);
                let (dc, cc) = match self.procs[c].head() {
                    Some(Instr::RcxC { data, comm, .. }) => (data.clone(), comm.clone()),
                    _ => return Err(RuntimeError::IllegalChoice),
                };
                let (dt, ct) = match self.procs[tg].head() {
                    Some(Instr::RcxT { data, comm, .. }) => (data.clone(), comm.clone()),
                    _ => return Err(RuntimeError::IllegalChoice),
                };
                let (q1, c1) = (self.eval_qubit(c, &dc)?, self.eval_qubit(c, &cc)?);
                let (q2, c2) = (self.eval_qubit(tg, &dt)?, self.eval_qubit(tg, &ct)?);
                self.gate(Gate::CX, &[q1, c1])?;
                self.gate(Gate::CX, &[c2, q2])?;
                self.gate(Gate::H, &[c2])?;
                let y = self.measure(&[c1])?;
                let y2 = self.measure(&[c2])?;
                if y2 {
                    self.gate(Gate::Z, &[q1])?;
                }
                if y {
                    self.gate(Gate::X, &[q2])?;
                }
                for q in [c1, c2] {
                    if let Some(w) = self.release(q)? {
                        ev.warning = Some(w);
                    }
                }
                ev.op = "rcx".into();
                ev.operands = vec![q1.to_string(), c1.to_string(), q2.to_string(), c2.to_string()];
                ev.outcome = vec![y, y2];
                self.procs[c].advance();
                self.procs[tg].advance();
            }
            Transition::Local { proc } => {
                let i = *proc;
                let h = self.procs[i].head().cloned().ok_or(RuntimeError::IllegalChoice)?;
                let loc = self.procs[i].loc;
                ev.op = h.mnemonic().to_string();
                let mut push_frame: Option<Vec<Instr>> = None;
                let mut stop = false;
                match &h {
                    Instr::Stop => stop = true,
                    Instr::Close { sess } => {
                        self.heap.remove(&(sess.clone(), loc));
                        ev.operands = vec![sess.clone()];
                    }
                    Instr::Init { var } => {
                        let q = self.take_data(loc, i)?;
                        self.procs[i].env.insert(var.clone(), Value::Qubit(q));
                        ev.operands = vec![q.to_string()];
                    }
                    Instr::Free { arg } => {
                        let q = self.eval_qubit(i, arg)?;
                        ev.warning = self.release(q)?;
                        ev.operands = vec![q.to_string()];
                    }
                    Instr::Assign { var, expr } => {
                        let v = self.eval(i, expr)?;
                        ev.operands = vec![show(&v)];
                        self.procs[i].env.insert(var.clone(), v);
                    }
                    Instr::Gate { gate, args } => {
                        let qs: Vec<QubitRef> = args.iter().map(|a| self.eval_qubit(i, a)).collect::<Result<_, _>>()?;
                        self.gate(*gate, &qs)?;
                        ev.op = gate.name().to_string();
                        ev.operands = qs.iter().map(|q| q.to_string()).collect();
                    }
                    Instr::Measure { var, args } => {
                        let qs: Vec<QubitRef> = args.iter().map(|a| self.eval_qubit(i, a)).collect::<Result<_, _>>()?;
                        let v = self.measure(&qs)?;
                        self.procs[i].env.insert(var.clone(), Value::Bit(v));
                        ev.operands = qs.iter().map(|q| q.to_string()).collect();
                        ev.outcome = vec![v];
                    }
                    Instr::EntSwap { out1, out2, a, b } => {
                        let (qa, qb) = (self.eval_qubit(i, a)?, self.eval_qubit(i, b)?);
                        self.gate(Gate::CX, &[qa, qb])?;
                        self.gate(Gate::H, &[qa])?;
                        let w1 = self.measure(&[qa])?;
                        let w2 = self.measure(&[qb])?;
                        for q in [qa, qb] {
                            if let Some(w) = self.release(q)? {
                                ev.warning = Some(w);
                            }
                        }
                        self.procs[i].env.insert(out1.clone(), Value::Bit(w1));
                        self.procs[i].env.insert(out2.clone(), Value::Bit(w2));
                        ev.operands = vec![qa.to_string(), qb.to_string()];
                        ev.outcome = vec![w1, w2];
                    }
                    Instr::If { cond, then, els } => {
                        let v = bit_of(&self.eval(i, cond)?, i)?;
                        ev.operands = vec![(v as u8).to_string()];
                        push_frame = Some(if v { then.clone() } else { els.clone() });
                    }
                    Instr::QSend { peer, sess, label, data, comm } => {
                        let (q, c) = (self.eval_qubit(i, data)?, self.eval_qubit(i, comm)?);
                        self.gate(Gate::CX, &[q, c])?;
                        self.gate(Gate::H, &[q])?;
                        let y1 = self.measure(&[q])?;
                        let y2 = self.measure(&[c])?;
                        self.push_heap(sess, *peer, label, Value::Bit(y1))?;
                        self.push_heap(sess, *peer, label, Value::Bit(y2))?;
                        for r in [q, c] {
                            if let Some(w) = self.release(r)? {
                                ev.warning = Some(w);
                            }
                        }
                        ev.operands = vec![q.to_string(), c.to_string()];
                        ev.outcome = vec![y1, y2];
                    }
                    Instr::QRecv { var, sess, label, comm } => {
                        let c = self.eval_qubit(i, comm)?;
                        let e1 = self.pop_heap(sess, loc, label)?;
                        let e2 = self.pop_heap(sess, loc, label)?;
                        deps.extend([e1.step, e2.step]);
                        let x = self.take_data(loc, i)?;
                        if bit_of(&e1.value, i)? {
                            self.gate(Gate::Z, &[c])?;
                        }
                        if bit_of(&e2.value, i)? {
                            self.gate(Gate::X, &[c])?;
                        }
                        self.gate(Gate::CX, &[x, c])?;
                        self.gate(Gate::CX, &[c, x])?;
                        self.gate(Gate::CX, &[x, c])?;
                        ev.warning = self.release(c)?;
                        self.procs[i].env.insert(var.clone(), Value::Qubit(x));
                        ev.operands = vec![c.to_string(), x.to_string()];
                    }
                    Instr::Send { sess, peer, label, expr } => {
                        let v = self.eval(i, expr)?;
                        ev.operands = vec![sess.clone(), peer.to_string(), label.clone(), show(&v)];
                        self.push_heap(sess, *peer, label, v)?;
                    }
                    Instr::Recv { sess, label, var } => {
                        let e = self.pop_heap(sess, loc, label)?;
                        deps.push(e.step);
                        ev.operands = vec![sess.clone(), label.clone(), show(&e.value)];
                        self.procs[i].env.insert(var.clone(), e.value);
                    }
                    Instr::Open { .. } | Instr::GenEnt { .. } | Instr::RcxC { .. } | Instr::RcxT { .. } => {
                        return Err(RuntimeError::IllegalChoice)
                    }
                }
                if stop {
                    self.procs[i].stack.clear();
                } else {
                    self.procs[i].advance();
                    if let Some(body) = push_frame {
                        if !body.is_empty() {
                            self.procs[i].stack.push(Frame { body: Arc::new(body), pc: 0 });
                        }
                    }
                }
            }
        }
        deps.sort_unstable();
        deps.dedup();
        for d in &deps {
            if let Some(e) = self.trace.events.get(*d as usize) {
                time = time.max(e.time);
            }
        }
        time += 1;
        for &i in &procs {
            self.procs[i].clock = time;
            self.procs[i].last_step = Some(self.steps);
        }
        ev.time = time;
        ev.deps = deps;
        self.trace.events.push(ev);
        self.steps += 1;
        Ok(())
    }

    /// Logical time the transition would be stamped with.
    fn prospective_time(&self, t: &Transition) -> u64 {
        let mut time = t.procs().iter().map(|&i| self.procs[i].clock).max().unwrap_or(0);
        if let Transition::Local { proc } = t {
            let p = &self.procs[*proc];
            let msg = match p.head() {
                Some(Instr::Recv { sess, label, .. }) | Some(Instr::QRecv { sess, label, .. }) => self
                    .heap
                    .get(&(sess.clone(), p.loc))
                    .and_then(|v| v.iter().find(|e| &e.label == label))
                    .map(|e| e.step),
                _ => None,
            };
            if let Some(s) = msg {
                time = time.max(self.trace.events[s as usize].time);
            }
        }
        time + 1
    }

    /// Human-readable snapshot of what each unfinished process is about to do.
    pub fn snapshot(&self) -> Vec<(usize, String, Pid, String)> {
        self.procs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.head_substituted().map(|h| (i, p.name.clone(), p.loc, print_instr(&h))))
            .collect()
    }
}

/// Chooses among enabled transitions.
#[derive(Clone, Debug)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy) -> Self {
        let seed = match &policy {
            SchedulerPolicy::SeededRandom { seed } => *seed,
            _ => 0,
        };
        Scheduler { policy, cursor: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn choose(&mut self, state: &RuntimeState, enabled: &[Transition]) -> Option<Transition> {
        if enabled.is_empty() {
            return None;
        }
        let lead = |t: &Transition| *t.procs().iter().min().expect("nonempty");
        let t = match &self.policy {
            SchedulerPolicy::RoundRobin => {
                let n = state.procs.len().max(1);
                let key = |t: &Transition| (lead(t) + n - self.cursor % n) % n;
                let t = enabled.iter().min_by_key(|t| key(t)).expect("nonempty").clone();
                self.cursor = lead(&t) + 1;
                t
            }
            SchedulerPolicy::SeededRandom { .. } => enabled[self.rng.gen_range(0..enabled.len())].clone(),
            SchedulerPolicy::InOrderPerProcess => enabled.iter().min_by_key(|t| lead(t)).expect("nonempty").clone(),
            SchedulerPolicy::DependencyResolved => enabled
                .iter()
                .min_by_key(|t| (state.prospective_time(t), lead(t)))
                .expect("nonempty")
                .clone(),
        };
        Some(t)
    }
}

/// Run until termination, a stuck state, or the step budget runs out.
pub fn run(sys: &System, arch: &ArchConfig, cfg: &RunConfig) -> Result<RunOutcome, RuntimeError> {
    let mut state = RuntimeState::new(sys, arch, cfg)?;
    let fuel = cfg.fuel.unwrap_or(10 * sys.instr_count() as u64 + 10);
    run_from(&mut state, &cfg.policy, fuel)?;
    Ok(finish(state, fuel))
}

fn run_from(state: &mut RuntimeState, policy: &SchedulerPolicy, fuel: u64) -> Result<(), RuntimeError> {
    let mut sched = Scheduler::new(policy.clone());
    while state.steps < fuel {
        let enabled = state.enabled_transitions();
        match sched.choose(state, &enabled) {
            Some(t) => state.step_unchecked(&t)?,
            None => break,
        }
    }
    Ok(())
}

/// Continue an existing state under a policy.
pub fn resume(mut state: RuntimeState, policy: &SchedulerPolicy, fuel: u64) -> Result<RunOutcome, RuntimeError> {
    run_from(&mut state, policy, fuel)?;
    Ok(finish(state, fuel))
}

fn finish(state: RuntimeState, fuel: u64) -> RunOutcome {
    if state.is_terminated() {
        RunOutcome::Completed { state: Box::new(state) }
    } else if state.enabled_transitions().is_empty() {
        let report = classify_stuck(&state).expect("no transition enabled and S is not 0");
        RunOutcome::Stuck { report, state: Box::new(state) }
    } else {
        debug_assert!(state.steps >= fuel);
        RunOutcome::FuelExhausted { state: Box::new(state) }
    }
}

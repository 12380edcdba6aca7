use super::{AnalysisError, CostModel};
use crate::arch::ArchConfig;
use crate::ast::{Expr, Instr, Pid, System, Value};
use crate::runtime::expand_system;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Gate1,
    Gate2,
    Measure,
    Send { key: u32 },
    Recv { key: u32 },
    GenEnt { peer: Pid, label: u32 },
    Free,
    Zero,
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub proc: u32,
    pub kind: Kind,
    pub cost: u64,
    /// Variable written by a genEnt or released by a free.
    pub var: Option<u32>,
}

/// Flattened program: nodes plus static per-process dependencies.
pub(crate) struct Graph {
    pub nodes: Vec<Node>,
    pub preds: Vec<Vec<u32>>,
    pub locs: Vec<Pid>,
}

struct Interner(HashMap<String, u32>);

impl Interner {
    fn id(&mut self, s: &str) -> u32 {
        let n = self.0.len() as u32;
        *self.0.entry(s.to_string()).or_insert(n)
    }
}

struct Builder<'a> {
    cost: &'a CostModel,
    nodes: Vec<Node>,
    preds: Vec<Vec<u32>>,
    keys: Interner,
    labels: Interner,
}

struct ProcCtx {
    proc: u32,
    loc: Pid,
    vars: Interner,
    last_write: HashMap<u32, u32>,
    readers: HashMap<u32, Vec<u32>>,
}

fn expr_vars(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Val(Value::Var(v)) => out.push(v.clone()),
        Expr::Val(Value::Qubit(q)) => out.push(q.to_string()),
        Expr::Val(Value::Bit(_)) => {}
        Expr::And(a, b) | Expr::Xor(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Not(a) => expr_vars(a, out),
    }
}

fn names(es: &[&Expr]) -> Vec<String> {
    let mut v = Vec::new();
    for e in es {
        expr_vars(e, &mut v);
    }
    v
}

impl<'a> Builder<'a> {
    #[allow(clippy::too_many_arguments)]
    fn node(&mut self, cx: &mut ProcCtx, kind: Kind, cost: u64, reads: &[String], writes: &[String], var: Option<&str>) {
        let id = self.nodes.len() as u32;
        let w: Vec<u32> = writes.iter().map(|s| cx.vars.id(s)).collect();
        let r: Vec<u32> = reads.iter().map(|s| cx.vars.id(s)).filter(|x| !w.contains(x)).collect();
        let mut d: Vec<u32> = Vec::new();
        for x in &r {
            if let Some(&p) = cx.last_write.get(x) {
                d.push(p);
            }
        }
        for x in &w {
            if let Some(&p) = cx.last_write.get(x) {
                d.push(p);
            }
            if let Some(rs) = cx.readers.get(x) {
                d.extend(rs.iter().copied());
            }
        }
        d.sort_unstable();
        d.dedup();
        for x in r {
            cx.readers.entry(x).or_default().push(id);
        }
        for x in &w {
            cx.last_write.insert(*x, id);
            cx.readers.remove(x);
        }
        let var = var.map(|s| cx.vars.id(s));
        self.nodes.push(Node { proc: cx.proc, kind, cost, var });
        self.preds.push(d);
    }

    // returns false once a `stop` has been reached
    fn block(&mut self, cx: &mut ProcCtx, body: &[Instr], guard: &[String]) -> bool {
        let c = self.cost.for_proc(cx.loc);
        for i in body {
            let mut reads: Vec<String> = guard.to_vec();
            match i {
                Instr::Stop => return false,
                Instr::Open { .. } | Instr::Close { .. } => self.node(cx, Kind::Zero, 0, &reads, &[], None),
                Instr::Init { var } => self.node(cx, Kind::Zero, c.init_ns, &reads, std::slice::from_ref(var), None),
                Instr::Assign { var, expr } => {
                    reads.extend(names(&[expr]));
                    self.node(cx, Kind::Zero, 0, &reads, std::slice::from_ref(var), None)
                }
                Instr::Gate { gate, args } => {
                    let ws = names(&args.iter().collect::<Vec<_>>());
                    let (k, cost) = if gate.arity() == 1 { (Kind::Gate1, c.single_qubit_ns) } else { (Kind::Gate2, c.two_qubit_ns) };
                    self.node(cx, k, cost, &reads, &ws, None)
                }
                Instr::Measure { var, args } => {
                    let mut ws = names(&args.iter().collect::<Vec<_>>());
                    ws.push(var.clone());
                    self.node(cx, Kind::Measure, c.measure_ns, &reads, &ws, None)
                }
                Instr::GenEnt { var, peer, label } => {
                    let l = self.labels.id(label);
                    self.node(cx, Kind::GenEnt { peer: *peer, label: l }, 0, &reads, std::slice::from_ref(var), Some(var))
                }
                Instr::EntSwap { out1, out2, a, b } => {
                    let (na, nb) = (names(&[a]), names(&[b]));
                    let both: Vec<String> = na.iter().chain(nb.iter()).cloned().collect();
                    self.node(cx, Kind::Gate2, c.two_qubit_ns, &reads, &both, None);
                    self.node(cx, Kind::Gate1, c.single_qubit_ns, &reads, &na, None);
                    let mut w1 = na.clone();
                    w1.push(out1.clone());
                    self.node(cx, Kind::Measure, c.measure_ns, &reads, &w1, None);
                    let mut w2 = nb.clone();
                    w2.push(out2.clone());
                    self.node(cx, Kind::Measure, c.measure_ns, &reads, &w2, None);
                    for n in [&na, &nb] {
                        self.node(cx, Kind::Free, c.free_ns, &reads, n, n.first().map(|s| s.as_str()));
                    }
                }
                Instr::If { cond, then, .. } => {
                    reads.extend(names(&[cond]));
                    if !self.block(cx, then, &reads) {
                        return false;
                    }
                }
                Instr::Send { sess, peer, label, expr } => {
                    reads.extend(names(&[expr]));
                    let key = self.keys.id(&format!("{}\u{0}{}\u{0}{}", sess, peer, label));
                    self.node(cx, Kind::Send { key }, c.send_ns, &reads, &[], None)
                }
                Instr::Recv { sess, label, var } => {
                    let key = self.keys.id(&format!("{}\u{0}{}\u{0}{}", sess, cx.loc, label));
                    self.node(cx, Kind::Recv { key }, c.recv_ns, &reads, std::slice::from_ref(var), None)
                }
                Instr::Free { arg } => {
                    let ws = names(&[arg]);
                    let v = ws.first().cloned();
                    self.node(cx, Kind::Free, c.free_ns, &reads, &ws, v.as_deref())
                }
                Instr::QSend { .. } | Instr::QRecv { .. } | Instr::RcxC { .. } | Instr::RcxT { .. } => {
                    unreachable!("derived operations are expanded before analysis")
                }
            }
        }
        true
    }
}

pub(crate) fn build(sys: &System, cost: &CostModel) -> Graph {
    let sys = expand_system(sys);
    let mut b = Builder {
        cost,
        nodes: Vec::new(),
        preds: Vec::new(),
        keys: Interner(HashMap::new()),
        labels: Interner(HashMap::new()),
    };
    for (k, p) in sys.procs.iter().enumerate() {
        let mut cx = ProcCtx {
            proc: k as u32,
            loc: p.loc,
            vars: Interner(HashMap::new()),
            last_write: HashMap::new(),
            readers: HashMap::new(),
        };
        b.block(&mut cx, &p.body, &[]);
    }
    Graph { nodes: b.nodes, preds: b.preds, locs: sys.procs.iter().map(|p| p.loc).collect() }
}

/// Outcome of the timing simulation.
pub(crate) struct Schedule {
    pub end: Vec<u64>,
    /// Dynamic edges: comm reuse, genEnt pairing, message delivery.
    pub extra: Vec<Vec<u32>>,
    /// For a genEnt pair, the node that carries the depth weight.
    pub pair_first: Vec<Option<u32>>,
}

struct Pools {
    /// (owner, peer) link-side pools and processor-wide pools, as sets of slot indices.
    side: HashMap<(Pid, Pid), BTreeSet<u32>>,
    wide: HashMap<Pid, BTreeSet<u32>>,
    slot_peer: Vec<Option<Pid>>,
    slot_owner: Vec<Pid>,
    freed_by: Vec<Option<u32>>,
}

impl Pools {
    fn candidate(&self, owner: Pid, peer: Pid) -> Option<u32> {
        let a = self.side.get(&(owner, peer)).and_then(|s| s.first().copied());
        let b = self.wide.get(&owner).and_then(|s| s.first().copied());
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }

    fn take(&mut self, slot: u32) {
        let owner = self.slot_owner[slot as usize];
        match self.slot_peer[slot as usize] {
            Some(p) => self.side.get_mut(&(owner, p)).map(|s| s.remove(&slot)),
            None => self.wide.get_mut(&owner).map(|s| s.remove(&slot)),
        };
    }

    fn give(&mut self, slot: u32) {
        let owner = self.slot_owner[slot as usize];
        match self.slot_peer[slot as usize] {
            Some(p) => self.side.entry((owner, p)).or_default().insert(slot),
            None => self.wide.entry(owner).or_default().insert(slot),
        };
    }
}

pub(crate) fn simulate(g: &Graph, arch: &ArchConfig, cost: &CostModel) -> Result<Schedule, AnalysisError> {
    let n = g.nodes.len();
    for &l in &g.locs {
        if arch.processor(l).is_none() {
            return Err(AnalysisError::UnknownParticipant(l));
        }
    }
    let layout = arch.layout();
    let mut pools = Pools {
        side: HashMap::new(),
        wide: HashMap::new(),
        slot_peer: layout.comm.iter().map(|s| s.peer).collect(),
        slot_owner: layout.comm.iter().map(|s| s.owner).collect(),
        freed_by: vec![None; layout.comm.len()],
    };
    for k in 0..layout.comm.len() as u32 {
        pools.give(k);
    }

    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut cnt: Vec<u32> = vec![0; n];
    for (i, ps) in g.preds.iter().enumerate() {
        cnt[i] = ps.len() as u32;
        for &p in ps {
            succ[p as usize].push(i as u32);
        }
    }

    // genEnt queues per (process, peer location), in program order
    let mut link_id: HashMap<(u32, Pid), usize> = HashMap::new();
    let mut links: Vec<(u32, Pid, Vec<u32>, usize)> = Vec::new();
    let mut link_of: Vec<usize> = vec![usize::MAX; n];
    for (i, nd) in g.nodes.iter().enumerate() {
        if let Kind::GenEnt { peer, .. } = nd.kind {
            let id = *link_id.entry((nd.proc, peer)).or_insert_with(|| {
                links.push((nd.proc, peer, Vec::new(), 0));
                links.len() - 1
            });
            links[id].2.push(i as u32);
            link_of[i] = id;
        }
    }
    let mut procs_at: HashMap<Pid, Vec<u32>> = HashMap::new();
    for (k, &l) in g.locs.iter().enumerate() {
        procs_at.entry(l).or_default().push(k as u32);
    }

    let mut end = vec![u64::MAX; n];
    let mut extra: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pair_first: Vec<Option<u32>> = vec![None; n];
    let mut ent_ready = vec![false; n];
    let mut binding: HashMap<(u32, u32), u32> = HashMap::new();
    let mut msgs: HashMap<u32, VecDeque<u32>> = HashMap::new();
    let mut waiting: HashMap<u32, VecDeque<u32>> = HashMap::new();
    let mut events: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut now = 0u64;
    let mut done = 0usize;

    let mut ready: Vec<u32> = (0..n as u32).rev().filter(|&i| cnt[i as usize] == 0).collect();
    let mut link_work: Vec<usize> = Vec::new();

    loop {
        // drain ready nodes and link retries at the current time
        while !ready.is_empty() || !link_work.is_empty() {
            while let Some(i) = ready.pop() {
                let nd = &g.nodes[i as usize];
                match nd.kind {
                    Kind::GenEnt { .. } => {
                        ent_ready[i as usize] = true;
                        link_work.push(link_of[i as usize]);
                    }
                    Kind::Recv { key } => match msgs.get_mut(&key).and_then(|q| q.pop_front()) {
                        Some(sender) => {
                            extra[i as usize].push(sender);
                            events.push(Reverse((now + nd.cost, i)));
                        }
                        None => waiting.entry(key).or_default().push_back(i),
                    },
                    _ => {
                        events.push(Reverse((now + nd.cost, i)));
                    }
                }
            }
            while let Some(l) = link_work.pop() {
                let (pa, peer, ref q, head) = links[l];
                if head >= q.len() {
                    continue;
                }
                let i = q[head];
                if !ent_ready[i as usize] {
                    continue;
                }
                let la = g.locs[pa as usize];
                let label = match g.nodes[i as usize].kind {
                    Kind::GenEnt { label, .. } => label,
                    _ => unreachable!(),
                };
                let mut partner: Option<(usize, u32)> = None;
                for &b in procs_at.get(&peer).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if b == pa {
                        continue;
                    }
                    if let Some(&m) = link_id.get(&(b, la)) {
                        let (_, _, ref qb, hb) = links[m];
                        if hb < qb.len() {
                            let j = qb[hb];
                            if ent_ready[j as usize]
                                && matches!(g.nodes[j as usize].kind, Kind::GenEnt { label: l2, .. } if l2 == label)
                            {
                                partner = Some((m, j));
                                break;
                            }
                        }
                    }
                }
                let (m, j) = match partner {
                    Some(x) => x,
                    None => continue,
                };
                let (sa, sb) = match (pools.candidate(la, peer), pools.candidate(peer, la)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => continue,
                };
                pools.take(sa);
                pools.take(sb);
                // lower participant id carries the pair
                let (first, second) = if (la, pa) < (peer, g.nodes[j as usize].proc) { (i, j) } else { (j, i) };
                for (x, s) in [(i, sa), (j, sb)] {
                    if let Some(f) = pools.freed_by[s as usize] {
                        extra[x as usize].push(f);
                    }
                    let nd = &g.nodes[x as usize];
                    binding.insert((nd.proc, nd.var.expect("genEnt binds a variable")), s);
                }
                extra[second as usize].push(first);
                pair_first[second as usize] = Some(first);
                pair_first[first as usize] = Some(first);
                let c = cost.for_proc(la).genent_ns.max(cost.for_proc(peer).genent_ns);
                for x in [i, j] {
                    events.push(Reverse((now + c, x)));
                }
                links[l].3 += 1;
                links[m].3 += 1;
                link_work.push(l);
                link_work.push(m);
            }
        }
        let Reverse((t, i)) = match events.pop() {
            Some(e) => e,
            None => break,
        };
        now = t;
        let mut batch = vec![i];
        while let Some(Reverse((t2, _))) = events.peek() {
            if *t2 != now {
                break;
            }
            let Reverse((_, k)) = events.pop().expect("peeked");
            batch.push(k);
        }
        batch.sort_unstable();
        for i in batch {
            let iu = i as usize;
            end[iu] = now;
            done += 1;
            let nd = &g.nodes[iu];
            match nd.kind {
                Kind::Send { key } => match waiting.get_mut(&key).and_then(|q| q.pop_front()) {
                    Some(r) => {
                        extra[r as usize].push(i);
                        events.push(Reverse((now + g.nodes[r as usize].cost, r)));
                    }
                    None => msgs.entry(key).or_default().push_back(i),
                },
                Kind::Free => {
                    if let Some(s) = nd.var.and_then(|v| binding.remove(&(nd.proc, v))) {
                        pools.give(s);
                        pools.freed_by[s as usize] = Some(i);
                        let owner = pools.slot_owner[s as usize];
                        for &b in procs_at.get(&owner).map(|v| v.as_slice()).unwrap_or(&[]) {
                            match pools.slot_peer[s as usize] {
                                Some(p) => {
                                    if let Some(&l) = link_id.get(&(b, p)) {
                                        link_work.push(l);
                                    }
                                }
                                None => {
                                    for (l, lk) in links.iter().enumerate() {
                                        if lk.0 == b {
                                            link_work.push(l);
                                        }
                                    }
                                }
                            }
                        }
                        // partners on the other side may have been waiting on this pool too
                        if let Some(p) = pools.slot_peer[s as usize] {
                            for &b in procs_at.get(&p).map(|v| v.as_slice()).unwrap_or(&[]) {
                                if let Some(&l) = link_id.get(&(b, owner)) {
                                    link_work.push(l);
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
            for &s in &succ[iu] {
                cnt[s as usize] -= 1;
                if cnt[s as usize] == 0 {
                    ready.push(s);
                }
            }
        }
        // ready nodes are processed lowest index first
        ready.sort_unstable_by(|a, b| b.cmp(a));
    }
    if done != n {
        let blocked: Vec<u32> = (0..n as u32).filter(|&i| end[i as usize] == u64::MAX).take(8).collect();
        return Err(AnalysisError::Stuck { completed: done, total: n, first_blocked: blocked });
    }
    Ok(Schedule { end, extra, pair_first })
}

/// Longest weighted paths over static and dynamic edges.
pub(crate) fn depths(g: &Graph, s: &Schedule) -> Result<(u64, u64), AnalysisError> {
    let n = g.nodes.len();
    let mut preds: Vec<Vec<u32>> = (0..n).map(|i| g.preds[i].iter().chain(s.extra[i].iter()).copied().collect()).collect();
    // a genEnt pair counts once: the carrier inherits its partner's predecessors
    for i in 0..n {
        if let Some(f) = s.pair_first[i] {
            if f as usize != i {
                let extra: Vec<u32> = preds[i].iter().copied().filter(|&p| p != f).collect();
                preds[f as usize].extend(extra);
            }
        }
    }
    let mut indeg = vec![0u32; n];
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, ps) in preds.iter().enumerate() {
        indeg[i] = ps.len() as u32;
        for &p in ps {
            succ[p as usize].push(i as u32);
        }
    }
    let mut ed = vec![0u64; n];
    let mut cd = vec![0u64; n];
    let mut q: VecDeque<u32> = (0..n as u32).filter(|&i| indeg[i as usize] == 0).collect();
    let mut seen = 0;
    while let Some(i) = q.pop_front() {
        seen += 1;
        let iu = i as usize;
        let be = preds[iu].iter().map(|&p| ed[p as usize]).max().unwrap_or(0);
        let bc = preds[iu].iter().map(|&p| cd[p as usize]).max().unwrap_or(0);
        let kind = g.nodes[iu].kind;
        ed[iu] = be + matches!(kind, Kind::GenEnt { .. } if s.pair_first[iu] == Some(i)) as u64;
        cd[iu] = bc + matches!(kind, Kind::Send { .. } | Kind::Recv { .. }) as u64;
        for &x in &succ[iu] {
            indeg[x as usize] -= 1;
            if indeg[x as usize] == 0 {
                q.push_back(x);
            }
        }
    }
    if seen != n {
        return Err(AnalysisError::CyclicDependencies);
    }
    Ok((ed.into_iter().max().unwrap_or(0), cd.into_iter().max().unwrap_or(0)))
}

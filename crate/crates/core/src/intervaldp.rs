//! Dynamic program over intervals of roots lying on a cycle.
//!
//! Roots `r_0 .. r_{k-1}` are numbered in cycle order. An entry of the table
//! for the interval `[a, a + len)` and vertex `v` is the cheapest tree that
//! contains `v`, touches exactly the roots of the interval, and is built by
//! extending along real edges, gluing two trees at a shared vertex, or
//! joining two trees through a virtual edge. Roots inside the interval are
//! charged their final status; the two boundary roots keep their status in
//! the key and are charged once they stop being on the boundary.
//!
//! A hanging entry is a tree plus one more real edge `u x`, filed under `x`.
//! Its interval counts only the roots of the tree, so it can be glued at `x`
//! onto a tree that already holds the roots of `x`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::cycle::RootCycle;
use crate::graph::{EdgeId, Vertex};
use crate::instance::{Instance, Root, Solution, VeStatus};
use crate::trace::{assemble, TraceError, Witness};
use crate::weight::{Scalar, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpError {
    #[error("need at least three roots on the cycle, got {0}")]
    TooFewRoots(usize),
    #[error("a terminal is an endpoint of a virtual edge")]
    NotNormalized,
    #[error("roots of vertex {0} are not consecutive on the cycle")]
    RootsNotConsecutive(Vertex),
    #[error("no feasible tree")]
    Infeasible,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Size counters of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DpStats {
    pub roots: usize,
    pub intervals: usize,
    pub dp_entries: usize,
}

/// Status of a root as seen from a partial tree: `0` for a terminal, the
/// position in `VeStatus::ALL` for a virtual edge.
type St = u8;

const END_U: St = 0;
const END_V: St = 1;
const CONNECT: St = 2;
const DISCONNECT: St = 3;

/// Endpoint bits (`1` = u, `2` = v) and the used flag of a virtual status.
fn decode(s: St) -> (u8, bool) {
    match s {
        END_U => (1, false),
        END_V => (2, false),
        CONNECT => (3, true),
        _ => (3, false),
    }
}

fn encode(bits: u8, used: bool) -> St {
    match (bits, used) {
        (1, _) => END_U,
        (2, _) => END_V,
        (_, true) => CONNECT,
        _ => DISCONNECT,
    }
}

/// Status of a root touched by two vertex-disjoint-but-for-one-vertex trees.
fn merge(virt: bool, a: St, b: St) -> Option<St> {
    if !virt {
        return Some(0);
    }
    let (ba, ua) = decode(a);
    let (bb, ub) = decode(b);
    if ua && ub {
        return None;
    }
    Some(encode(ba | bb, ua || ub))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Ref {
    iv: u32,
    st: u32,
    hang: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Back {
    Unset,
    Seed,
    /// Taken over from the hanging entry with the same index.
    FromHang,
    Glue(Ref, Ref),
    Join(Ref, Ref, u32),
}

/// Where the roots of one operand sit relative to a root of the result.
#[derive(Clone, Copy, Debug)]
struct Slot {
    root: usize,
    /// `Some(false)` start, `Some(true)` end of the first operand.
    a: Option<bool>,
    b: Option<bool>,
    /// `Some(false)` start, `Some(true)` end of the result.
    out: Option<bool>,
}

/// How two intervals combine into a third (or the whole cycle).
#[derive(Clone, Debug)]
struct Plan {
    a: usize,
    b: usize,
    /// Result interval id, `None` for the whole cycle.
    out: Option<usize>,
    slots: Vec<Slot>,
}

#[derive(Clone, Copy, Debug)]
struct Iv {
    start: usize,
    len: usize,
    nss: usize,
    nse: usize,
}

struct Table<S> {
    val: Vec<Weight<S>>,
    back: Vec<Back>,
    hval: Vec<Weight<S>>,
    /// Hanging entry: DP state it extends and the real edge used.
    hback: Vec<(u32, u32)>,
}

struct Dp<'a, S> {
    inst: &'a Instance<S>,
    n: usize,
    k: usize,
    /// Virtual edge behind each root, `None` for terminals.
    virt: Vec<Option<usize>>,
    /// Roots touched by each vertex as `(start, len)`.
    seed: Vec<Option<(usize, usize)>>,
    ivs: Vec<Iv>,
    tables: Vec<Table<S>>,
    heap: BinaryHeap<Reverse<(Weight<S>, u32)>>,
    best: Weight<S>,
    best_back: Back,
}

impl<'a, S: Scalar> Dp<'a, S> {
    fn iv_id(&self, start: usize, len: usize) -> usize {
        (start % self.k) * (self.k - 1) + len - 1
    }

    fn index(&self, iv: usize, v: Vertex, ss: usize, se: usize) -> usize {
        let i = &self.ivs[iv];
        if i.len == 1 {
            v * i.nss + ss
        } else {
            (v * i.nss + ss) * i.nse + se
        }
    }

    /// `(v, ss, se)` of a state index.
    fn unpack(&self, iv: usize, st: usize) -> (Vertex, usize, usize) {
        let i = &self.ivs[iv];
        if i.len == 1 {
            (st / i.nss, st % i.nss, st % i.nss)
        } else {
            (st / (i.nss * i.nse), (st / i.nse) % i.nss, st % i.nse)
        }
    }

    fn states_at(&self, iv: usize, v: Vertex) -> std::ops::Range<usize> {
        let i = &self.ivs[iv];
        let per = if i.len == 1 { i.nss } else { i.nss * i.nse };
        v * per..(v + 1) * per
    }

    fn end(&self, iv: usize) -> usize {
        let i = &self.ivs[iv];
        (i.start + i.len - 1) % self.k
    }

    fn charge(&self, root: usize, st: St) -> Weight<S> {
        match self.virt[root] {
            None => Weight::zero(),
            Some(e) => self.inst.virtual_edges[e].weight(VeStatus::ALL[st as usize]),
        }
    }

    /// Plan for the operands `a`, `b` and result `out` (`None`: all roots).
    fn plan(&self, a: usize, b: usize, out: Option<usize>) -> Plan {
        let ends = |iv: usize| (self.ivs[iv].start, self.end(iv));
        let (as_, ae) = ends(a);
        let (bs, be) = ends(b);
        let mut roots = vec![as_, ae, bs, be];
        roots.sort_unstable();
        roots.dedup();
        let side = |r: usize, (s, e): (usize, usize)| {
            if r == s {
                Some(false)
            } else if r == e {
                Some(true)
            } else {
                None
            }
        };
        let slots = roots
            .into_iter()
            .map(|root| Slot {
                root,
                a: side(root, (as_, ae)),
                b: side(root, (bs, be)),
                out: out.and_then(|o| side(root, ends(o))),
            })
            .collect();
        Plan { a, b, out, slots }
    }

    /// Boundary statuses and charge of combining the given statuses.
    /// `join` names a shared root crossed by its virtual edge.
    fn eval(&self, plan: &Plan, sa: (usize, usize), sb: (usize, usize), join: Option<usize>) -> Option<(usize, usize, Weight<S>)> {
        let mut out = (0, 0);
        let mut charge = Weight::zero();
        for slot in &plan.slots {
            let pa = slot.a.map(|e| if e { sa.1 } else { sa.0 } as St);
            let pb = slot.b.map(|e| if e { sb.1 } else { sb.0 } as St);
            let virt = self.virt[slot.root].is_some();
            let st = match (pa, pb) {
                (Some(x), Some(y)) if join == Some(slot.root) => {
                    if (x, y) == (END_U, END_V) || (x, y) == (END_V, END_U) {
                        CONNECT
                    } else {
                        return None;
                    }
                }
                (Some(x), Some(y)) => merge(virt, x, y)?,
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => unreachable!("slot roots are operand endpoints"),
            };
            match slot.out {
                Some(false) => {
                    out.0 = st as usize;
                    if plan.out.is_some_and(|o| self.ivs[o].len == 1) {
                        out.1 = st as usize;
                    }
                }
                Some(true) => out.1 = st as usize,
                None => {
                    charge = charge + self.charge(slot.root, st);
                    if charge.is_infinite() {
                        return None;
                    }
                }
            }
        }
        Some((out.0, out.1, charge))
    }
}

struct Cand<S> {
    iv: Option<usize>,
    st: usize,
    val: Weight<S>,
    back: Back,
}

impl<S: Scalar> Dp<'_, S> {
    fn value(&self, iv: usize, st: usize, hang: bool) -> Weight<S> {
        let t = &self.tables[iv];
        if hang {
            t.hval[st]
        } else {
            t.val[st]
        }
    }

    fn finite_states(&self, iv: usize, v: Vertex, hang: bool) -> Vec<usize> {
        self.states_at(iv, v).filter(|&st| self.value(iv, st, hang).is_finite()).collect()
    }

    /// Glues operand states at their common vertex.
    fn glue(&self, plan: &Plan, (sa, ha): (&[usize], bool), (sb, hb): (&[usize], bool), out: &mut Vec<Cand<S>>) {
        for &x in sa {
            let (w, xs, xe) = self.unpack(plan.a, x);
            let vx = self.value(plan.a, x, ha);
            for &y in sb {
                let (_, ys, ye) = self.unpack(plan.b, y);
                let Some((os, oe, charge)) = self.eval(plan, (xs, xe), (ys, ye), None) else {
                    continue;
                };
                let val = vx + self.value(plan.b, y, hb) + charge;
                let back = Back::Glue(
                    Ref { iv: plan.a as u32, st: x as u32, hang: ha },
                    Ref { iv: plan.b as u32, st: y as u32, hang: hb },
                );
                self.emit(plan, w, os, oe, val, back, out);
            }
        }
    }

    /// Joins a tree at `p` and a tree at `q` through the virtual edge of
    /// the shared root `r`, where `p q` is that edge.
    fn join(&self, plan: &Plan, r: usize, sa: &[usize], sb: &[usize], out: &mut Vec<Cand<S>>) {
        let e = self.virt[r].expect("virtual root");
        let edge = &self.inst.virtual_edges[e];
        let slot = plan.slots.iter().find(|s| s.root == r).expect("shared root");
        for &x in sa {
            let (p, xs, xe) = self.unpack(plan.a, x);
            let want = if p == edge.u { END_U } else { END_V };
            if (if slot.a == Some(true) { xe } else { xs }) as St != want {
                continue;
            }
            let vx = self.value(plan.a, x, false);
            for &y in sb {
                let (q, ys, ye) = self.unpack(plan.b, y);
                let Some((os, oe, charge)) = self.eval(plan, (xs, xe), (ys, ye), Some(r)) else {
                    continue;
                };
                let val = vx + self.value(plan.b, y, false) + charge;
                let back = Back::Join(
                    Ref { iv: plan.a as u32, st: x as u32, hang: false },
                    Ref { iv: plan.b as u32, st: y as u32, hang: false },
                    e as u32,
                );
                self.emit(plan, p, os, oe, val, back, out);
                self.emit(plan, q, os, oe, val, back, out);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(&self, plan: &Plan, w: Vertex, os: usize, oe: usize, val: Weight<S>, back: Back, out: &mut Vec<Cand<S>>) {
        if val.is_infinite() {
            return;
        }
        let st = plan.out.map_or(0, |o| self.index(o, w, os, oe));
        out.push(Cand { iv: plan.out, st, val, back });
    }

    /// All operand pairs of two fixed tables, in both roles.
    fn combine_tables(&self, plan: &Plan, out: &mut Vec<Cand<S>>) {
        let flipped = self.plan(plan.b, plan.a, plan.out);
        for w in 0..self.n {
            let da = self.finite_states(plan.a, w, false);
            let hb = self.finite_states(plan.b, w, true);
            self.glue(plan, (&da, false), (&hb, true), out);
            let db = self.finite_states(plan.b, w, false);
            let ha = self.finite_states(plan.a, w, true);
            self.glue(&flipped, (&db, false), (&ha, true), out);
        }
        for slot in &plan.slots {
            let (r, shared) = (slot.root, slot.a.is_some() && slot.b.is_some());
            let Some(e) = self.virt[r].filter(|_| shared) else {
                continue;
            };
            let edge = &self.inst.virtual_edges[e];
            for (p, q) in [(edge.u, edge.v), (edge.v, edge.u)] {
                let sa = self.finite_states(plan.a, p, false);
                let sb = self.finite_states(plan.b, q, false);
                self.join(plan, r, &sa, &sb, out);
            }
        }
    }

    fn apply(&mut self, cands: Vec<Cand<S>>) {
        for c in cands {
            match c.iv {
                None => {
                    if c.val < self.best {
                        self.best = c.val;
                        self.best_back = c.back;
                    }
                }
                Some(iv) => {
                    let t = &mut self.tables[iv];
                    if c.val < t.val[c.st] {
                        t.val[c.st] = c.val;
                        t.back[c.st] = c.back;
                        self.heap.push(Reverse((c.val, c.st as u32)));
                    }
                }
            }
        }
    }
}

impl<S: Scalar> Dp<'_, S> {
    fn seed_status(&self, x: Vertex, root: usize) -> usize {
        match self.virt[root] {
            None => 0,
            Some(e) if self.inst.virtual_edges[e].u == x => END_U as usize,
            Some(_) => END_V as usize,
        }
    }

    fn process(&mut self, u: usize) {
        let Iv { start: a, len, .. } = self.ivs[u];
        let k = self.k;
        let mut cands = Vec::new();
        for x in 0..self.n {
            if self.seed[x] == Some((a, len)) {
                let st = self.index(u, x, self.seed_status(x, a), self.seed_status(x, (a + len - 1) % k));
                cands.push(Cand { iv: Some(u), st, val: Weight::zero(), back: Back::Seed });
            }
        }
        for m in 1..len {
            let plan = self.plan(self.iv_id(a, m), self.iv_id(a + m, len - m), Some(u));
            self.combine_tables(&plan, &mut cands);
            if m >= 2 {
                let plan = self.plan(self.iv_id(a, m), self.iv_id(a + m - 1, len - m + 1), Some(u));
                self.combine_tables(&plan, &mut cands);
            }
        }
        self.apply(cands);
        self.close(u);
    }

    /// Dijkstra over the states of `u`: extensions along real edges and
    /// combinations whose other operand is a one-root table at an end of
    /// `u` (or `u` itself when it has at most two roots).
    fn close(&mut self, u: usize) {
        let Iv { start: a, len, .. } = self.ivs[u];
        let ends: Vec<usize> = if len == 1 { vec![a] } else { vec![a, (a + len - 1) % self.k] };
        let fixed: Vec<(usize, usize)> = if len == 1 { Vec::new() } else { ends.iter().map(|&r| (r, self.iv_id(r, 1))).collect() };
        let fixed_plans: Vec<(usize, Plan, Plan)> =
            fixed.iter().map(|&(r, f)| (r, self.plan(f, u, Some(u)), self.plan(u, f, Some(u)))).collect();
        let self_plan = (len <= 2).then(|| self.plan(u, u, Some(u)));
        let mut done = vec![false; self.tables[u].val.len()];
        while let Some(Reverse((d, st))) = self.heap.pop() {
            let st = st as usize;
            if done[st] || d != self.tables[u].val[st] {
                continue;
            }
            done[st] = true;
            let (v, ss, se) = self.unpack(u, st);
            let mut cands = Vec::new();
            for &e in self.inst.graph.incident(v) {
                let edge = self.inst.graph.edge(e);
                let x = edge.other(v);
                let h = d + edge.weight;
                let hs = self.index(u, x, ss, se);
                if h >= self.tables[u].hval[hs] {
                    continue;
                }
                self.tables[u].hval[hs] = h;
                self.tables[u].hback[hs] = (st as u32, e as u32);
                if self.seed[x].is_none() {
                    cands.push(Cand { iv: Some(u), st: hs, val: h, back: Back::FromHang });
                    continue;
                }
                for (_, to_u, _) in &fixed_plans {
                    let sa = self.finite_states(to_u.a, x, false);
                    self.glue(to_u, (&sa, false), (&[hs], true), &mut cands);
                }
                if let Some(p) = &self_plan {
                    let sa: Vec<usize> = self.states_at(u, x).filter(|&s| done[s]).collect();
                    self.glue(p, (&sa, false), (&[hs], true), &mut cands);
                }
            }
            for (r, _, from_u) in &fixed_plans {
                let sb = self.finite_states(from_u.b, v, true);
                self.glue(from_u, (&[st], false), (&sb, true), &mut cands);
                if let Some(q) = self.partner(*r, v) {
                    let sb = self.finite_states(from_u.b, q, false);
                    self.join(from_u, *r, &[st], &sb, &mut cands);
                }
            }
            if let Some(p) = &self_plan {
                let sb = self.finite_states(u, v, true);
                self.glue(p, (&[st], false), (&sb, true), &mut cands);
                for &r in &ends {
                    if let Some(q) = self.partner(r, v) {
                        let sb: Vec<usize> = self.states_at(u, q).filter(|&s| done[s]).collect();
                        self.join(p, r, &[st], &sb, &mut cands);
                        self.join(p, r, &sb, &[st], &mut cands);
                    }
                }
            }
            self.apply(cands);
        }
    }

    /// The other endpoint of the virtual edge of root `r`, if `v` is one.
    fn partner(&self, r: usize, v: Vertex) -> Option<Vertex> {
        let e = &self.inst.virtual_edges[self.virt[r]?];
        (e.u == v || e.v == v).then(|| e.other(v))
    }

    fn finish(&mut self) {
        let k = self.k;
        let mut cands = Vec::new();
        for a in 0..k {
            for m in 1..k {
                let j = self.iv_id(a, m);
                let mut others = vec![self.iv_id(a + m, k - m)];
                if m >= 2 {
                    others.push(self.iv_id(a + m - 1, k - m + 1));
                }
                if m >= 3 {
                    others.push(self.iv_id(a + m - 1, k - m + 2));
                }
                for i in others {
                    let plan = self.plan(j, i, None);
                    self.combine_tables(&plan, &mut cands);
                }
            }
        }
        self.apply(cands);
    }
}

impl<S: Scalar> Dp<'_, S> {
    fn witness(&self) -> Witness {
        let mut w = Witness::default();
        let mut stack: Vec<Back> = vec![self.best_back];
        let mut refs: Vec<Ref> = Vec::new();
        loop {
            if let Some(b) = stack.pop() {
                match b {
                    Back::Glue(x, y) => refs.extend([x, y]),
                    Back::Join(x, y, e) => {
                        w.virtual_used.insert(e as usize);
                        refs.extend([x, y]);
                    }
                    Back::Unset | Back::Seed | Back::FromHang => unreachable!("handled with their state"),
                }
            } else if let Some(r) = refs.pop() {
                let (iv, st) = (r.iv as usize, r.st as usize);
                let (v, _, _) = self.unpack(iv, st);
                w.vertices.insert(v);
                if r.hang {
                    let (from, e) = self.tables[iv].hback[st];
                    w.edges.insert(e as EdgeId);
                    refs.push(Ref { iv: r.iv, st: from, hang: false });
                    continue;
                }
                match self.tables[iv].back[st] {
                    Back::Seed => {}
                    Back::FromHang => refs.push(Ref { hang: true, ..r }),
                    b => stack.push(b),
                }
            } else {
                break;
            }
        }
        w
    }
}

/// Solves a normalized instance whose roots all lie on `rc`, in cycle order.
/// Correct when the instance has no rooted K4-minor and at least five roots.
pub fn solve_on_cycle<S: Scalar>(inst: &Instance<S>, rc: &RootCycle) -> Result<(Solution<S>, DpStats), DpError> {
    let n = inst.vertex_count();
    let k = rc.root_order.len();
    if k < 3 {
        return Err(DpError::TooFewRoots(k));
    }
    let mut virt = vec![None; k];
    let mut touched: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in rc.root_order.iter().enumerate() {
        match *r {
            Root::Terminal(t) => touched[t].push(i),
            Root::Virtual(e) => {
                virt[i] = Some(e);
                let edge = &inst.virtual_edges[e];
                touched[edge.u].push(i);
                touched[edge.v].push(i);
            }
        }
    }
    let mut seed = vec![None; n];
    for (x, rs) in touched.iter().enumerate() {
        seed[x] = match rs[..] {
            [] => None,
            [r] => Some((r, 1)),
            [r, s] if virt[r].is_none() || virt[s].is_none() => return Err(DpError::NotNormalized),
            [r, s] if (r + 1) % k == s => Some((r, 2)),
            [r, s] if (s + 1) % k == r => Some((s, 2)),
            _ => return Err(DpError::RootsNotConsecutive(x)),
        };
    }
    let ns = |r: usize| if virt[r].is_some() { 4 } else { 1 };
    let mut ivs = Vec::with_capacity(k * (k - 1));
    let mut tables = Vec::with_capacity(k * (k - 1));
    for start in 0..k {
        for len in 1..k {
            let (nss, nse) = (ns(start), if len == 1 { 1 } else { ns((start + len - 1) % k) });
            let size = n * nss * nse;
            ivs.push(Iv { start, len, nss, nse });
            tables.push(Table {
                val: vec![Weight::Infinite; size],
                back: vec![Back::Unset; size],
                hval: vec![Weight::Infinite; size],
                hback: vec![(0, 0); size],
            });
        }
    }
    let mut dp = Dp {
        inst,
        n,
        k,
        virt,
        seed,
        ivs,
        tables,
        heap: BinaryHeap::new(),
        best: Weight::Infinite,
        best_back: Back::Unset,
    };
    for len in 1..k {
        for start in 0..k {
            dp.process(dp.iv_id(start, len));
        }
    }
    dp.finish();
    if dp.best.is_infinite() {
        return Err(DpError::Infeasible);
    }
    let stats = DpStats {
        roots: k,
        intervals: dp.ivs.len(),
        dp_entries: dp.tables.iter().map(|t| t.val.iter().filter(|w| w.is_finite()).count()).sum(),
    };
    let sol = assemble(inst, &dp.witness())?;
    debug_assert!(sol.cost <= dp.best, "witness costs more than its entry");
    Ok((sol, stats))
}

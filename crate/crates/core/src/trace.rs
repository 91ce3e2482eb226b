//! Working instances with provenance, recursion traces and witness expansion.
//!
//! Every edge of a working instance remembers where it came from: an input
//! edge, a shortcut through a deleted region, a merge of parallel virtual
//! edges, or a fold of a solved side. Expanding a trace walks these records
//! back to an edge set of the input instance.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::dsu::UnionFind;
use crate::graph::{EdgeId, Multigraph, Vertex};
use crate::instance::{Instance, InstanceError, Solution, VeStatus, VirtualEdge};
use crate::weight::{Scalar, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace has no sub-solution for status {0:?}")]
    MissingStatus(VeStatus),
    #[error("expanded edge set does not span the covered vertices")]
    Disconnected,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone)]
pub enum RealOrigin {
    Base(EdgeId),
    /// A path through a deleted rootless region.
    Shortcut(Arc<[RealOrigin]>),
    /// The zero-weight helper edge of a disconnect side instance.
    Free,
}

#[derive(Debug, Clone)]
pub enum VirtOrigin<S> {
    Base(usize),
    /// Same edge with `u` and `v` exchanged.
    Reversed(Arc<VirtOrigin<S>>),
    /// Two parallel edges with the same orientation. The merged connect
    /// case uses `a` connected and `b` disconnected iff `connect_first`.
    Merged {
        a: Arc<VirtOrigin<S>>,
        b: Arc<VirtOrigin<S>>,
        connect_first: bool,
    },
    /// A parallel real edge folded in. The connect case is realized as
    /// `inner` disconnected plus `edge` iff `via_edge`.
    Absorbed {
        inner: Arc<VirtOrigin<S>>,
        edge: RealOrigin,
        via_edge: bool,
    },
    /// Summary of a solved side, one trace per status.
    Fold(Arc<FoldRecord<S>>),
}

#[derive(Debug, Clone)]
pub struct FoldRecord<S> {
    /// Indexed in `VeStatus::ALL` order; `None` when that case is infeasible.
    pub traces: [Option<Arc<RecursionTrace<S>>>; 4],
}

impl<S> FoldRecord<S> {
    pub fn trace(&self, s: VeStatus) -> Option<&Arc<RecursionTrace<S>>> {
        self.traces[status_index(s)].as_ref()
    }
}

pub fn status_index(s: VeStatus) -> usize {
    match s {
        VeStatus::EndU => 0,
        VeStatus::EndV => 1,
        VeStatus::Connect => 2,
        VeStatus::Disconnect => 3,
    }
}

/// An instance together with the provenance of its pieces.
#[derive(Debug, Clone)]
pub struct Work<S> {
    pub inst: Instance<S>,
    /// Local vertex to input vertex.
    pub vmap: Vec<Vertex>,
    pub real_origin: Vec<RealOrigin>,
    pub virt_origin: Vec<VirtOrigin<S>>,
    /// Cost already committed by virtual edges whose status is forced.
    pub offset: Weight<S>,
    pub forced: Vec<(VirtOrigin<S>, VeStatus)>,
}

impl<S: Scalar> Work<S> {
    pub fn from_instance(inst: Instance<S>) -> Self {
        Work {
            vmap: (0..inst.vertex_count()).collect(),
            real_origin: (0..inst.graph.edge_count()).map(RealOrigin::Base).collect(),
            virt_origin: (0..inst.virtual_edges.len()).map(VirtOrigin::Base).collect(),
            offset: Weight::zero(),
            forced: Vec::new(),
            inst,
        }
    }

    /// Keeps the given vertices; edges and virtual edges leaving them are dropped.
    pub fn restrict(&self, keep: &[bool]) -> Work<S> {
        let kept: Vec<Vertex> = (0..self.inst.vertex_count()).filter(|&x| keep[x]).collect();
        let mut b = Builder::new(self, &kept);
        for (id, e) in self.inst.graph.edges().iter().enumerate() {
            if keep[e.u] && keep[e.v] {
                b.add_real(e.u, e.v, e.weight, self.real_origin[id].clone());
            }
        }
        for (i, e) in self.inst.virtual_edges.iter().enumerate() {
            if keep[e.u] && keep[e.v] {
                b.add_virtual(e, self.virt_origin[i].clone());
            }
        }
        let terminals = self.inst.terminals.iter().copied().filter(|&t| keep[t]);
        let mut w = b.finish(terminals);
        w.offset = self.offset;
        w.forced = self.forced.clone();
        w
    }

    /// Side instance on `interior` plus the cut vertices in `kept_cut`.
    ///
    /// Real edges with both ends in the cut stay behind, as do virtual edges
    /// with no end in `interior`. A virtual edge from the interior to a cut
    /// vertex that is not kept has its status forced to the interior end:
    /// that end becomes a terminal and its weight moves into the offset.
    pub fn side(
        &self,
        interior: &[Vertex],
        kept_cut: &[Vertex],
        extra_terminals: &[Vertex],
        free_edge: bool,
    ) -> Work<S> {
        let n = self.inst.vertex_count();
        let mut inside = vec![false; n];
        for &x in interior {
            inside[x] = true;
        }
        let mut present = inside.clone();
        for &x in kept_cut {
            present[x] = true;
        }
        let kept: Vec<Vertex> = (0..n).filter(|&x| present[x]).collect();
        let mut b = Builder::new(self, &kept);
        for (id, e) in self.inst.graph.edges().iter().enumerate() {
            if present[e.u] && present[e.v] && (inside[e.u] || inside[e.v]) {
                b.add_real(e.u, e.v, e.weight, self.real_origin[id].clone());
            }
        }
        if free_edge {
            debug_assert_eq!(kept_cut.len(), 2);
            b.add_real(kept_cut[0], kept_cut[1], Weight::zero(), RealOrigin::Free);
        }
        let mut terminals: Vec<Vertex> = self.inst.terminals.iter().copied().filter(|&t| inside[t]).collect();
        terminals.extend_from_slice(extra_terminals);
        let mut offset = Weight::zero();
        let mut forced = Vec::new();
        for (i, e) in self.inst.virtual_edges.iter().enumerate() {
            if !inside[e.u] && !inside[e.v] {
                continue;
            }
            if present[e.u] && present[e.v] {
                b.add_virtual(e, self.virt_origin[i].clone());
            } else {
                let (end, status) = if present[e.u] { (e.u, VeStatus::EndU) } else { (e.v, VeStatus::EndV) };
                terminals.push(end);
                offset = offset + e.weight(status);
                forced.push((self.virt_origin[i].clone(), status));
            }
        }
        let mut w = b.finish(terminals);
        w.offset = offset;
        w.forced = forced;
        w
    }
}

struct Builder<'a, S> {
    parent: &'a Work<S>,
    index: Vec<usize>,
    kept: Vec<Vertex>,
    graph: Multigraph<S>,
    real_origin: Vec<RealOrigin>,
    virtual_edges: Vec<VirtualEdge<S>>,
    virt_origin: Vec<VirtOrigin<S>>,
}

impl<'a, S: Scalar> Builder<'a, S> {
    fn new(parent: &'a Work<S>, kept: &[Vertex]) -> Self {
        let mut index = vec![usize::MAX; parent.inst.vertex_count()];
        for (i, &x) in kept.iter().enumerate() {
            index[x] = i;
        }
        Builder {
            parent,
            index,
            kept: kept.to_vec(),
            graph: Multigraph::new(kept.len()),
            real_origin: Vec::new(),
            virtual_edges: Vec::new(),
            virt_origin: Vec::new(),
        }
    }

    fn add_real(&mut self, u: Vertex, v: Vertex, w: Weight<S>, origin: RealOrigin) {
        self.graph.add_edge(self.index[u], self.index[v], w).expect("kept endpoints");
        self.real_origin.push(origin);
    }

    fn add_virtual(&mut self, e: &VirtualEdge<S>, origin: VirtOrigin<S>) {
        let mut e = e.clone();
        e.u = self.index[e.u];
        e.v = self.index[e.v];
        self.virtual_edges.push(e);
        self.virt_origin.push(origin);
    }

    fn finish(self, terminals: impl IntoIterator<Item = Vertex>) -> Work<S> {
        let index = self.index;
        let terminals: Vec<Vertex> = terminals.into_iter().map(|t| index[t]).collect();
        let inst = Instance::new(self.graph, terminals, self.virtual_edges).expect("side instance is well formed");
        Work {
            inst,
            vmap: self.kept.iter().map(|&x| self.parent.vmap[x]).collect(),
            real_origin: self.real_origin,
            virt_origin: self.virt_origin,
            offset: Weight::zero(),
            forced: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    BaseCase,
    CutVertex,
    TwoCut,
    ThreeConnected,
}

#[derive(Debug, Clone)]
pub enum TraceBody<S> {
    /// A solution of `work.inst` found directly.
    Leaf { work: Arc<Work<S>>, solution: Solution<S> },
    CutVertex { children: Vec<Arc<RecursionTrace<S>>> },
    /// The folded side lives in the origin of a virtual edge of `side_b`.
    TwoCut {
        fold: Arc<FoldRecord<S>>,
        side_b: Arc<RecursionTrace<S>>,
    },
    /// Nothing to connect.
    Empty,
}

#[derive(Debug, Clone)]
pub struct RecursionTrace<S> {
    pub kind: NodeKind,
    /// Includes the work's offset.
    pub cost: Weight<S>,
    pub body: TraceBody<S>,
    pub forced: Vec<(VirtOrigin<S>, VeStatus)>,
}

impl<S> RecursionTrace<S> {
    /// Number of trace nodes, counting folded sides.
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut stack: Vec<&RecursionTrace<S>> = vec![self];
        while let Some(t) = stack.pop() {
            count += 1;
            match &t.body {
                TraceBody::CutVertex { children } => stack.extend(children.iter().map(|c| c.as_ref())),
                TraceBody::TwoCut { fold, side_b } => {
                    stack.push(side_b);
                    stack.extend(fold.traces.iter().flatten().map(|c| c.as_ref()));
                }
                TraceBody::Leaf { .. } | TraceBody::Empty => {}
            }
        }
        count
    }
}

/// Input-instance pieces collected from a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Witness {
    pub edges: BTreeSet<EdgeId>,
    pub virtual_used: BTreeSet<usize>,
    pub vertices: BTreeSet<Vertex>,
}

enum Task<'a, S> {
    Trace(&'a RecursionTrace<S>),
    Virt(&'a VirtOrigin<S>, VeStatus),
    Real(&'a RealOrigin),
}

/// Collects the input edges, used virtual edges and covered vertices
/// selected by a trace, expanding folded sides by the status chosen above them.
pub fn expand<S: Scalar>(trace: &RecursionTrace<S>) -> Result<Witness, TraceError> {
    let mut out = Witness::default();
    let mut stack = vec![Task::Trace(trace)];
    while let Some(task) = stack.pop() {
        match task {
            Task::Trace(t) => {
                for (o, s) in &t.forced {
                    stack.push(Task::Virt(o, *s));
                }
                match &t.body {
                    TraceBody::Empty => {}
                    TraceBody::CutVertex { children } => stack.extend(children.iter().map(|c| Task::Trace(c))),
                    TraceBody::TwoCut { side_b, .. } => stack.push(Task::Trace(side_b)),
                    TraceBody::Leaf { work, solution } => {
                        for &x in &solution.vertices {
                            out.vertices.insert(work.vmap[x]);
                        }
                        for &e in &solution.edges {
                            let edge = work.inst.graph.edge(e);
                            out.vertices.insert(work.vmap[edge.u]);
                            out.vertices.insert(work.vmap[edge.v]);
                            stack.push(Task::Real(&work.real_origin[e]));
                        }
                        for (i, &s) in solution.statuses.iter().enumerate() {
                            let e = &work.inst.virtual_edges[i];
                            if matches!(s, VeStatus::EndU | VeStatus::Connect | VeStatus::Disconnect) {
                                out.vertices.insert(work.vmap[e.u]);
                            }
                            if matches!(s, VeStatus::EndV | VeStatus::Connect | VeStatus::Disconnect) {
                                out.vertices.insert(work.vmap[e.v]);
                            }
                            stack.push(Task::Virt(&work.virt_origin[i], s));
                        }
                    }
                }
            }
            Task::Real(RealOrigin::Base(e)) => {
                out.edges.insert(*e);
            }
            Task::Real(RealOrigin::Shortcut(path)) => stack.extend(path.iter().map(Task::Real)),
            Task::Real(RealOrigin::Free) => {}
            Task::Virt(VirtOrigin::Base(i), s) => {
                if s == VeStatus::Connect {
                    out.virtual_used.insert(*i);
                }
            }
            Task::Virt(VirtOrigin::Reversed(inner), s) => stack.push(Task::Virt(inner, s.flipped())),
            Task::Virt(VirtOrigin::Merged { a, b, connect_first }, s) => {
                let (sa, sb) = match s {
                    VeStatus::Connect if *connect_first => (VeStatus::Connect, VeStatus::Disconnect),
                    VeStatus::Connect => (VeStatus::Disconnect, VeStatus::Connect),
                    other => (other, other),
                };
                stack.push(Task::Virt(a, sa));
                stack.push(Task::Virt(b, sb));
            }
            Task::Virt(VirtOrigin::Absorbed { inner, edge, via_edge }, s) => {
                if s == VeStatus::Connect && *via_edge {
                    stack.push(Task::Virt(inner, VeStatus::Disconnect));
                    stack.push(Task::Real(edge));
                } else {
                    stack.push(Task::Virt(inner, s));
                }
            }
            Task::Virt(VirtOrigin::Fold(rec), s) => {
                let t = rec.trace(s).ok_or(TraceError::MissingStatus(s))?;
                stack.push(Task::Trace(t));
            }
        }
    }
    Ok(out)
}

/// Turns a witness into a solution of `inst`: a spanning tree of the
/// selected pieces (used virtual edges first), costed from scratch.
pub fn assemble<S: Scalar>(inst: &Instance<S>, w: &Witness) -> Result<Solution<S>, TraceError> {
    let n = inst.vertex_count();
    let mut uf = UnionFind::new(n);
    let mut virtual_used = Vec::new();
    for &i in &w.virtual_used {
        let e = &inst.virtual_edges[i];
        if uf.union(e.u, e.v) {
            virtual_used.push(i);
        }
    }
    let mut real: Vec<EdgeId> = w.edges.iter().copied().collect();
    real.sort_by_key(|&e| (inst.graph.edge(e).weight, e));
    let mut edges = Vec::new();
    for e in real {
        let edge = inst.graph.edge(e);
        if uf.union(edge.u, edge.v) {
            edges.push(e);
        }
    }
    let mut vertices: BTreeSet<Vertex> = w.vertices.clone();
    vertices.extend(inst.terminals.iter().copied());
    if let Some(&first) = vertices.iter().next() {
        let r = uf.find(first);
        if vertices.iter().any(|&x| uf.find(x) != r) {
            return Err(TraceError::Disconnected);
        }
    }
    Ok(Solution::from_tree(inst, edges, virtual_used, vertices.into_iter().collect())?)
}

/// Expands `trace` and assembles the solution of the input instance.
pub fn reconstruct<S: Scalar>(inst: &Instance<S>, trace: &RecursionTrace<S>) -> Result<Solution<S>, TraceError> {
    assemble(inst, &expand(trace)?)
}

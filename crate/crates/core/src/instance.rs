//! Virtual Edge Steiner Tree instances, solutions and their cost.
//!
//! A virtual edge `uv` carries four weights: the cost when only `u` is
//! covered, when only `v` is covered, when the virtual edge itself is used
//! (connect), and when both endpoints are covered without using it
//! (disconnect). Every virtual edge contributes exactly one of these to the
//! cost of every feasible solution.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dsu::UnionFind;
use crate::graph::{EdgeId, GraphError, Multigraph, Vertex};
use crate::weight::{Scalar, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("terminal {0} out of range")]
    TerminalOutOfRange(Vertex),
    #[error("virtual edge {0} has an endpoint out of range")]
    VirtualEndpointOutOfRange(usize),
    #[error("virtual edge {0} is a loop")]
    VirtualSelfLoop(usize),
    #[error("virtual edge {0} has a negative weight")]
    NegativeVirtualWeight(usize),
    #[error("virtual edge {0}: disconnect weight exceeds an endpoint weight")]
    DisconnectExceedsEndpoint(usize),
    #[error("virtual edge {0}: disconnect weight exceeds the connect weight")]
    DisconnectExceedsConnect(usize),
    #[error("virtual edge {0} has neither endpoint covered")]
    NeitherEndpointCovered(usize),
    #[error("terminal {0} is not covered")]
    UncoveredTerminal(Vertex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VeStatus {
    EndU,
    EndV,
    Connect,
    Disconnect,
}

impl VeStatus {
    pub const ALL: [VeStatus; 4] = [VeStatus::EndU, VeStatus::EndV, VeStatus::Connect, VeStatus::Disconnect];

    pub fn name(self) -> &'static str {
        match self {
            VeStatus::EndU => "u",
            VeStatus::EndV => "v",
            VeStatus::Connect => "c",
            VeStatus::Disconnect => "d",
        }
    }

    /// The status with the roles of `u` and `v` exchanged.
    pub fn flipped(self) -> VeStatus {
        match self {
            VeStatus::EndU => VeStatus::EndV,
            VeStatus::EndV => VeStatus::EndU,
            s => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualEdge<S> {
    pub u: Vertex,
    pub v: Vertex,
    pub weight_u: Weight<S>,
    pub weight_v: Weight<S>,
    pub weight_connect: Weight<S>,
    pub weight_disconnect: Weight<S>,
}

impl<S: Scalar> VirtualEdge<S> {
    pub fn new(u: Vertex, v: Vertex, wu: Weight<S>, wv: Weight<S>, wc: Weight<S>, wd: Weight<S>) -> Self {
        VirtualEdge {
            u,
            v,
            weight_u: wu,
            weight_v: wv,
            weight_connect: wc,
            weight_disconnect: wd,
        }
    }

    pub fn weight(&self, status: VeStatus) -> Weight<S> {
        match status {
            VeStatus::EndU => self.weight_u,
            VeStatus::EndV => self.weight_v,
            VeStatus::Connect => self.weight_connect,
            VeStatus::Disconnect => self.weight_disconnect,
        }
    }

    /// Weight charged when `x` is the only covered endpoint.
    pub fn weight_at(&self, x: Vertex) -> Weight<S> {
        if x == self.u {
            self.weight_u
        } else {
            self.weight_v
        }
    }

    pub fn other(&self, x: Vertex) -> Vertex {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn joins(&self, a: Vertex, b: Vertex) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }

    /// Same edge with endpoints listed in the opposite order.
    pub fn reversed(&self) -> Self {
        VirtualEdge::new(self.v, self.u, self.weight_v, self.weight_u, self.weight_connect, self.weight_disconnect)
    }
}

/// A terminal vertex or a virtual edge, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Root {
    Terminal(Vertex),
    Virtual(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance<S> {
    pub graph: Multigraph<S>,
    /// Sorted, without duplicates.
    pub terminals: Vec<Vertex>,
    pub virtual_edges: Vec<VirtualEdge<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(
        graph: Multigraph<S>,
        terminals: impl IntoIterator<Item = Vertex>,
        virtual_edges: Vec<VirtualEdge<S>>,
    ) -> Result<Self, InstanceError> {
        let n = graph.vertex_count();
        let terminals: BTreeSet<Vertex> = terminals.into_iter().collect();
        if let Some(&t) = terminals.iter().find(|&&t| t >= n) {
            return Err(InstanceError::TerminalOutOfRange(t));
        }
        for (i, e) in virtual_edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(InstanceError::VirtualEndpointOutOfRange(i));
            }
            if e.u == e.v {
                return Err(InstanceError::VirtualSelfLoop(i));
            }
            if VeStatus::ALL.iter().any(|&s| e.weight(s).is_negative()) {
                return Err(InstanceError::NegativeVirtualWeight(i));
            }
        }
        Ok(Instance {
            graph,
            terminals: terminals.into_iter().collect(),
            virtual_edges,
        })
    }

    pub fn steiner(graph: Multigraph<S>, terminals: impl IntoIterator<Item = Vertex>) -> Result<Self, InstanceError> {
        Self::new(graph, terminals, Vec::new())
    }

    /// Checks `d <= min(u, v)` and `d <= c` on every virtual edge.
    pub fn check_virtual_weights(&self) -> Result<(), InstanceError> {
        for (i, e) in self.virtual_edges.iter().enumerate() {
            if e.weight_disconnect > e.weight_u.min(e.weight_v) {
                return Err(InstanceError::DisconnectExceedsEndpoint(i));
            }
            if e.weight_disconnect > e.weight_connect {
                return Err(InstanceError::DisconnectExceedsConnect(i));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn roots(&self) -> Vec<Root> {
        self.terminals
            .iter()
            .map(|&t| Root::Terminal(t))
            .chain((0..self.virtual_edges.len()).map(Root::Virtual))
            .collect()
    }

    pub fn root_count(&self) -> usize {
        self.terminals.len() + self.virtual_edges.len()
    }

    pub fn terminal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        for &t in &self.terminals {
            mask[t] = true;
        }
        mask
    }

    /// Vertices that are terminals or virtual-edge endpoints.
    /// The real graph with every virtual edge added as a zero-weight edge.
    pub fn skeleton_graph(&self) -> Multigraph<S> {
        let mut g = self.graph.clone();
        for e in &self.virtual_edges {
            g.add_edge(e.u, e.v, Weight::zero()).expect("valid virtual edge");
        }
        g
    }

    pub fn root_incident_mask(&self) -> Vec<bool> {
        let mut mask = self.terminal_mask();
        for e in &self.virtual_edges {
            mask[e.u] = true;
            mask[e.v] = true;
        }
        mask
    }
}

/// Status of `e` for a solution that uses it iff `used` and covers `covered`.
pub fn status_of<S: Scalar>(
    index: usize,
    e: &VirtualEdge<S>,
    used: bool,
    covered: &[bool],
) -> Result<VeStatus, InstanceError> {
    Ok(match (used, covered[e.u], covered[e.v]) {
        (true, _, _) => VeStatus::Connect,
        (false, true, true) => VeStatus::Disconnect,
        (false, true, false) => VeStatus::EndU,
        (false, false, true) => VeStatus::EndV,
        (false, false, false) => return Err(InstanceError::NeitherEndpointCovered(index)),
    })
}

/// Drops every terminal that is an endpoint of a virtual edge, charging
/// infinity to the case where that terminal would be left uncovered.
pub fn normalize<S: Scalar>(inst: &Instance<S>) -> Instance<S> {
    let is_terminal = inst.terminal_mask();
    let mut out = inst.clone();
    for e in &mut out.virtual_edges {
        if is_terminal[e.u] {
            e.weight_v = Weight::Infinite;
        }
        if is_terminal[e.v] {
            e.weight_u = Weight::Infinite;
        }
    }
    let mut touched = vec![false; inst.vertex_count()];
    for e in &inst.virtual_edges {
        touched[e.u] = true;
        touched[e.v] = true;
    }
    out.terminals.retain(|&t| !touched[t]);
    out
}

/// A feasible edge set together with its cost.
///
/// `vertices` is the covered set; it is listed explicitly so that a lone
/// vertex without edges is representable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution<S> {
    pub edges: Vec<EdgeId>,
    pub virtual_used: Vec<usize>,
    pub vertices: Vec<Vertex>,
    pub statuses: Vec<VeStatus>,
    pub cost: Weight<S>,
}

impl<S: Scalar> Solution<S> {
    /// Builds a solution from a tree, deriving statuses and cost from the instance.
    pub fn from_tree(
        inst: &Instance<S>,
        edges: Vec<EdgeId>,
        virtual_used: Vec<usize>,
        vertices: Vec<Vertex>,
    ) -> Result<Self, InstanceError> {
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        let mut virtual_used = virtual_used;
        virtual_used.sort_unstable();
        virtual_used.dedup();
        let mut vertices = vertices;
        vertices.sort_unstable();
        vertices.dedup();
        let (cost, statuses) = cost_and_statuses(inst, &edges, &virtual_used, &vertices)?;
        Ok(Solution {
            edges,
            virtual_used,
            vertices,
            statuses,
            cost,
        })
    }

    pub fn empty() -> Self {
        Solution {
            edges: Vec::new(),
            virtual_used: Vec::new(),
            vertices: Vec::new(),
            statuses: Vec::new(),
            cost: Weight::zero(),
        }
    }
}

fn cost_and_statuses<S: Scalar>(
    inst: &Instance<S>,
    edges: &[EdgeId],
    virtual_used: &[usize],
    vertices: &[Vertex],
) -> Result<(Weight<S>, Vec<VeStatus>), InstanceError> {
    let mut covered = vec![false; inst.vertex_count()];
    for &x in vertices {
        covered[x] = true;
    }
    for &e in edges {
        let edge = inst.graph.edge(e);
        covered[edge.u] = true;
        covered[edge.v] = true;
    }
    for &i in virtual_used {
        covered[inst.virtual_edges[i].u] = true;
        covered[inst.virtual_edges[i].v] = true;
    }
    if let Some(&t) = inst.terminals.iter().find(|&&t| !covered[t]) {
        return Err(InstanceError::UncoveredTerminal(t));
    }
    let mut used = vec![false; inst.virtual_edges.len()];
    for &i in virtual_used {
        used[i] = true;
    }
    let mut cost: Weight<S> = edges.iter().map(|&e| inst.graph.edge(e).weight).sum();
    let mut statuses = Vec::with_capacity(inst.virtual_edges.len());
    for (i, e) in inst.virtual_edges.iter().enumerate() {
        let s = status_of(i, e, used[i], &covered)?;
        cost = cost + e.weight(s);
        statuses.push(s);
    }
    Ok((cost, statuses))
}

/// Total cost of the edge set: real edge weights plus, for every virtual
/// edge, the weight of the status the set realizes.
pub fn evaluate_cost<S: Scalar>(
    inst: &Instance<S>,
    edges: &[EdgeId],
    virtual_used: &[usize],
    vertices: &[Vertex],
) -> Result<Weight<S>, InstanceError> {
    cost_and_statuses(inst, edges, virtual_used, vertices).map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("edge or vertex id out of range")]
    UnknownElement,
    #[error("not a tree")]
    NotATree,
    #[error("uncovered terminal {0}")]
    UncoveredTerminal(Vertex),
    #[error("virtual edge {0} has no covered endpoint")]
    UncoveredVirtualEdge(usize),
    #[error("status of virtual edge {0} disagrees with the edge set")]
    StatusMismatch(usize),
    #[error("claimed cost {claimed}, recomputed {actual}")]
    CostMismatch { claimed: String, actual: String },
}

/// Independent check of tree shape, coverage, statuses and cost.
pub fn validate_solution<S: Scalar>(inst: &Instance<S>, sol: &Solution<S>) -> Result<(), Violation> {
    let n = inst.vertex_count();
    if sol.edges.iter().any(|&e| e >= inst.graph.edge_count())
        || sol.virtual_used.iter().any(|&i| i >= inst.virtual_edges.len())
        || sol.vertices.iter().any(|&x| x >= n)
        || sol.statuses.len() != inst.virtual_edges.len()
    {
        return Err(Violation::UnknownElement);
    }
    let mut pairs: Vec<(Vertex, Vertex)> = sol
        .edges
        .iter()
        .map(|&e| (inst.graph.edge(e).u, inst.graph.edge(e).v))
        .collect();
    pairs.extend(sol.virtual_used.iter().map(|&i| (inst.virtual_edges[i].u, inst.virtual_edges[i].v)));
    let distinct_edges: BTreeSet<EdgeId> = sol.edges.iter().copied().collect();
    let distinct_virtual: BTreeSet<usize> = sol.virtual_used.iter().copied().collect();
    if distinct_edges.len() != sol.edges.len() || distinct_virtual.len() != sol.virtual_used.len() {
        return Err(Violation::NotATree);
    }
    let mut covered: BTreeSet<Vertex> = sol.vertices.iter().copied().collect();
    for &(a, b) in &pairs {
        covered.insert(a);
        covered.insert(b);
    }
    if !covered.is_empty() {
        if pairs.len() + 1 != covered.len() {
            return Err(Violation::NotATree);
        }
        let mut uf = UnionFind::new(n);
        for &(a, b) in &pairs {
            if !uf.union(a, b) {
                return Err(Violation::NotATree);
            }
        }
    }
    let mut mask = vec![false; n];
    for &x in &covered {
        mask[x] = true;
    }
    if let Some(&t) = inst.terminals.iter().find(|&&t| !mask[t]) {
        return Err(Violation::UncoveredTerminal(t));
    }
    let mut used = vec![false; inst.virtual_edges.len()];
    for &i in &sol.virtual_used {
        used[i] = true;
    }
    let mut cost: Weight<S> = sol.edges.iter().map(|&e| inst.graph.edge(e).weight).sum();
    for (i, e) in inst.virtual_edges.iter().enumerate() {
        let s = status_of(i, e, used[i], &mask).map_err(|_| Violation::UncoveredVirtualEdge(i))?;
        if s != sol.statuses[i] {
            return Err(Violation::StatusMismatch(i));
        }
        cost = cost + e.weight(s);
    }
    if cost != sol.cost {
        return Err(Violation::CostMismatch {
            claimed: sol.cost.to_string(),
            actual: cost.to_string(),
        });
    }
    Ok(())
}

/// The graph with every virtual edge subdivided once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarGraph<S> {
    /// Real edges keep their ids; virtual edge `i` becomes edges
    /// `m + 2i` (u side) and `m + 2i + 1` (v side), both of weight zero.
    pub graph: Multigraph<S>,
    pub subdivision: Vec<Vertex>,
    /// Terminals and subdivision vertices, sorted.
    pub star_roots: Vec<Vertex>,
}

pub fn build_star_graph<S: Scalar>(inst: &Instance<S>) -> StarGraph<S> {
    let mut graph = inst.graph.clone();
    let mut subdivision = Vec::with_capacity(inst.virtual_edges.len());
    for e in &inst.virtual_edges {
        let s = graph.add_vertex();
        graph.add_edge(e.u, s, Weight::zero()).expect("fresh vertex");
        graph.add_edge(s, e.v, Weight::zero()).expect("fresh vertex");
        subdivision.push(s);
    }
    let mut star_roots = inst.terminals.clone();
    star_roots.extend(subdivision.iter().copied());
    star_roots.sort_unstable();
    StarGraph {
        graph,
        subdivision,
        star_roots,
    }
}

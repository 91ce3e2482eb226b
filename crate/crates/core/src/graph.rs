//! Weighted multigraph and the connectivity primitives built on it.
//!
//! Vertices are `0..n`. Parallel edges are allowed and keep distinct ids;
//! self-loops are rejected. Cut searches look only at the simple skeleton.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use thiserror::Error;

use crate::weight::{Scalar, Weight};

pub type Vertex = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error("negative weight on edge {0}-{1}")]
    NegativeWeight(Vertex, Vertex),
    #[error("graph is not connected")]
    DisconnectedInput,
    #[error("graph has a cut vertex")]
    HasCutVertex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge<S> {
    pub u: Vertex,
    pub v: Vertex,
    pub weight: Weight<S>,
}

impl<S> Edge<S> {
    pub fn other(&self, x: Vertex) -> Vertex {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    pub fn joins(&self, a: Vertex, b: Vertex) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph<S> {
    edges: Vec<Edge<S>>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl<S: Scalar> Multigraph<S> {
    pub fn new(n: usize) -> Self {
        Multigraph {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, Weight<S>)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex, weight: Weight<S>) -> Result<EdgeId, GraphError> {
        let n = self.vertex_count();
        if u >= n {
            return Err(GraphError::VertexOutOfRange(u));
        }
        if v >= n {
            return Err(GraphError::VertexOutOfRange(v));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if weight.is_negative() {
            return Err(GraphError::NegativeWeight(u, v));
        }
        let id = self.edges.len();
        self.edges.push(Edge { u, v, weight });
        self.adjacency[u].push(id);
        self.adjacency[v].push(id);
        Ok(id)
    }

    pub fn add_vertex(&mut self) -> Vertex {
        self.adjacency.push(Vec::new());
        self.adjacency.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge<S> {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn incident(&self, v: Vertex) -> &[EdgeId] {
        &self.adjacency[v]
    }

    /// `(neighbor, edge id)` pairs in insertion order.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = (Vertex, EdgeId)> + '_ {
        self.adjacency[v].iter().map(move |&e| (self.edges[e].other(v), e))
    }

    /// Distinct neighbors in increasing order.
    pub fn simple_neighbors(&self, v: Vertex) -> Vec<Vertex> {
        let set: BTreeSet<Vertex> = self.neighbors(v).map(|(w, _)| w).collect();
        set.into_iter().collect()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.simple_neighbors(v).len()
    }

    /// Lightest edge between `a` and `b`; ties go to the smaller id.
    pub fn min_edge_between(&self, a: Vertex, b: Vertex) -> Option<EdgeId> {
        self.adjacency[a]
            .iter()
            .copied()
            .filter(|&e| self.edges[e].joins(a, b))
            .min_by_key(|&e| (self.edges[e].weight, e))
    }

    /// Subgraph induced by `keep`, renumbered in increasing vertex order.
    /// Returns the new graph, the new-to-old vertex map, and the new-to-old edge map.
    pub fn induced(&self, keep: &[Vertex]) -> (Multigraph<S>, Vec<Vertex>, Vec<EdgeId>) {
        let mut order: Vec<Vertex> = keep.to_vec();
        order.sort_unstable();
        order.dedup();
        let mut index = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in order.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Multigraph::new(order.len());
        let mut emap = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if index[e.u] != usize::MAX && index[e.v] != usize::MAX {
                g.add_edge(index[e.u], index[e.v], e.weight).expect("induced edge is valid");
                emap.push(id);
            }
        }
        (g, order, emap)
    }
}

/// A 1- or 2-vertex separator with the two sides it splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexCut {
    pub vertices: Vec<Vertex>,
    pub side_a: Vec<Vertex>,
    pub side_b: Vec<Vertex>,
}

/// Components of `g` after deleting the vertices flagged in `removed`.
/// Each component is sorted; components are ordered by their smallest vertex.
pub fn components_avoiding<S: Scalar>(g: &Multigraph<S>, removed: &[bool]) -> Vec<Vec<Vertex>> {
    let n = g.vertex_count();
    let mut seen = removed.to_vec();
    seen.resize(n, false);
    let mut parts = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut part = Vec::new();
        while let Some(x) = queue.pop_front() {
            part.push(x);
            for (y, _) in g.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        part.sort_unstable();
        parts.push(part);
    }
    parts
}

pub fn connected_components<S: Scalar>(g: &Multigraph<S>) -> Vec<Vec<Vertex>> {
    components_avoiding(g, &[])
}

pub fn is_connected<S: Scalar>(g: &Multigraph<S>) -> bool {
    connected_components(g).len() <= 1
}

fn split_sides(parts: Vec<Vec<Vertex>>, smaller_first: bool) -> (Vec<Vertex>, Vec<Vertex>) {
    let pick = if smaller_first {
        // smallest component, ties to the one holding the smallest vertex
        (0..parts.len()).min_by_key(|&i| (parts[i].len(), parts[i][0])).unwrap_or(0)
    } else {
        0
    };
    let side_a = parts[pick].clone();
    let mut side_b: Vec<Vertex> = parts
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| i != pick)
        .flat_map(|(_, p)| p)
        .collect();
    side_b.sort_unstable();
    (side_a, side_b)
}

/// Smallest cut vertex, with side A the component of `g - v` holding the
/// smallest vertex and side B everything else.
pub fn find_cut_vertex<S: Scalar>(g: &Multigraph<S>) -> Result<Option<VertexCut>, GraphError> {
    if !is_connected(g) {
        return Err(GraphError::DisconnectedInput);
    }
    let n = g.vertex_count();
    let mut removed = vec![false; n];
    for v in 0..n {
        removed[v] = true;
        let parts = components_avoiding(g, &removed);
        removed[v] = false;
        if parts.len() >= 2 {
            let (side_a, side_b) = split_sides(parts, false);
            return Ok(Some(VertexCut {
                vertices: vec![v],
                side_a,
                side_b,
            }));
        }
    }
    Ok(None)
}

/// Lexicographically first 2-cut `{u, v}`; side A is the smallest component
/// of `g - {u, v}` and side B the rest.
pub fn find_two_cut<S: Scalar>(g: &Multigraph<S>) -> Result<Option<VertexCut>, GraphError> {
    if find_cut_vertex(g)?.is_some() {
        return Err(GraphError::HasCutVertex);
    }
    let n = g.vertex_count();
    if n < 4 {
        return Ok(None);
    }
    let mut removed = vec![false; n];
    for u in 0..n {
        removed[u] = true;
        for v in u + 1..n {
            removed[v] = true;
            let parts = components_avoiding(g, &removed);
            removed[v] = false;
            if parts.len() >= 2 {
                let (side_a, side_b) = split_sides(parts, true);
                return Ok(Some(VertexCut {
                    vertices: vec![u, v],
                    side_a,
                    side_b,
                }));
            }
        }
        removed[u] = false;
    }
    Ok(None)
}

/// Single-source shortest paths restricted to vertices with `allowed[x]`
/// (all vertices when `allowed` is empty). Returns distances and the
/// predecessor edge of every reached vertex.
pub fn dijkstra<S: Scalar>(
    g: &Multigraph<S>,
    source: Vertex,
    allowed: &[bool],
) -> (Vec<Weight<S>>, Vec<Option<EdgeId>>) {
    let n = g.vertex_count();
    let ok = |x: Vertex| allowed.is_empty() || allowed[x];
    let mut dist = vec![Weight::Infinite; n];
    let mut pred = vec![None; n];
    if !ok(source) {
        return (dist, pred);
    }
    dist[source] = Weight::zero();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Weight::zero(), source)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &e in g.incident(x) {
            let edge = g.edge(e);
            let y = edge.other(x);
            if !ok(y) || edge.weight.is_infinite() {
                continue;
            }
            let nd = d + edge.weight;
            if nd < dist[y] {
                dist[y] = nd;
                pred[y] = Some(e);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    (dist, pred)
}

pub fn shortest_path_distance<S: Scalar>(g: &Multigraph<S>, u: Vertex, v: Vertex) -> Weight<S> {
    dijkstra(g, u, &[]).0[v]
}

/// Up to `count` paths from `r` to distinct vertices of `targets`, pairwise
/// sharing only `r`, each meeting `targets` only at its last vertex.
/// Returns `None` when fewer than `count` such paths exist.
pub fn disjoint_paths_to_set<S: Scalar>(
    g: &Multigraph<S>,
    r: Vertex,
    targets: &[Vertex],
    count: usize,
) -> Option<Vec<Vec<Vertex>>> {
    let n = g.vertex_count();
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t] = true;
    }
    if is_target[r] {
        return None;
    }
    let mut flow = UnitFlow::new(2 * n + 1);
    let sink = 2 * n;
    let vin = |x: Vertex| 2 * x;
    let vout = |x: Vertex| 2 * x + 1;
    for x in 0..n {
        if x == r {
            continue;
        }
        if is_target[x] {
            flow.add_arc(vin(x), sink);
        } else {
            flow.add_arc(vin(x), vout(x));
        }
    }
    for x in 0..n {
        for y in g.simple_neighbors(x) {
            if y != r && !is_target[x] {
                flow.add_arc(vout(x), vin(y));
            }
        }
    }
    for _ in 0..count {
        if !flow.augment(vout(r), sink) {
            return None;
        }
    }
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let mut path = vec![r];
        let mut at = vout(r);
        while at != sink {
            let next = flow.take_unit(at).expect("flow decomposition");
            if next != sink && next.is_multiple_of(2) {
                path.push(next / 2);
            }
            at = next;
        }
        paths.push(path);
    }
    paths.sort_by_key(|p| *p.last().expect("nonempty"));
    Some(paths)
}

struct Arc {
    to: usize,
    cap: u32,
    rev: usize,
    forward: bool,
}

struct UnitFlow {
    arcs: Vec<Vec<Arc>>,
}

impl UnitFlow {
    fn new(nodes: usize) -> Self {
        UnitFlow {
            arcs: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    fn add_arc(&mut self, a: usize, b: usize) {
        let ra = self.arcs[b].len();
        let rb = self.arcs[a].len();
        self.arcs[a].push(Arc {
            to: b,
            cap: 1,
            rev: ra,
            forward: true,
        });
        self.arcs[b].push(Arc {
            to: a,
            cap: 0,
            rev: rb,
            forward: false,
        });
    }

    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.arcs.len()];
        let mut seen = vec![false; self.arcs.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for (i, arc) in self.arcs[x].iter().enumerate() {
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    prev[arc.to] = Some((x, i));
                    queue.push_back(arc.to);
                }
            }
        }
        if !seen[t] {
            return false;
        }
        let mut at = t;
        while let Some((x, i)) = prev[at] {
            self.arcs[x][i].cap -= 1;
            let (to, rev) = (self.arcs[x][i].to, self.arcs[x][i].rev);
            self.arcs[to][rev].cap += 1;
            at = x;
        }
        true
    }

    /// Follows and consumes one unit of flow leaving `x`.
    fn take_unit(&mut self, x: usize) -> Option<usize> {
        let i = self.arcs[x].iter().position(|a| a.forward && a.cap == 0)?;
        // mark consumed by restoring capacity on the forward arc only
        self.arcs[x][i].cap = 2;
        Some(self.arcs[x][i].to)
    }
}

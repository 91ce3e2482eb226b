//! Exponential ground-truth solvers and rooted-K4 certificates.
//!
//! Everything here is exact and simple rather than fast: Dreyfus-Wagner for
//! plain Steiner tree, a 4^l case split for virtual edges, and brute-force
//! partition search for rooted K4-minors.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::dsu::UnionFind;
use crate::graph::{components_avoiding, EdgeId, Multigraph, Vertex};
use crate::instance::{build_star_graph, Instance, Solution, VeStatus};
use crate::weight::{Scalar, Weight};

pub const TERMINAL_CAP: usize = 14;
pub const VIRTUAL_CAP: usize = 12;
pub const MINOR_VERTEX_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{count} terminals exceed the cap of {cap}")]
    TooManyTerminals { count: usize, cap: usize },
    #[error("{count} virtual edges exceed the cap of {cap}")]
    TooManyVirtualEdges { count: usize, cap: usize },
    #[error("{n} vertices exceed the minor-search cap of {cap}")]
    InstanceTooLarge { n: usize, cap: usize },
    #[error("terminals are not mutually reachable")]
    Unreachable,
    #[error("no feasible solution")]
    Infeasible,
    #[error("pattern violation: {0}")]
    PatternViolation(String),
}

/// A Steiner tree in some graph: edge ids plus the vertices it spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerTree<S> {
    pub cost: Weight<S>,
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<Vertex>,
}

#[derive(Clone, Copy)]
enum DwBack {
    Leaf,
    Split(usize),
    Grow(EdgeId, Vertex),
}

/// Exact minimum Steiner tree by subset dynamic programming over terminals.
pub fn dreyfus_wagner<S: Scalar>(g: &Multigraph<S>, terminals: &[Vertex]) -> Result<SteinerTree<S>, OracleError> {
    let terms: Vec<Vertex> = terminals.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let k = terms.len();
    if k > TERMINAL_CAP {
        return Err(OracleError::TooManyTerminals { count: k, cap: TERMINAL_CAP });
    }
    if k == 0 {
        return Ok(SteinerTree {
            cost: Weight::zero(),
            edges: Vec::new(),
            vertices: Vec::new(),
        });
    }
    let n = g.vertex_count();
    let full = (1usize << k) - 1;
    let mut dp = vec![vec![Weight::<S>::Infinite; n]; full + 1];
    let mut back = vec![vec![DwBack::Leaf; n]; full + 1];
    for (i, &t) in terms.iter().enumerate() {
        dp[1 << i][t] = Weight::zero();
    }
    for mask in 1..=full {
        if mask.count_ones() > 1 {
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            // submasks containing the lowest bit, excluding mask itself
            let mut sub = rest;
            loop {
                let part = sub | low;
                if part != mask {
                    let other = mask ^ part;
                    for v in 0..n {
                        let c = dp[part][v] + dp[other][v];
                        if c < dp[mask][v] {
                            dp[mask][v] = c;
                            back[mask][v] = DwBack::Split(part);
                        }
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        let mut heap: BinaryHeap<Reverse<(Weight<S>, Vertex)>> =
            (0..n).filter(|&v| dp[mask][v].is_finite()).map(|v| Reverse((dp[mask][v], v))).collect();
        while let Some(Reverse((d, x))) = heap.pop() {
            if d > dp[mask][x] {
                continue;
            }
            for (y, e) in g.neighbors(x) {
                let nd = d + g.edge(e).weight;
                if nd < dp[mask][y] {
                    dp[mask][y] = nd;
                    back[mask][y] = DwBack::Grow(e, x);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
    }
    let root = terms[0];
    let cost = dp[full][root];
    if cost.is_infinite() {
        return Err(OracleError::Unreachable);
    }
    let mut edges = BTreeSet::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v] {
            DwBack::Leaf => {}
            DwBack::Split(part) => {
                stack.push((part, v));
                stack.push((mask ^ part, v));
            }
            DwBack::Grow(e, x) => {
                edges.insert(e);
                stack.push((mask, x));
            }
        }
    }
    let (edges, vertices) = prune_to_tree(g, edges.into_iter().collect(), &terms);
    let tree_cost: Weight<S> = edges.iter().map(|&e| g.edge(e).weight).sum();
    debug_assert!(tree_cost <= cost);
    Ok(SteinerTree {
        cost: tree_cost,
        edges,
        vertices,
    })
}

/// Reduces a connected edge set containing `keep` to a tree and strips
/// leaves outside `keep`. Returns the edges and the spanned vertices.
pub fn prune_to_tree<S: Scalar>(g: &Multigraph<S>, mut edges: Vec<EdgeId>, keep: &[Vertex]) -> (Vec<EdgeId>, Vec<Vertex>) {
    edges.sort_by_key(|&e| (g.edge(e).weight, e));
    let mut uf = UnionFind::new(g.vertex_count());
    edges.retain(|&e| uf.union(g.edge(e).u, g.edge(e).v));
    let mut keep_mask = vec![false; g.vertex_count()];
    for &t in keep {
        keep_mask[t] = true;
    }
    let mut degree = vec![0usize; g.vertex_count()];
    for &e in &edges {
        degree[g.edge(e).u] += 1;
        degree[g.edge(e).v] += 1;
    }
    let mut alive = vec![true; edges.len()];
    loop {
        let mut changed = false;
        for (i, &e) in edges.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let edge = g.edge(e);
            let leaf = [edge.u, edge.v].into_iter().find(|&x| degree[x] == 1 && !keep_mask[x]);
            if leaf.is_some() {
                alive[i] = false;
                degree[edge.u] -= 1;
                degree[edge.v] -= 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let edges: Vec<EdgeId> = edges.into_iter().zip(alive).filter(|&(_, a)| a).map(|(e, _)| e).collect();
    let mut vertices: BTreeSet<Vertex> = keep.iter().copied().collect();
    for &e in &edges {
        vertices.insert(g.edge(e).u);
        vertices.insert(g.edge(e).v);
    }
    let mut edges = edges;
    edges.sort_unstable();
    (edges, vertices.into_iter().collect())
}

/// Solves one status assignment: delete, contract or require endpoints,
/// then run Dreyfus-Wagner. `None` when the branch admits no tree.
fn solve_branch<S: Scalar>(inst: &Instance<S>, statuses: &[VeStatus]) -> Option<Solution<S>> {
    let n = inst.vertex_count();
    let mut forbidden = vec![false; n];
    let mut required = inst.terminal_mask();
    let mut uf = UnionFind::new(n);
    for (e, &s) in inst.virtual_edges.iter().zip(statuses) {
        match s {
            VeStatus::EndU => {
                required[e.u] = true;
                forbidden[e.v] = true;
            }
            VeStatus::EndV => {
                required[e.v] = true;
                forbidden[e.u] = true;
            }
            VeStatus::Connect => {
                required[e.u] = true;
                required[e.v] = true;
                if !uf.union(e.u, e.v) {
                    return None;
                }
            }
            VeStatus::Disconnect => {
                required[e.u] = true;
                required[e.v] = true;
            }
        }
    }
    if (0..n).any(|x| forbidden[x] && required[x]) {
        return None;
    }
    let class: Vec<Vertex> = (0..n).map(|x| uf.find(x)).collect();
    let mut class_index = vec![usize::MAX; n];
    let mut members: Vec<Vec<Vertex>> = Vec::new();
    for x in 0..n {
        let c = class[x];
        if class_index[c] == usize::MAX {
            class_index[c] = members.len();
            members.push(Vec::new());
        }
        members[class_index[c]].push(x);
    }
    // connect statuses require both endpoints, so classes never hold forbidden vertices
    let mut h = Multigraph::new(members.len());
    let mut origin = Vec::new();
    for (id, edge) in inst.graph.edges().iter().enumerate() {
        let (a, b) = (class_index[class[edge.u]], class_index[class[edge.v]]);
        if a == b || forbidden[edge.u] || forbidden[edge.v] {
            continue;
        }
        h.add_edge(a, b, edge.weight).expect("distinct classes");
        origin.push(id);
    }
    let terms: Vec<Vertex> = (0..n).filter(|&x| required[x]).map(|x| class_index[class[x]]).collect();
    let tree = dreyfus_wagner(&h, &terms).ok()?;
    let edges: Vec<EdgeId> = tree.edges.iter().map(|&e| origin[e]).collect();
    let vertices: Vec<Vertex> = tree.vertices.iter().flat_map(|&c| members[c].iter().copied()).collect();
    let virtual_used: Vec<usize> = statuses
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s == VeStatus::Connect)
        .map(|(i, _)| i)
        .collect();
    let sol = Solution::from_tree(inst, edges, virtual_used, vertices).ok()?;
    debug_assert!(sol.statuses == statuses);
    Some(sol)
}

/// Exact Virtual Edge Steiner Tree by trying all four statuses of every
/// virtual edge. Ties go to the lexicographically least status vector.
pub fn solve_vest_by_reduction<S: Scalar>(inst: &Instance<S>) -> Result<Solution<S>, OracleError> {
    let l = inst.virtual_edges.len();
    if l > VIRTUAL_CAP {
        return Err(OracleError::TooManyVirtualEdges { count: l, cap: VIRTUAL_CAP });
    }
    let k = inst.terminals.len();
    if k + 2 * l > TERMINAL_CAP {
        return Err(OracleError::TooManyTerminals {
            count: k + 2 * l,
            cap: TERMINAL_CAP,
        });
    }
    if l == 0 && k == 0 {
        return Ok(Solution::empty());
    }
    let mut best: Option<Solution<S>> = None;
    let mut statuses = vec![VeStatus::EndU; l];
    for code in 0..(1usize << (2 * l)) {
        for (i, s) in statuses.iter_mut().enumerate() {
            *s = VeStatus::ALL[(code >> (2 * (l - 1 - i))) & 3];
        }
        let fixed: Weight<S> = inst.virtual_edges.iter().zip(&statuses).map(|(e, &s)| e.weight(s)).sum();
        if fixed.is_infinite() || best.as_ref().is_some_and(|b| fixed >= b.cost) {
            continue;
        }
        if let Some(sol) = solve_branch(inst, &statuses) {
            if sol.cost.is_finite() && best.as_ref().is_none_or(|b| sol.cost < b.cost) {
                best = Some(sol);
            }
        }
    }
    best.ok_or(OracleError::Infeasible)
}

/// Four disjoint connected vertex sets, each holding a root, pairwise
/// joined by an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K4Certificate {
    pub branch_sets: [Vec<Vertex>; 4],
    pub root_witnesses: [Vertex; 4],
    /// `(i, j, x, y)` with `i < j`, `x` in set `i`, `y` in set `j`.
    pub cross_edges: Vec<(usize, usize, Vertex, Vertex)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("branch sets overlap or are empty")]
    NotDisjoint,
    #[error("branch set {0} is not connected")]
    Disconnected(usize),
    #[error("branch set {0} has no valid root witness")]
    MissingRoot(usize),
    #[error("no valid cross edge between sets {0} and {1}")]
    MissingCrossEdge(usize, usize),
}

/// Independent check of every clause of a rooted K4-minor certificate.
pub fn check_certificate<S: Scalar>(
    g: &Multigraph<S>,
    roots: &[Vertex],
    cert: &K4Certificate,
) -> Result<(), CertificateError> {
    let n = g.vertex_count();
    let mut label = vec![usize::MAX; n];
    for (i, set) in cert.branch_sets.iter().enumerate() {
        if set.is_empty() {
            return Err(CertificateError::NotDisjoint);
        }
        for &x in set {
            if x >= n || label[x] != usize::MAX {
                return Err(CertificateError::NotDisjoint);
            }
            label[x] = i;
        }
    }
    for (i, set) in cert.branch_sets.iter().enumerate() {
        let removed: Vec<bool> = (0..n).map(|x| label[x] != i).collect();
        if components_avoiding(g, &removed).len() != 1 {
            return Err(CertificateError::Disconnected(i));
        }
        let w = cert.root_witnesses[i];
        if !set.contains(&w) || !roots.contains(&w) {
            return Err(CertificateError::MissingRoot(i));
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let ok = cert.cross_edges.iter().any(|&(a, b, x, y)| {
                a == i && b == j && x < n && y < n && label[x] == i && label[y] == j && g.min_edge_between(x, y).is_some()
            });
            if !ok {
                return Err(CertificateError::MissingCrossEdge(i, j));
            }
        }
    }
    Ok(())
}

fn certificate_from_labels<S: Scalar>(g: &Multigraph<S>, is_root: &[bool], label: &[Option<usize>]) -> K4Certificate {
    let mut sets: [Vec<Vertex>; 4] = Default::default();
    for (x, l) in label.iter().enumerate() {
        if let Some(l) = *l {
            sets[l].push(x);
        }
    }
    let root_witnesses = std::array::from_fn(|i| *sets[i].iter().find(|&&x| is_root[x]).expect("rooted set"));
    let mut cross_edges = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let pair = sets[i]
                .iter()
                .flat_map(|&x| g.simple_neighbors(x).into_iter().map(move |y| (x, y)))
                .find(|&(_, y)| label[y] == Some(j))
                .expect("adjacent sets");
            cross_edges.push((i, j, pair.0, pair.1));
        }
    }
    K4Certificate {
        branch_sets: sets,
        root_witnesses,
        cross_edges,
    }
}

struct K4Search<'a> {
    adj: &'a [Vec<Vertex>],
    order: Vec<Vertex>,
    is_root: &'a [bool],
    label: Vec<Option<usize>>,
    roots_left: Vec<usize>,
}

impl K4Search<'_> {
    fn blocks_ok(&self) -> bool {
        let n = self.adj.len();
        let mut adjacent = [[false; 4]; 4];
        for x in 0..n {
            if let Some(a) = self.label[x] {
                for &y in &self.adj[x] {
                    if let Some(b) = self.label[y] {
                        adjacent[a][b] = true;
                    }
                }
            }
        }
        if (0..4).any(|i| (0..4).any(|j| i != j && !adjacent[i][j])) {
            return false;
        }
        for b in 0..4 {
            let members: Vec<Vertex> = (0..n).filter(|&x| self.label[x] == Some(b)).collect();
            let mut seen = vec![false; n];
            seen[members[0]] = true;
            let mut stack = vec![members[0]];
            let mut count = 1;
            while let Some(x) = stack.pop() {
                for &y in &self.adj[x] {
                    if !seen[y] && self.label[y] == Some(b) {
                        seen[y] = true;
                        count += 1;
                        stack.push(y);
                    }
                }
            }
            if count != members.len() || !members.iter().any(|&x| self.is_root[x]) {
                return false;
            }
        }
        true
    }

    fn run(&mut self, i: usize, used: usize, rooted: [bool; 4]) -> bool {
        let missing = (0..used).filter(|&b| !rooted[b]).count() + (4 - used);
        if self.roots_left[i] < missing {
            return false;
        }
        if i == self.order.len() {
            return used == 4 && self.blocks_ok();
        }
        if self.order.len() - i < 4 - used {
            return false;
        }
        let x = self.order[i];
        for b in 0..(used + 1).min(4) {
            // a vertex of degree at most two must share its set with a neighbor
            if self.adj[x].len() <= 2 && b == used {
                let later_neighbor = self.adj[x].iter().any(|&y| self.label[y].is_none());
                if !later_neighbor {
                    continue;
                }
            }
            if self.adj[x].len() <= 2 {
                let all_assigned = self.adj[x].iter().all(|&y| self.label[y].is_some());
                if all_assigned && !self.adj[x].iter().any(|&y| self.label[y] == Some(b)) {
                    continue;
                }
            }
            self.label[x] = Some(b);
            let mut r = rooted;
            r[b] |= self.is_root[x];
            if self.run(i + 1, used.max(b + 1), r) {
                return true;
            }
        }
        self.label[x] = None;
        false
    }
}

/// Brute-force search for a K4-minor whose four branch sets each contain a
/// vertex of `roots`.
pub fn has_rooted_k4<S: Scalar>(g: &Multigraph<S>, roots: &[Vertex]) -> Result<Option<K4Certificate>, OracleError> {
    let n = g.vertex_count();
    let mut is_root = vec![false; n];
    for &r in roots {
        is_root[r] = true;
    }
    let adj: Vec<Vec<Vertex>> = (0..n).map(|x| g.simple_neighbors(x)).collect();
    for comp in components_avoiding(g, &[]) {
        if comp.iter().filter(|&&x| is_root[x]).count() < 4 {
            continue;
        }
        if comp.len() > MINOR_VERTEX_CAP {
            return Err(OracleError::InstanceTooLarge {
                n: comp.len(),
                cap: MINOR_VERTEX_CAP,
            });
        }
        // In a connected host every minor model extends to one whose sets
        // cover the whole component, so only full partitions are searched.
        let mut order = comp.clone();
        order.sort_by_key(|&x| (Reverse(adj[x].len()), x));
        let mut roots_left = vec![0; order.len() + 1];
        for i in (0..order.len()).rev() {
            roots_left[i] = roots_left[i + 1] + usize::from(is_root[order[i]]);
        }
        let mut search = K4Search {
            adj: &adj,
            order,
            is_root: &is_root,
            label: vec![None; n],
            roots_left,
        };
        if search.run(0, 0, [false; 4]) {
            return Ok(Some(certificate_from_labels(g, &is_root, &search.label)));
        }
    }
    Ok(None)
}

/// `true` when the subdivided graph has no K4-minor rooted at the
/// terminals and subdivision vertices.
pub fn instance_is_minor_free<S: Scalar>(inst: &Instance<S>) -> Result<bool, OracleError> {
    let star = build_star_graph(inst);
    Ok(has_rooted_k4(&star.graph, &star.star_roots)?.is_none())
}

/// Builds a certificate from a cycle through `v[0..4]` in cyclic order and
/// two disjoint paths `p1` from `v[0]` to `v[2]` and `p2` from `v[1]` to
/// `v[3]`, internally disjoint from the cycle.
pub fn certificate_from_cycle_and_paths<S: Scalar>(
    g: &Multigraph<S>,
    cycle: &[Vertex],
    v: [Vertex; 4],
    p1: &[Vertex],
    p2: &[Vertex],
) -> Result<K4Certificate, OracleError> {
    let bad = |m: &str| Err(OracleError::PatternViolation(m.to_string()));
    let len = cycle.len();
    let distinct: BTreeSet<Vertex> = cycle.iter().copied().collect();
    if distinct.len() != len || len < 4 {
        return bad("cycle is not simple");
    }
    for i in 0..len {
        if g.min_edge_between(cycle[i], cycle[(i + 1) % len]).is_none() {
            return bad("cycle uses a missing edge");
        }
    }
    let mut pos = [0usize; 4];
    for i in 0..4 {
        match cycle.iter().position(|&x| x == v[i]) {
            Some(p) => pos[i] = p,
            None => return bad("pattern vertex off the cycle"),
        }
    }
    let forward = |a: usize, b: usize| (b + len - a) % len;
    let mut cyc: Vec<Vertex> = cycle.to_vec();
    let ordered = |pos: &[usize; 4]| {
        let d: Vec<usize> = (1..4).map(|i| forward(pos[0], pos[i])).collect();
        d[0] > 0 && d[0] < d[1] && d[1] < d[2]
    };
    if !ordered(&pos) {
        cyc.reverse();
        for i in 0..4 {
            pos[i] = len - 1 - pos[i];
        }
        if !ordered(&pos) {
            return bad("pattern vertices out of cyclic order");
        }
    }
    let path_ok = |p: &[Vertex], a: Vertex, b: Vertex| {
        p.len() >= 2
            && p[0] == a
            && p[p.len() - 1] == b
            && p.windows(2).all(|w| g.min_edge_between(w[0], w[1]).is_some())
            && p[1..p.len() - 1].iter().all(|x| !distinct.contains(x))
    };
    if !path_ok(p1, v[0], v[2]) || !path_ok(p2, v[1], v[3]) {
        return bad("path endpoints, edges or cycle contact");
    }
    let inner1: BTreeSet<Vertex> = p1[1..p1.len() - 1].iter().copied().collect();
    let inner2: BTreeSet<Vertex> = p2[1..p2.len() - 1].iter().copied().collect();
    if inner1.len() + 2 != p1.len() || inner2.len() + 2 != p2.len() || !inner1.is_disjoint(&inner2) {
        return bad("paths intersect");
    }
    let mut sets: [Vec<Vertex>; 4] = Default::default();
    for i in 0..4 {
        let (a, b) = (pos[i], pos[(i + 1) % 4]);
        let mut p = a;
        while p != b {
            sets[i].push(cyc[p]);
            p = (p + 1) % len;
        }
    }
    sets[0].extend(inner1.iter().copied());
    sets[1].extend(inner2.iter().copied());
    let mut cross_edges = Vec::new();
    for i in 0..4 {
        let j = (i + 1) % 4;
        let last = cyc[(pos[j] + len - 1) % len];
        let (a, b, x, y) = if i < j { (i, j, last, v[j]) } else { (j, i, v[j], last) };
        cross_edges.push((a, b, x, y));
    }
    cross_edges.push((0, 2, p1[p1.len() - 2], v[2]));
    cross_edges.push((1, 3, p2[p2.len() - 2], v[3]));
    cross_edges.sort_unstable();
    for s in &mut sets {
        s.sort_unstable();
    }
    let cert = K4Certificate {
        branch_sets: sets,
        root_witnesses: v,
        cross_edges,
    };
    if check_certificate(g, &v, &cert).is_err() {
        return bad("constructed sets fail validation");
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{validate_solution, VirtualEdge};
    use proptest::prelude::*;

    fn w(x: i64) -> Weight<i64> {
        Weight::Finite(x)
    }

    fn unit(n: usize, edges: &[(usize, usize)]) -> Multigraph<i64> {
        Multigraph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, w(1)))).unwrap()
    }

    fn grid(r: usize, c: usize) -> Multigraph<i64> {
        let mut e = vec![];
        for i in 0..r {
            for j in 0..c {
                if j + 1 < c {
                    e.push((i * c + j, i * c + j + 1));
                }
                if i + 1 < r {
                    e.push((i * c + j, (i + 1) * c + j));
                }
            }
        }
        unit(r * c, &e)
    }

    fn k4() -> Multigraph<i64> {
        unit(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    /// Minimum over all edge subsets that connect the terminals.
    fn exhaustive(g: &Multigraph<i64>, terms: &[usize]) -> Weight<i64> {
        let m = g.edge_count();
        let mut best = Weight::Infinite;
        for mask in 0u32..(1 << m) {
            let mut uf = UnionFind::new(g.vertex_count());
            let mut cost = w(0);
            for e in 0..m {
                if mask & (1 << e) != 0 {
                    uf.union(g.edge(e).u, g.edge(e).v);
                    cost = cost + g.edge(e).weight;
                }
            }
            let r = uf.find(terms[0]);
            if terms.iter().all(|&t| uf.find(t) == r) && cost < best {
                best = cost;
            }
        }
        best
    }

    #[test]
    fn dw_small_cases() {
        let g = unit(3, &[(0, 1), (1, 2)]);
        let one = dreyfus_wagner(&g, &[1]).unwrap();
        assert_eq!((one.cost, one.edges.len(), one.vertices), (w(0), 0, vec![1]));
        assert_eq!(dreyfus_wagner(&g, &[0, 2]).unwrap().cost, w(2));
        let g = grid(3, 3);
        assert_eq!(exhaustive(&g, &[0, 2, 6, 8]), w(6));
        let t = dreyfus_wagner(&g, &[0, 2, 6, 8]).unwrap();
        assert_eq!((t.cost, t.edges.len()), (w(6), 6));
        assert_eq!(dreyfus_wagner(&unit(2, &[]), &[0, 1]), Err(OracleError::Unreachable));
    }

    #[test]
    fn reduction_matches_dw_without_virtual_edges() {
        let g = grid(3, 3);
        let inst = Instance::steiner(g.clone(), [0, 4, 8]).unwrap();
        let sol = solve_vest_by_reduction(&inst).unwrap();
        assert_eq!(sol.cost, dreyfus_wagner(&g, &[0, 4, 8]).unwrap().cost);
        assert_eq!(validate_solution(&inst, &sol), Ok(()));
    }

    #[test]
    fn reduction_takes_cheapest_case() {
        // path 0-1-2, terminal 0, virtual edge 1-2
        let g = Multigraph::from_edges(3, [(0, 1, w(3)), (1, 2, w(1))]).unwrap();
        let ve = VirtualEdge::new(1, 2, w(4), w(9), w(6), w(2));
        let inst = Instance::new(g, [0], vec![ve]).unwrap();
        // u: 3+4, v: 4+9, c: 3+6, d: 4+2
        let sol = solve_vest_by_reduction(&inst).unwrap();
        assert_eq!(sol.cost, w(6));
        assert_eq!(sol.statuses, vec![VeStatus::Disconnect]);
        assert_eq!(validate_solution(&inst, &sol), Ok(()));
    }

    #[test]
    fn reduction_reports_infeasible() {
        let g = Multigraph::from_edges(3, [(0, 1, w(1))]).unwrap();
        let ve = VirtualEdge::new(1, 2, Weight::Infinite, Weight::Infinite, Weight::Infinite, Weight::Infinite);
        let inst = Instance::new(g, [0], vec![ve]).unwrap();
        assert_eq!(solve_vest_by_reduction(&inst), Err(OracleError::Infeasible));
    }

    #[test]
    fn rooted_k4_examples() {
        assert_eq!(has_rooted_k4(&k4(), &[0, 1, 2]).unwrap(), None);
        let cert = has_rooted_k4(&k4(), &[0, 1, 2, 3]).unwrap().unwrap();
        assert!(cert.branch_sets.iter().all(|s| s.len() == 1));
        assert_eq!(check_certificate(&k4(), &[0, 1, 2, 3], &cert), Ok(()));
        let c4 = unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(has_rooted_k4(&c4, &[0, 1, 2, 3]).unwrap(), None);
        // a 3x3 grid has a K4 minor, but not one rooted at its corners
        assert_eq!(has_rooted_k4(&grid(3, 3), &[0, 2, 6, 8]).unwrap(), None);
        assert!(has_rooted_k4(&grid(3, 3), &[1, 3, 4, 5]).unwrap().is_some());
        let big = grid(4, 4);
        assert!(matches!(has_rooted_k4(&big, &[0, 3, 12, 15]), Err(OracleError::InstanceTooLarge { .. })));
    }

    #[test]
    fn minor_free_instances() {
        let k4_inst = Instance::steiner(k4(), [0, 1, 2, 3]).unwrap();
        assert!(!instance_is_minor_free(&k4_inst).unwrap());
        let c4 = Instance::steiner(unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), [0, 1, 2, 3]).unwrap();
        assert!(instance_is_minor_free(&c4).unwrap());
        // K4 minus edge 0-1, with that pair as a virtual edge, rooted at 2 and 3
        let g = unit(4, &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let ve = VirtualEdge::new(0, 1, w(1), w(1), w(1), w(0));
        let inst = Instance::new(g, [2, 3], vec![ve]).unwrap();
        assert!(instance_is_minor_free(&inst).unwrap());
    }

    #[test]
    fn certificate_from_k4_drawn_on_a_cycle() {
        let cert = certificate_from_cycle_and_paths(&k4(), &[0, 1, 2, 3], [0, 1, 2, 3], &[0, 2], &[1, 3]).unwrap();
        assert!(cert.branch_sets.iter().all(|s| s.len() == 1));
    }

    #[test]
    fn certificate_from_long_cycle() {
        // 8-cycle 0..8 plus path 0-8-4 and path 2-9-6
        let mut e: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        e.extend([(0, 8), (8, 4), (2, 9), (9, 6)]);
        let g = unit(10, &e);
        let cycle: Vec<usize> = (0..8).collect();
        let cert = certificate_from_cycle_and_paths(&g, &cycle, [0, 2, 4, 6], &[0, 8, 4], &[2, 9, 6]).unwrap();
        assert_eq!(cert.branch_sets[0], vec![0, 1, 8]);
        assert_eq!(cert.branch_sets[1], vec![2, 3, 9]);
        assert_eq!(cert.branch_sets[2], vec![4, 5]);
        let found = has_rooted_k4(&g, &[0, 2, 4, 6]).unwrap().unwrap();
        assert_eq!(check_certificate(&g, &[0, 2, 4, 6], &found), Ok(()));
        // reversed orientation is accepted too
        let rev: Vec<usize> = cycle.iter().rev().copied().collect();
        assert!(certificate_from_cycle_and_paths(&g, &rev, [0, 2, 4, 6], &[0, 8, 4], &[2, 9, 6]).is_ok());
    }

    #[test]
    fn certificate_rejects_touching_paths() {
        let mut e: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        e.extend([(0, 8), (8, 4), (2, 8), (8, 6)]);
        let g = unit(9, &e);
        let cycle: Vec<usize> = (0..8).collect();
        let r = certificate_from_cycle_and_paths(&g, &cycle, [0, 2, 4, 6], &[0, 8, 4], &[2, 8, 6]);
        assert!(matches!(r, Err(OracleError::PatternViolation(_))));
    }

    fn arb_connected(max_n: usize, max_extra: usize) -> impl Strategy<Value = Multigraph<i64>> {
        (3..=max_n).prop_flat_map(move |n| {
            (
                proptest::collection::vec((0usize..1000, 0i64..9), n - 1),
                proptest::collection::vec((0..n, 0..n, 0i64..9), 0..=max_extra),
            )
                .prop_map(move |(tree, extra)| {
                    let mut g = Multigraph::new(n);
                    for (i, (p, wt)) in tree.into_iter().enumerate() {
                        g.add_edge(i + 1, p % (i + 1), w(wt)).unwrap();
                    }
                    for (a, b, wt) in extra {
                        if a != b {
                            g.add_edge(a, b, w(wt)).unwrap();
                        }
                    }
                    g
                })
        })
    }

    /// Tries every assignment of vertices to four sets or to "unused".
    fn naive_rooted_k4(g: &Multigraph<i64>, roots: &[usize]) -> bool {
        let n = g.vertex_count();
        let mut code = vec![0usize; n];
        loop {
            let mut sets: [Vec<usize>; 4] = Default::default();
            for x in 0..n {
                if code[x] < 4 {
                    sets[code[x]].push(x);
                }
            }
            if sets.iter().all(|s| !s.is_empty()) {
                let cert = K4Certificate {
                    root_witnesses: std::array::from_fn(|i| *sets[i].iter().find(|x| roots.contains(x)).unwrap_or(&sets[i][0])),
                    cross_edges: {
                        let mut c = vec![];
                        for i in 0..4 {
                            for j in i + 1..4 {
                                for &x in &sets[i] {
                                    for &y in &sets[j] {
                                        if g.min_edge_between(x, y).is_some() {
                                            c.push((i, j, x, y));
                                        }
                                    }
                                }
                            }
                        }
                        c
                    },
                    branch_sets: sets,
                };
                if check_certificate(g, roots, &cert).is_ok() {
                    return true;
                }
            }
            let mut i = 0;
            while i < n && code[i] == 4 {
                code[i] = 0;
                i += 1;
            }
            if i == n {
                return false;
            }
            code[i] += 1;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn k4_search_matches_naive(g in arb_connected(7, 7), mask in 0u32..128) {
            let roots: Vec<usize> = (0..g.vertex_count()).filter(|&x| mask & (1 << x) != 0).collect();
            prop_assert_eq!(has_rooted_k4(&g, &roots).unwrap().is_some(), naive_rooted_k4(&g, &roots));
        }

        #[test]
        fn dw_matches_exhaustive(g in arb_connected(7, 6), mask in 1u32..128) {
            let terms: Vec<usize> = (0..g.vertex_count()).filter(|&x| mask & (1 << x) != 0).collect();
            prop_assume!(!terms.is_empty());
            let t = dreyfus_wagner(&g, &terms).unwrap();
            prop_assert_eq!(t.cost, exhaustive(&g, &terms));
            let sum: Weight<i64> = t.edges.iter().map(|&e| g.edge(e).weight).sum();
            prop_assert_eq!(sum, t.cost);
        }

        #[test]
        fn reduction_cost_is_reproducible(g in arb_connected(7, 5), mask in 0u32..128,
                                          ves in proptest::collection::vec((0usize..7, 0usize..7, 0i64..6, 0i64..6, 0i64..6), 1..3)) {
            let n = g.vertex_count();
            let virtual_edges: Vec<_> = ves.into_iter()
                .filter(|&(a, b, ..)| a % n != b % n)
                .map(|(a, b, x, y, c)| VirtualEdge::new(a % n, b % n, w(x), w(y), w(c), w(x.min(y).min(c))))
                .collect();
            let terms: Vec<usize> = (0..n).filter(|&x| mask & (1 << x) != 0).collect();
            let inst = Instance::new(g, terms, virtual_edges).unwrap();
            if let Ok(sol) = solve_vest_by_reduction(&inst) {
                prop_assert_eq!(validate_solution(&inst, &sol), Ok(()));
            }
        }

        #[test]
        fn certificates_always_check(g in arb_connected(8, 8), mask in 0u32..256) {
            let roots: Vec<usize> = (0..g.vertex_count()).filter(|&x| mask & (1 << x) != 0).collect();
            if let Some(cert) = has_rooted_k4(&g, &roots).unwrap() {
                prop_assert_eq!(check_certificate(&g, &roots, &cert), Ok(()));
            }
        }
    }
}

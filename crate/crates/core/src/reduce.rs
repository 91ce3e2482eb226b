//! Preprocessing: edge pruning and removal of hanging regions with at most
//! one root.
//!
//! The loop runs edge pruning to a fixpoint, then tries, in order, deleting
//! a rootless component behind a cut vertex, replacing a rootless component
//! behind a 2-cut by a shortest-path edge, and folding a component with a
//! single root behind a 2-cut into a virtual edge. Any change restarts the
//! loop at edge pruning.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{dijkstra, Vertex};
use crate::instance::{normalize, Instance, VirtualEdge};
use crate::oracle::solve_vest_by_reduction;
use crate::trace::{FoldRecord, NodeKind, RealOrigin, RecursionTrace, TraceBody, VirtOrigin, Work};
use crate::weight::{Scalar, Weight};

/// Merges two virtual edges on the same endpoints, `e2` oriented like `e1`.
/// The flag tells whether the merged connect case connects through `e1`.
pub fn merge_parallel_virtual<S: Scalar>(e1: &VirtualEdge<S>, e2: &VirtualEdge<S>) -> (VirtualEdge<S>, bool) {
    debug_assert!(e1.u == e2.u && e1.v == e2.v);
    let first = e1.weight_connect + e2.weight_disconnect;
    let second = e1.weight_disconnect + e2.weight_connect;
    let merged = VirtualEdge::new(
        e1.u,
        e1.v,
        e1.weight_u + e2.weight_u,
        e1.weight_v + e2.weight_v,
        first.min(second),
        e1.weight_disconnect + e2.weight_disconnect,
    );
    (merged, first <= second)
}

/// Folds a real edge of weight `w` parallel to `e` into `e`. The flag tells
/// whether the connect case now goes through the real edge.
pub fn fold_real_into_virtual<S: Scalar>(w: Weight<S>, e: &VirtualEdge<S>) -> (VirtualEdge<S>, bool) {
    let via = e.weight_disconnect + w;
    let mut out = e.clone();
    let via_edge = via < e.weight_connect;
    if via_edge {
        out.weight_connect = via;
    }
    (out, via_edge)
}

/// One pass of edge pruning: drops infinite real edges, keeps the lightest
/// of parallel real edges, merges parallel virtual edges and folds a real
/// edge into a parallel virtual edge. One pass reaches the fixpoint.
pub fn prune_edges<S: Scalar>(work: &Work<S>) -> (Work<S>, bool) {
    let g = &work.inst.graph;
    let key = |a: Vertex, b: Vertex| (a.min(b), a.max(b));
    let mut real: BTreeMap<(Vertex, Vertex), usize> = BTreeMap::new();
    let mut changed = false;
    for (id, e) in g.edges().iter().enumerate() {
        if e.weight.is_infinite() {
            changed = true;
            continue;
        }
        let k = key(e.u, e.v);
        match real.get(&k) {
            Some(&other) if (g.edge(other).weight, other) <= (e.weight, id) => changed = true,
            Some(_) => {
                changed = true;
                real.insert(k, id);
            }
            None => {
                real.insert(k, id);
            }
        }
    }
    let mut virt: BTreeMap<(Vertex, Vertex), (VirtualEdge<S>, VirtOrigin<S>)> = BTreeMap::new();
    let mut order: Vec<(Vertex, Vertex)> = Vec::new();
    for (i, e) in work.inst.virtual_edges.iter().enumerate() {
        let k = key(e.u, e.v);
        let origin = work.virt_origin[i].clone();
        match virt.remove(&k) {
            None => {
                virt.insert(k, (e.clone(), origin));
                order.push(k);
            }
            Some((acc, acc_origin)) => {
                changed = true;
                let (e2, o2) = if e.u == acc.u {
                    (e.clone(), origin)
                } else {
                    (e.reversed(), VirtOrigin::Reversed(Arc::new(origin)))
                };
                let (merged, connect_first) = merge_parallel_virtual(&acc, &e2);
                let o = VirtOrigin::Merged {
                    a: Arc::new(acc_origin),
                    b: Arc::new(o2),
                    connect_first,
                };
                virt.insert(k, (merged, o));
            }
        }
    }
    for k in &order {
        if let Some(id) = real.remove(k) {
            changed = true;
            let (e, o) = virt.remove(k).expect("present");
            let (folded, via_edge) = fold_real_into_virtual(g.edge(id).weight, &e);
            let o = VirtOrigin::Absorbed {
                inner: Arc::new(o),
                edge: work.real_origin[id].clone(),
                via_edge,
            };
            virt.insert(*k, (folded, o));
        }
    }
    if !changed {
        return (work.clone(), false);
    }
    let mut keep_ids: Vec<usize> = real.into_values().collect();
    keep_ids.sort_unstable();
    let mut graph = crate::graph::Multigraph::new(g.vertex_count());
    let mut real_origin = Vec::new();
    for id in keep_ids {
        let e = g.edge(id);
        graph.add_edge(e.u, e.v, e.weight).expect("valid edge");
        real_origin.push(work.real_origin[id].clone());
    }
    let mut virtual_edges = Vec::new();
    let mut virt_origin = Vec::new();
    for k in order {
        let (e, o) = virt.remove(&k).expect("present");
        virtual_edges.push(e);
        virt_origin.push(o);
    }
    let inst = Instance::new(graph, work.inst.terminals.clone(), virtual_edges).expect("pruned instance");
    let out = Work {
        inst,
        vmap: work.vmap.clone(),
        real_origin,
        virt_origin,
        offset: work.offset,
        forced: work.forced.clone(),
    };
    (out, true)
}

/// Simple adjacency of the graph with virtual edges added as ordinary edges.
pub fn skeleton<S: Scalar>(inst: &Instance<S>) -> Vec<Vec<Vertex>> {
    let n = inst.vertex_count();
    let mut adj: Vec<Vec<Vertex>> = (0..n).map(|x| inst.graph.simple_neighbors(x)).collect();
    for e in &inst.virtual_edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Components of the skeleton after removing `removed`, each sorted.
pub fn skeleton_components(adj: &[Vec<Vertex>], removed: &[bool]) -> Vec<Vec<Vertex>> {
    let n = adj.len();
    let mut seen = removed.to_vec();
    let mut parts = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut part = vec![s];
        let mut i = 0;
        while i < part.len() {
            let x = part[i];
            i += 1;
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    part.push(y);
                }
            }
        }
        part.sort_unstable();
        parts.push(part);
    }
    parts
}

/// Number of roots incident with the vertex set: terminals inside it plus
/// virtual edges with at least one endpoint inside it.
pub fn roots_incident<S: Scalar>(inst: &Instance<S>, set: &[Vertex]) -> usize {
    let mut inside = vec![false; inst.vertex_count()];
    for &x in set {
        inside[x] = true;
    }
    inst.terminals.iter().filter(|&&t| inside[t]).count()
        + inst.virtual_edges.iter().filter(|e| inside[e.u] || inside[e.v]).count()
}

fn without<S: Scalar>(work: &Work<S>, set: &[Vertex]) -> Work<S> {
    let mut keep = vec![true; work.inst.vertex_count()];
    for &x in set {
        keep[x] = false;
    }
    work.restrict(&keep)
}

/// Deletes the first rootless component hanging off a cut vertex, or a
/// whole rootless component when other components carry roots.
pub fn prune_rootless_1cut<S: Scalar>(work: &Work<S>) -> Option<Work<S>> {
    let inst = &work.inst;
    let n = inst.vertex_count();
    let adj = skeleton(inst);
    if inst.root_count() > 0 {
        let parts = skeleton_components(&adj, &vec![false; n]);
        if parts.len() > 1 {
            if let Some(a) = parts.iter().find(|p| roots_incident(inst, p) == 0) {
                return Some(without(work, a));
            }
        }
    }
    let mut removed = vec![false; n];
    for v in 0..n {
        removed[v] = true;
        let parts = skeleton_components(&adj, &removed);
        removed[v] = false;
        let hanging: Vec<&Vec<Vertex>> = parts.iter().filter(|p| p.iter().any(|x| adj[v].contains(x))).collect();
        if hanging.len() < 2 {
            continue;
        }
        if let Some(a) = hanging.iter().find(|p| roots_incident(inst, p) == 0) {
            return Some(without(work, a));
        }
    }
    None
}

/// Components `A` of the skeleton minus `{u, v}` whose neighborhood is
/// exactly `{u, v}`, for every pair `u < v` in lexicographic order.
fn two_cut_components(adj: &[Vec<Vertex>]) -> impl Iterator<Item = (Vertex, Vertex, Vec<Vertex>)> + '_ {
    let n = adj.len();
    (0..n).flat_map(move |u| {
        (u + 1..n).flat_map(move |v| {
            let mut removed = vec![false; n];
            removed[u] = true;
            removed[v] = true;
            let parts = skeleton_components(adj, &removed);
            if parts.len() < 2 {
                return Vec::new();
            }
            parts
                .into_iter()
                .filter(|p| p.iter().any(|x| adj[u].contains(x)) && p.iter().any(|x| adj[v].contains(x)))
                .map(|p| (u, v, p))
                .collect::<Vec<_>>()
        })
    })
}

/// Replaces the first rootless component behind a 2-cut `{u, v}` by a real
/// edge `uv` weighted by the shortest `u`-`v` path through it.
pub fn prune_rootless_2cut<S: Scalar>(work: &Work<S>) -> Option<Work<S>> {
    let adj = skeleton(&work.inst);
    let (u, v, a) = two_cut_components(&adj).find(|(_, _, a)| roots_incident(&work.inst, a) == 0)?;
    let side = work.side(&a, &[u, v], &[], false);
    // side vertices are renumbered increasingly, so u and v keep their rank
    let lu = side.vmap.iter().position(|&x| x == work.vmap[u]).expect("u kept");
    let lv = side.vmap.iter().position(|&x| x == work.vmap[v]).expect("v kept");
    let (dist, pred) = dijkstra(&side.inst.graph, lu, &[]);
    let mut out = without(work, &a);
    if dist[lv].is_finite() {
        let mut path = Vec::new();
        let mut at = lv;
        while let Some(e) = pred[at] {
            path.push(side.real_origin[e].clone());
            at = side.inst.graph.edge(e).other(at);
        }
        let nu = out.vmap.iter().position(|&x| x == work.vmap[u]).expect("u kept");
        let nv = out.vmap.iter().position(|&x| x == work.vmap[v]).expect("v kept");
        out.inst.graph.add_edge(nu, nv, dist[lv]).expect("distinct cut vertices");
        out.real_origin.push(RealOrigin::Shortcut(path.into()));
    }
    Some(out)
}

/// Solves a side instance with the exhaustive oracle, as a base-case trace.
pub fn solve_side_by_oracle<S: Scalar>(side: Work<S>) -> Option<Arc<RecursionTrace<S>>> {
    let mut side = side;
    side.inst = normalize(&side.inst);
    let sol = solve_vest_by_reduction(&side.inst).ok()?;
    let cost = sol.cost + side.offset;
    if cost.is_infinite() {
        return None;
    }
    Some(Arc::new(RecursionTrace {
        kind: NodeKind::BaseCase,
        cost,
        forced: side.forced.clone(),
        body: TraceBody::Leaf {
            work: Arc::new(side),
            solution: sol,
        },
    }))
}

/// Folds the first component with exactly one root behind a 2-cut `{u, v}`
/// into a new virtual edge `uv`.
pub fn fold_single_root_2cut<S: Scalar>(work: &Work<S>) -> Option<Work<S>> {
    let adj = skeleton(&work.inst);
    let (u, v, a) = two_cut_components(&adj).find(|(_, _, a)| roots_incident(&work.inst, a) == 1)?;
    let tu = solve_side_by_oracle(work.side(&a, &[u], &[u], false));
    let tv = solve_side_by_oracle(work.side(&a, &[v], &[v], false));
    let tc = solve_side_by_oracle(work.side(&a, &[u, v], &[u, v], false));
    let cost = |t: &Option<Arc<RecursionTrace<S>>>| t.as_ref().map_or(Weight::Infinite, |t| t.cost);
    // Not min(w(u), w(v)): the single root may be a virtual edge reaching a
    // cut vertex, and then the other side can cover it.
    let td = solve_side_by_oracle(work.side(&a, &[u, v], &[u, v], true));
    let edge = VirtualEdge::new(u, v, cost(&tu), cost(&tv), cost(&tc), cost(&td));
    let record = FoldRecord {
        traces: [tu, tv, tc, td],
    };
    let mut out = without(work, &a);
    let mut edge = edge;
    edge.u = out.vmap.iter().position(|&x| x == work.vmap[u]).expect("u kept");
    edge.v = out.vmap.iter().position(|&x| x == work.vmap[v]).expect("v kept");
    out.inst.virtual_edges.push(edge);
    out.virt_origin.push(VirtOrigin::Fold(Arc::new(record)));
    Some(out)
}

/// Runs the preprocessing loop to its fixpoint.
pub fn preprocess<S: Scalar>(work: &Work<S>) -> Work<S> {
    let mut cur = work.clone();
    loop {
        cur.inst = normalize(&cur.inst);
        let size = cur.inst.vertex_count();
        let (pruned, _) = prune_edges(&cur);
        cur = pruned;
        let next = prune_rootless_1cut(&cur)
            .or_else(|| prune_rootless_2cut(&cur))
            .or_else(|| fold_single_root_2cut(&cur));
        match next {
            Some(w) => {
                debug_assert!(w.inst.vertex_count() < size);
                cur = w;
            }
            None => return cur,
        }
    }
}

pub fn preprocess_instance<S: Scalar>(inst: &Instance<S>) -> Work<S> {
    preprocess(&Work::from_instance(inst.clone()))
}

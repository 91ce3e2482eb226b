//! The recursive solver.
//!
//! Each call normalizes and preprocesses its working instance, then either
//! solves it directly (few roots), splits it at a cut vertex, folds the
//! smaller side of a 2-cut into a virtual edge, or runs the interval dynamic
//! program on a cycle through all roots.

use std::sync::Arc;

use thiserror::Error;

use crate::cycle::{find_root_cycle, CycleError};
use crate::graph::{find_cut_vertex, find_two_cut, Vertex};
use crate::instance::{normalize, Instance, InstanceError, Solution, VirtualEdge};
use crate::intervaldp::{solve_on_cycle, DpError};
use crate::oracle::{solve_vest_by_reduction, K4Certificate, OracleError};
use crate::reduce::{preprocess, skeleton, skeleton_components};
use crate::trace::{reconstruct, FoldRecord, NodeKind, RecursionTrace, TraceBody, TraceError, VirtOrigin, Work};
use crate::weight::{Scalar, Weight};

/// Instances with at most this many roots are solved by enumeration.
pub const ROOT_THRESHOLD: usize = 4;

/// A rooted K4-minor found while solving, stated on the working instance
/// where it showed up. `vmap` maps its vertices to input vertices; vertices
/// at or past `instance.vertex_count()` subdivide its virtual edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorReport<S> {
    pub certificate: K4Certificate,
    pub instance: Instance<S>,
    pub vmap: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError<S: Scalar> {
    #[error("the instance has a K4-minor rooted at its roots")]
    MinorFound(Box<MinorReport<S>>),
    #[error("no root cycle and no certificate: {0}")]
    MinorSuspected(String),
    #[error("no feasible solution")]
    Infeasible,
    #[error(transparent)]
    InvalidInstance(#[from] InstanceError),
    #[error("base case: {0}")]
    Oracle(OracleError),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub recursion_nodes: usize,
    pub dp_entries: usize,
    pub cycle_runs: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutput<S> {
    pub solution: Solution<S>,
    pub trace: Arc<RecursionTrace<S>>,
    pub stats: SolveStats,
}

type Node<S> = Option<Arc<RecursionTrace<S>>>;
type Summary<S> = (VirtualEdge<S>, Arc<FoldRecord<S>>);

#[derive(Default)]
pub(crate) struct Ctx {
    stats: SolveStats,
}

fn leaf<S: Scalar>(kind: NodeKind, work: Work<S>, solution: Solution<S>) -> Node<S> {
    let cost = solution.cost + work.offset;
    if cost.is_infinite() {
        return None;
    }
    Some(Arc::new(RecursionTrace {
        kind,
        cost,
        forced: work.forced.clone(),
        body: TraceBody::Leaf {
            work: Arc::new(work),
            solution,
        },
    }))
}

fn oracle_leaf<S: Scalar>(work: Work<S>) -> Result<Node<S>, SolveError<S>> {
    match solve_vest_by_reduction(&work.inst) {
        Ok(sol) => Ok(leaf(NodeKind::BaseCase, work, sol)),
        Err(OracleError::Infeasible | OracleError::Unreachable) => Ok(None),
        Err(e) => Err(SolveError::Oracle(e)),
    }
}

fn solve_work<S: Scalar>(work: Work<S>, ctx: &mut Ctx) -> Result<Node<S>, SolveError<S>> {
    let mut work = work;
    work.inst = normalize(&work.inst);
    let work = preprocess(&work);
    let inst = &work.inst;
    if inst.root_count() == 0 {
        return Ok(Some(Arc::new(RecursionTrace {
            kind: NodeKind::BaseCase,
            cost: work.offset,
            forced: work.forced.clone(),
            body: TraceBody::Empty,
        })));
    }
    let adj = skeleton(inst);
    if skeleton_components(&adj, &vec![false; inst.vertex_count()]).len() > 1 {
        return Ok(None);
    }
    if inst.root_count() <= ROOT_THRESHOLD {
        return oracle_leaf(work);
    }
    let skel = inst.skeleton_graph();
    let internal = |e: crate::graph::GraphError| SolveError::Internal(e.to_string());
    if let Some(cut) = find_cut_vertex(&skel).map_err(internal)? {
        let v = cut.vertices[0];
        let mut children = Vec::new();
        let mut cost = work.offset;
        for part in [&cut.side_a, &cut.side_b] {
            let Some(child) = solve_work(work.side(part, &[v], &[v], false), ctx)? else {
                return Ok(None);
            };
            cost = cost + child.cost;
            children.push(child);
        }
        return Ok(Some(Arc::new(RecursionTrace {
            kind: NodeKind::CutVertex,
            cost,
            forced: work.forced.clone(),
            body: TraceBody::CutVertex { children },
        })));
    }
    if let Some(cut) = find_two_cut(&skel).map_err(internal)? {
        return fold_two_cut(&work, cut.vertices[0], cut.vertices[1], &cut.side_a, ctx);
    }
    three_connected(work, ctx)
}

/// Solves side `a` of the 2-cut `{u, v}` once per status and summarizes
/// it as a virtual edge from `u` to `v`, keeping the four sub-solutions.
pub(crate) fn summarize_two_cut<S: Scalar>(
    work: &Work<S>,
    u: Vertex,
    v: Vertex,
    a: &[Vertex],
    ctx: &mut Ctx,
) -> Result<Summary<S>, SolveError<S>> {
    let tu = solve_work(work.side(a, &[u], &[u], false), ctx)?;
    let tv = solve_work(work.side(a, &[v], &[v], false), ctx)?;
    let tc = solve_work(work.side(a, &[u, v], &[u, v], false), ctx)?;
    let td = solve_work(work.side(a, &[u, v], &[u, v], true), ctx)?;
    let cost = |t: &Node<S>| t.as_ref().map_or(Weight::Infinite, |t| t.cost);
    let edge = VirtualEdge::new(u, v, cost(&tu), cost(&tv), cost(&tc), cost(&td));
    Ok((edge, Arc::new(FoldRecord { traces: [tu, tv, tc, td] })))
}

/// Replaces side `a` of the 2-cut `{u, v}` by a virtual edge and solves
/// what is left.
fn fold_two_cut<S: Scalar>(work: &Work<S>, u: Vertex, v: Vertex, a: &[Vertex], ctx: &mut Ctx) -> Result<Node<S>, SolveError<S>> {
    let (edge, fold) = summarize_two_cut(work, u, v, a, ctx)?;
    let mut keep = vec![true; work.inst.vertex_count()];
    for &x in a {
        keep[x] = false;
    }
    let mut rest = work.restrict(&keep);
    let local = |x: Vertex| rest.vmap.iter().position(|&y| y == work.vmap[x]).expect("cut vertex kept");
    let mut edge = edge;
    (edge.u, edge.v) = (local(u), local(v));
    rest.inst.virtual_edges.push(edge);
    rest.virt_origin.push(VirtOrigin::Fold(fold.clone()));
    let Some(side_b) = solve_work(rest, ctx)? else {
        return Ok(None);
    };
    Ok(Some(Arc::new(RecursionTrace {
        kind: NodeKind::TwoCut,
        cost: side_b.cost,
        forced: Vec::new(),
        body: TraceBody::TwoCut { fold, side_b },
    })))
}

fn three_connected<S: Scalar>(work: Work<S>, ctx: &mut Ctx) -> Result<Node<S>, SolveError<S>> {
    let rc = match find_root_cycle(&work.inst) {
        Ok(rc) => rc,
        Err(CycleError::MinorFound(certificate)) => {
            return Err(SolveError::MinorFound(Box::new(MinorReport {
                certificate: *certificate,
                instance: work.inst.clone(),
                vmap: work.vmap.clone(),
            })))
        }
        Err(CycleError::Uncertified(why)) => return Err(SolveError::MinorSuspected(why)),
        Err(e) => return Err(SolveError::Internal(e.to_string())),
    };
    ctx.stats.cycle_runs += 1;
    let (sol, stats) = match solve_on_cycle(&work.inst, &rc) {
        Ok(x) => x,
        Err(DpError::Infeasible) => return Ok(None),
        Err(e) => return Err(SolveError::Internal(e.to_string())),
    };
    ctx.stats.dp_entries += stats.dp_entries;
    Ok(leaf(NodeKind::ThreeConnected, work, sol))
}

/// Optimal solution of `inst`, its recursion trace and counters.
///
/// The instance must not have a K4-minor rooted at its roots; when the
/// solver runs into one it reports it instead of answering.
pub fn solve<S: Scalar>(inst: &Instance<S>) -> Result<SolveOutput<S>, SolveError<S>> {
    inst.check_virtual_weights()?;
    let n = inst.vertex_count();
    let adj = skeleton(inst);
    let parts = skeleton_components(&adj, &vec![false; n]);
    let rooted: Vec<&Vec<Vertex>> = parts.iter().filter(|p| crate::reduce::roots_incident(inst, p) > 0).collect();
    let work = Work::from_instance(inst.clone());
    let work = match rooted[..] {
        [] => {
            let trace = Arc::new(RecursionTrace {
                kind: NodeKind::BaseCase,
                cost: Weight::zero(),
                forced: Vec::new(),
                body: TraceBody::Empty,
            });
            return Ok(SolveOutput {
                solution: Solution::empty(),
                stats: SolveStats {
                    recursion_nodes: 1,
                    ..SolveStats::default()
                },
                trace,
            });
        }
        [part] if part.len() < n => {
            let mut keep = vec![false; n];
            for &x in part {
                keep[x] = true;
            }
            work.restrict(&keep)
        }
        [_] => work,
        _ => return Err(SolveError::Infeasible),
    };
    let mut ctx = Ctx::default();
    let trace = solve_work(work, &mut ctx)?.ok_or(SolveError::Infeasible)?;
    let solution = reconstruct(inst, &trace)?;
    if solution.cost != trace.cost {
        return Err(SolveError::Internal(format!(
            "reconstructed tree costs {:?}, expected {:?}",
            solution.cost, trace.cost
        )));
    }
    ctx.stats.recursion_nodes = trace.node_count();
    Ok(SolveOutput { solution, trace, stats: ctx.stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{grid_graph, k5_three_terminals, random_minor_free, rim_instance, rng, RandomParams};
    use crate::graph::Multigraph;
    use crate::instance::validate_solution;
    use crate::oracle::{dreyfus_wagner, instance_is_minor_free, solve_vest_by_reduction};
    use crate::graph::find_two_cut;
    use rand::Rng;

    fn unit(n: usize, edges: &[(usize, usize)]) -> Multigraph<i64> {
        let mut g = Multigraph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b, Weight::Finite(1)).unwrap();
        }
        g
    }

    fn check(inst: &Instance<i64>) -> Weight<i64> {
        let out = solve(inst).unwrap_or_else(|e| panic!("{e}: {inst:?}"));
        validate_solution(inst, &out.solution).unwrap_or_else(|e| panic!("{e:?}: {inst:?}"));
        let want = solve_vest_by_reduction(inst).unwrap().cost;
        assert_eq!(out.solution.cost, want, "{inst:?}");
        out.solution.cost
    }

    #[test]
    fn fix_tri() {
        let inst = k5_three_terminals();
        assert_eq!(check(&inst), Weight::Finite(2));
        assert_eq!(solve(&inst).unwrap().solution.edges.len(), 2);
    }

    #[test]
    fn triangles_sharing_a_vertex() {
        let g = unit(5, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]);
        let inst = Instance::steiner(g.clone(), [1, 2, 3, 4]).unwrap();
        assert_eq!(check(&inst), dreyfus_wagner(&g, &[1, 2, 3, 4]).unwrap().cost);
        assert_eq!(check(&inst), Weight::Finite(4));
        let out = solve(&inst).unwrap();
        assert!(out.solution.vertices.contains(&0));
    }

    #[test]
    fn grid_corners() {
        let inst = Instance::steiner(grid_graph(3, 3, || 1), [0, 2, 6, 8]).unwrap();
        assert_eq!(check(&inst), Weight::Finite(6));
    }

    #[test]
    fn two_cut_summary() {
        // u = 0, v = 1, side A = {t = 2}; side B is a square through u and v
        let mut g = Multigraph::new(5);
        for (a, b, w) in [(2, 0, 2), (2, 1, 5), (0, 3, 1), (3, 1, 1), (0, 4, 1), (4, 1, 1), (3, 4, 1)] {
            g.add_edge(a, b, Weight::Finite(w)).unwrap();
        }
        let inst = Instance::steiner(g, [2, 3, 4]).unwrap();
        let work = Work::from_instance(inst);
        let (edge, fold) = summarize_two_cut(&work, 0, 1, &[2], &mut Ctx::default()).unwrap();
        let w = |x| Weight::Finite(x);
        assert_eq!(
            (edge.weight_u, edge.weight_v, edge.weight_connect, edge.weight_disconnect),
            (w(2), w(5), w(7), w(2))
        );
        assert!(fold.traces.iter().all(Option::is_some));
    }

    #[test]
    fn random_minor_free_match_oracle() {
        let mut r = rng(21);
        let mut deep = 0;
        for _ in 0..400 {
            let n = r.gen_range(4..=9);
            let p = RandomParams {
                n,
                terminals: r.gen_range(1..=n.min(6)),
                virtual_edges: r.gen_range(0..=2),
                max_weight: 8,
                max_extra_edges: n + 3,
            };
            let (inst, _) = random_minor_free(&p, &mut r);
            if solve_vest_by_reduction(&inst).is_err() {
                assert!(solve(&inst).is_err());
                continue;
            }
            check(&inst);
            if inst.root_count() > ROOT_THRESHOLD {
                deep += 1;
            }
        }
        assert!(deep >= 50, "{deep}");
    }

    #[test]
    fn rim_instances_match_oracle() {
        let mut r = rng(22);
        let mut dp_runs = 0;
        for _ in 0..200 {
            let m = r.gen_range(5..=10);
            let hubs = r.gen_range(1..=3);
            let (t, v) = (r.gen_range(2..=7), r.gen_range(0..=3));
            let inst = rim_instance(&mut r, m, hubs, t, v);
            if inst.terminals.len() + 2 * inst.virtual_edges.len() > 12 {
                continue;
            }
            check(&inst);
            dp_runs += solve(&inst).unwrap().stats.cycle_runs;
        }
        assert!(dp_runs >= 50, "{dp_runs}");
    }

    #[test]
    fn grids_match_dreyfus_wagner() {
        let mut r = rng(23);
        for (rows, cols) in [(3, 3), (3, 4), (4, 4), (4, 5), (5, 5)] {
            for _ in 0..10 {
                let g = grid_graph(rows, cols, || r.gen_range(0..=8));
                let boundary = crate::gen::grid_boundary(rows, cols);
                let t = r.gen_range(3..=boundary.len().min(10));
                let terminals = rand::seq::index::sample(&mut r, boundary.len(), t).into_iter().map(|i| boundary[i]);
                let inst = Instance::steiner(g, terminals).unwrap();
                let out = solve(&inst).unwrap();
                validate_solution(&inst, &out.solution).unwrap();
                assert_eq!(out.solution.cost, dreyfus_wagner(&inst.graph, &inst.terminals).unwrap().cost);
            }
        }
    }

    #[test]
    fn free_edge_needs_only_one_endpoint() {
        let mut r = rng(24);
        let mut seen = 0;
        while seen < 150 {
            let n = r.gen_range(5..=9);
            let p = RandomParams {
                virtual_edges: r.gen_range(0..=2),
                ..RandomParams::plain(n, r.gen_range(1..=4))
            };
            let (inst, _) = random_minor_free(&p, &mut r);
            let Ok(Some(cut)) = find_two_cut(&inst.skeleton_graph()) else {
                continue;
            };
            seen += 1;
            let (u, v) = (cut.vertices[0], cut.vertices[1]);
            let work = Work::from_instance(inst);
            let both = solve_work(work.side(&cut.side_a, &[u, v], &[u, v], true), &mut Ctx::default()).unwrap();
            let one = solve_work(work.side(&cut.side_a, &[u, v], &[u], true), &mut Ctx::default()).unwrap();
            assert_eq!(both.map(|t| t.cost), one.map(|t| t.cost));
        }
    }

    #[test]
    fn children_stay_minor_free() {
        let mut r = rng(25);
        let mut checked = 0;
        while checked < 100 {
            let n = r.gen_range(5..=9);
            let p = RandomParams {
                virtual_edges: r.gen_range(0..=2),
                ..RandomParams::plain(n, r.gen_range(2..=6))
            };
            let (inst, _) = random_minor_free(&p, &mut r);
            let work = preprocess(&Work::from_instance(normalize(&inst)));
            let skel = work.inst.skeleton_graph();
            let mut children = Vec::new();
            if let Ok(Some(cut)) = find_cut_vertex(&skel) {
                let v = cut.vertices[0];
                children.push(work.side(&cut.side_a, &[v], &[v], false));
                children.push(work.side(&cut.side_b, &[v], &[v], false));
            } else if let Ok(Some(cut)) = find_two_cut(&skel) {
                let (u, v) = (cut.vertices[0], cut.vertices[1]);
                let a = &cut.side_a;
                children.push(work.side(a, &[u], &[u], false));
                children.push(work.side(a, &[v], &[v], false));
                children.push(work.side(a, &[u, v], &[u, v], false));
                children.push(work.side(a, &[u, v], &[u, v], true));
                let mut keep = vec![true; work.inst.vertex_count()];
                a.iter().for_each(|&x| keep[x] = false);
                let mut rest = work.restrict(&keep);
                let local = |x: Vertex| rest.vmap.iter().position(|&y| y == work.vmap[x]).unwrap();
                let one = Weight::Finite(1);
                let e = VirtualEdge::new(local(u), local(v), one, one, one, Weight::zero());
                rest.inst.virtual_edges.push(e);
                children.push(rest);
            } else {
                continue;
            }
            checked += 1;
            for c in children {
                assert!(instance_is_minor_free(&normalize(&c.inst)).unwrap(), "{inst:?}");
            }
        }
    }
}

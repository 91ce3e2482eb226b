//! A cycle through every root of a 3-connected instance.
//!
//! Works in the subdivided graph G*, where every virtual edge `uv` becomes a
//! path `u s v`. Terminals are pulled onto the cycle first, then for every
//! virtual edge its endpoints, then the subdivision vertex is spliced in.
//! A vertex joins the cycle through three disjoint paths: two of them
//! replace a root-free arc between their attachment points. When every arc
//! holds a root the paths and arcs form a rooted K4-minor instead.

use thiserror::Error;

use crate::graph::{disjoint_paths_to_set, find_cut_vertex, find_two_cut, Multigraph, Vertex};
use crate::instance::{build_star_graph, Instance, Root, StarGraph};
use crate::oracle::{check_certificate, has_rooted_k4, K4Certificate};
use crate::weight::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycleError {
    #[error("graph has no cycle")]
    Acyclic,
    #[error("the skeleton is not 3-connected")]
    NotThreeConnected,
    #[error("fewer than three roots")]
    TooFewRoots,
    #[error("the instance has a K4-minor rooted at its roots")]
    MinorFound(Box<K4Certificate>),
    #[error("no cycle through the roots and no certificate found: {0}")]
    Uncertified(String),
}

/// A cycle of G* through all terminals and subdivision vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootCycle {
    pub cycle_vertices: Vec<Vertex>,
    /// Roots in the order the cycle meets them.
    pub root_order: Vec<Root>,
    /// Index on `cycle_vertices` of each entry of `root_order`.
    pub position: Vec<usize>,
    /// Subdivision vertex of each virtual edge.
    pub subdivision: Vec<Vertex>,
}

/// Fundamental cycle of the first non-tree edge met by a DFS from vertex 0.
pub fn initial_cycle<S: Scalar>(g: &Multigraph<S>) -> Result<Vec<Vertex>, CycleError> {
    let n = g.vertex_count();
    let adj: Vec<Vec<Vertex>> = (0..n).map(|x| g.simple_neighbors(x)).collect();
    let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack: Vec<(Vertex, usize)> = vec![(start, 0)];
        state[start] = 1;
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            if *i == adj[x].len() {
                state[x] = 2;
                stack.pop();
                continue;
            }
            let y = adj[x][*i];
            *i += 1;
            let parent = if stack.len() >= 2 { Some(stack[stack.len() - 2].0) } else { None };
            if Some(y) == parent {
                continue;
            }
            match state[y] {
                0 => {
                    state[y] = 1;
                    stack.push((y, 0));
                }
                1 => {
                    let from = stack.iter().position(|&(z, _)| z == y).expect("on stack");
                    return Ok(stack[from..].iter().map(|&(z, _)| z).collect());
                }
                _ => {}
            }
        }
    }
    Err(CycleError::Acyclic)
}

fn positions(n: usize, cycle: &[Vertex]) -> Vec<Option<usize>> {
    let mut pos = vec![None; n];
    for (i, &x) in cycle.iter().enumerate() {
        pos[x] = Some(i);
    }
    pos
}

/// Cycle positions strictly between `a` and `b` walking forward.
fn open_arc(len: usize, a: usize, b: usize) -> impl Iterator<Item = usize> {
    let count = (b + len - a) % len;
    (1..count).map(move |k| (a + k) % len)
}

/// Cycle positions from `a` to `b` walking forward, both included.
fn closed_arc(len: usize, a: usize, b: usize) -> impl Iterator<Item = usize> {
    let count = (b + len - a) % len;
    (0..=count).map(move |k| (a + k) % len)
}

struct Absorber<'a, S> {
    g: &'a Multigraph<S>,
    is_root: Vec<bool>,
    roots: Vec<Vertex>,
}

impl<S: Scalar> Absorber<'_, S> {
    /// Puts `target` on the cycle keeping every root already on it.
    /// `partner` is `(p, s)`: a vertex to keep as well, and the degree-2
    /// vertex joining it to `target`, usable as a detour.
    fn absorb(
        &self,
        cycle: Vec<Vertex>,
        target: Vertex,
        partner: Option<(Vertex, Vertex)>,
        witness: Option<Vertex>,
    ) -> Result<Vec<Vertex>, CycleError> {
        let n = self.g.vertex_count();
        let pos = positions(n, &cycle);
        if pos[target].is_some() {
            return Ok(cycle);
        }
        let len = cycle.len();
        let mut paths = disjoint_paths_to_set(self.g, target, &cycle, 3).ok_or(CycleError::NotThreeConnected)?;
        paths.sort_by_key(|p| pos[*p.last().expect("nonempty")].expect("ends on cycle"));
        let at: Vec<usize> = paths.iter().map(|p| pos[*p.last().expect("nonempty")].expect("on cycle")).collect();
        let mut best: Option<(usize, usize)> = None;
        for i in 0..3 {
            let j = (i + 1) % 3;
            if open_arc(len, at[i], at[j]).any(|q| self.is_root[cycle[q]]) {
                continue;
            }
            let key = |(i, j): (usize, usize)| {
                let (a, b) = (cycle[at[i]], cycle[at[j]]);
                (a.min(b), a.max(b))
            };
            if best.is_none_or(|b| key((i, j)) < key(b)) {
                best = Some((i, j));
            }
        }
        let Some((i, j)) = best else {
            return Err(self.three_arc_minor(&cycle, target, &paths, &at, witness));
        };
        let mut out: Vec<Vertex> = closed_arc(len, at[j], at[i]).map(|q| cycle[q]).collect();
        let partner_inside = partner.and_then(|(p, s)| {
            let pp = pos[p]?;
            open_arc(len, at[i], at[j]).any(|q| q == pp).then_some((pp, s))
        });
        match partner_inside {
            Some((pp, s)) => {
                out.extend(open_arc(len, at[i], pp).map(|q| cycle[q]));
                out.push(cycle[pp]);
                out.push(s);
                out.push(target);
            }
            None => {
                let pi = &paths[i];
                out.extend(pi[1..pi.len() - 1].iter().rev().copied());
                out.push(target);
            }
        }
        let pj = &paths[j];
        out.extend(pj[1..pj.len() - 1].iter().copied());
        Ok(out)
    }

    /// Every arc between the three attachment points holds a root: the
    /// half-open arcs and the paths (plus `witness`, a root adjacent to a
    /// non-root target) are the branch sets of a rooted K4-minor.
    fn three_arc_minor(
        &self,
        cycle: &[Vertex],
        target: Vertex,
        paths: &[Vec<Vertex>],
        at: &[usize],
        witness: Option<Vertex>,
    ) -> CycleError {
        let len = cycle.len();
        let mut centre = vec![target];
        for p in paths {
            centre.extend(p[1..p.len() - 1].iter().copied());
        }
        if let Some(s) = witness {
            if !centre.contains(&s) {
                centre.push(s);
            }
        }
        let centre_root = if self.is_root[target] { Some(target) } else { witness };
        let mut sets: [Vec<Vertex>; 4] = Default::default();
        sets[0] = centre;
        let mut root_witnesses = [centre_root.unwrap_or(target); 4];
        for i in 0..3 {
            let j = (i + 1) % 3;
            sets[i + 1] = std::iter::once(at[i]).chain(open_arc(len, at[i], at[j])).map(|q| cycle[q]).collect();
            root_witnesses[i + 1] = sets[i + 1].iter().copied().find(|&x| self.is_root[x]).unwrap_or(cycle[at[i]]);
        }
        let mut cross_edges = Vec::new();
        for (i, p) in paths.iter().enumerate() {
            cross_edges.push((0, i + 1, p[p.len() - 2], p[p.len() - 1]));
        }
        for i in 0..3 {
            let j = (i + 1) % 3;
            let last = cycle[(at[j] + len - 1) % len];
            let (a, b, x, y) = if i < j { (i + 1, j + 1, last, cycle[at[j]]) } else { (j + 1, i + 1, cycle[at[j]], last) };
            cross_edges.push((a, b, x, y));
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        let cert = K4Certificate {
            branch_sets: sets,
            root_witnesses,
            cross_edges,
        };
        if check_certificate(self.g, &self.roots, &cert).is_ok() {
            return CycleError::MinorFound(Box::new(cert));
        }
        self.fallback("constructed three-arc certificate failed validation")
    }

    fn fallback(&self, why: &str) -> CycleError {
        match has_rooted_k4(self.g, &self.roots) {
            Ok(Some(cert)) => CycleError::MinorFound(Box::new(cert)),
            Ok(None) => CycleError::Uncertified(format!("{why}; exhaustive search found no minor")),
            Err(e) => CycleError::Uncertified(format!("{why}; {e}")),
        }
    }

    /// Replaces a root-free arc between `u` and `v` by `u s v`.
    fn splice(&self, cycle: Vec<Vertex>, u: Vertex, v: Vertex, s: Vertex) -> Result<Vec<Vertex>, CycleError> {
        self.try_splice(&cycle, u, v, s)
            .ok_or_else(|| self.fallback("both arcs between the endpoints of a virtual edge hold roots"))
    }

    fn try_splice(&self, cycle: &[Vertex], u: Vertex, v: Vertex, s: Vertex) -> Option<Vec<Vertex>> {
        let pos = positions(self.g.vertex_count(), cycle);
        if pos[s].is_some() {
            return Some(cycle.to_vec());
        }
        let (pu, pv) = (pos[u].expect("u on cycle"), pos[v].expect("v on cycle"));
        let len = cycle.len();
        let free = |a: usize, b: usize| !open_arc(len, a, b).any(|q| self.is_root[cycle[q]]);
        let mut out: Vec<Vertex> = if free(pu, pv) {
            closed_arc(len, pv, pu).map(|q| cycle[q]).collect()
        } else if free(pv, pu) {
            closed_arc(len, pu, pv).map(|q| cycle[q]).collect()
        } else {
            return None;
        };
        out.push(s);
        Some(out)
    }

    /// Absorbs both endpoints of a virtual edge, then its subdivision vertex.
    fn add_virtual(&self, cycle: Vec<Vertex>, u: Vertex, v: Vertex, s: Vertex) -> Result<Vec<Vertex>, CycleError> {
        let cycle = self.absorb(cycle, u, None, Some(s))?;
        let cycle = self.absorb(cycle, v, Some((u, s)), Some(s))?;
        self.splice(cycle, u, v, s)
    }

    /// Cycle `s u .. other .. v` from two disjoint paths between `other` and
    /// the neighbours `u, v` of the degree-2 vertex `s`.
    fn pair_cycle(&self, s: Vertex, u: Vertex, v: Vertex, other: Vertex) -> Option<Vec<Vertex>> {
        let n = self.g.vertex_count();
        let h = Multigraph::from_edges(
            n,
            self.g.edges().iter().filter(|e| e.u != s && e.v != s).map(|e| (e.u, e.v, e.weight)),
        )
        .expect("subgraph");
        let paths = disjoint_paths_to_set(&h, other, &[u, v], 2)?;
        let (pu, pv) = if paths[0].last() == Some(&u) { (&paths[0], &paths[1]) } else { (&paths[1], &paths[0]) };
        let mut out = vec![s];
        out.extend(pu.iter().rev().copied());
        out.extend(pv[1..].iter().copied());
        Some(out)
    }
}

/// Finds a cycle of G* through every terminal and subdivision vertex.
/// Expects a normalized instance without parallel virtual edges.
pub fn find_root_cycle<S: Scalar>(inst: &Instance<S>) -> Result<RootCycle, CycleError> {
    if inst.root_count() < 3 {
        return Err(CycleError::TooFewRoots);
    }
    let skel = inst.skeleton_graph();
    match find_cut_vertex(&skel) {
        Ok(None) => {}
        _ => return Err(CycleError::NotThreeConnected),
    }
    if !matches!(find_two_cut(&skel), Ok(None)) {
        return Err(CycleError::NotThreeConnected);
    }
    let star = build_star_graph(inst);
    let cycle = cycle_in_star(inst, &star)?;
    Ok(root_cycle_from(inst, &star, cycle))
}

fn cycle_in_star<S: Scalar>(inst: &Instance<S>, star: &StarGraph<S>) -> Result<Vec<Vertex>, CycleError> {
    let g = &star.graph;
    let mut is_root = vec![false; g.vertex_count()];
    for &r in &star.star_roots {
        is_root[r] = true;
    }
    let ab = Absorber {
        g,
        is_root,
        roots: star.star_roots.clone(),
    };
    let ve = &inst.virtual_edges;
    let sub = &star.subdivision;
    let t = inst.terminals.len();
    if ve.is_empty() || t >= 3 {
        let mut cycle = initial_cycle(g)?;
        for &x in &inst.terminals {
            cycle = ab.absorb(cycle, x, None, None)?;
        }
        for (i, e) in ve.iter().enumerate() {
            cycle = ab.add_virtual(cycle, e.u, e.v, sub[i])?;
        }
        return Ok(cycle);
    }
    // Splicing is only safe once three other roots are on the cycle, so
    // seed one holding three roots first.
    let (mut cycle, done) = if t >= 1 {
        let other = if t == 1 { sub[1] } else { inst.terminals[0] };
        let mut cycle = ab.pair_cycle(sub[0], ve[0].u, ve[0].v, other).ok_or(CycleError::NotThreeConnected)?;
        for &x in &inst.terminals {
            cycle = ab.absorb(cycle, x, None, None)?;
        }
        let done = if t == 1 { vec![0, 1] } else { vec![0] };
        (cycle, done)
    } else {
        seed_three_virtual(&ab, inst, sub)?
    };
    for (i, e) in ve.iter().enumerate() {
        if !done.contains(&i) {
            cycle = ab.add_virtual(cycle, e.u, e.v, sub[i])?;
        }
    }
    Ok(cycle)
}

/// A cycle through three subdivision vertices, trying every triple.
fn seed_three_virtual<S: Scalar>(
    ab: &Absorber<'_, S>,
    inst: &Instance<S>,
    sub: &[Vertex],
) -> Result<(Vec<Vertex>, Vec<usize>), CycleError> {
    let ve = &inst.virtual_edges;
    let l = ve.len();
    for i in 0..l {
        for j in i + 1..l {
            let Some(pair) = ab.pair_cycle(sub[i], ve[i].u, ve[i].v, sub[j]) else {
                continue;
            };
            for k in (0..l).filter(|&k| k != i && k != j) {
                let (u, v, s) = (ve[k].u, ve[k].v, sub[k]);
                let Ok(c) = ab.absorb(pair.clone(), u, None, Some(s)) else {
                    continue;
                };
                let Ok(c) = ab.absorb(c, v, Some((u, s)), Some(s)) else {
                    continue;
                };
                if let Some(c) = ab.try_splice(&c, u, v, s) {
                    return Ok((c, vec![i, j, k]));
                }
            }
        }
    }
    Err(ab.fallback("no cycle through any three virtual edges"))
}

fn root_cycle_from<S: Scalar>(inst: &Instance<S>, star: &StarGraph<S>, cycle: Vec<Vertex>) -> RootCycle {
    let n = inst.vertex_count();
    let terminal = inst.terminal_mask();
    let mut root_order = Vec::new();
    let mut position = Vec::new();
    for (i, &x) in cycle.iter().enumerate() {
        if x < n {
            if terminal[x] {
                root_order.push(Root::Terminal(x));
                position.push(i);
            }
        } else {
            root_order.push(Root::Virtual(x - n));
            position.push(i);
        }
    }
    RootCycle {
        cycle_vertices: cycle,
        root_order,
        position,
        subdivision: star.subdivision.clone(),
    }
}

/// Structural check: a simple cycle of G* containing every root exactly once.
pub fn validate_root_cycle<S: Scalar>(inst: &Instance<S>, rc: &RootCycle) -> Result<(), String> {
    let star = build_star_graph(inst);
    let g = &star.graph;
    let c = &rc.cycle_vertices;
    if c.len() < 3 {
        return Err("cycle shorter than three".into());
    }
    let pos = positions(g.vertex_count(), c);
    if pos.iter().flatten().count() != c.len() {
        return Err("cycle repeats a vertex".into());
    }
    for i in 0..c.len() {
        if g.min_edge_between(c[i], c[(i + 1) % c.len()]).is_none() {
            return Err(format!("no edge between {} and {}", c[i], c[(i + 1) % c.len()]));
        }
    }
    if let Some(&r) = star.star_roots.iter().find(|&&r| pos[r].is_none()) {
        return Err(format!("root vertex {r} missing"));
    }
    if rc.root_order.len() != inst.root_count() || rc.position.len() != rc.root_order.len() {
        return Err("root order does not list every root once".into());
    }
    for (r, &p) in rc.root_order.iter().zip(&rc.position) {
        let x = match *r {
            Root::Terminal(t) => t,
            Root::Virtual(i) => star.subdivision[i],
        };
        if c.get(p) != Some(&x) {
            return Err("root position mismatch".into());
        }
    }
    if rc.position.windows(2).any(|w| w[0] >= w[1]) {
        return Err("root order does not follow the cycle".into());
    }
    Ok(())
}

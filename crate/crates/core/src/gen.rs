//! Instance generators: grids with terminals on the outer face, the small
//! non-planar fixtures, and seeded random minor-free instances.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Multigraph, Vertex};
use crate::instance::{Instance, VirtualEdge};
use crate::oracle::instance_is_minor_free;
use crate::weight::Weight;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` grid, vertex `(r, c)` numbered `r * cols + c`.
pub fn grid_graph(rows: usize, cols: usize, mut weight: impl FnMut() -> i64) -> Multigraph<i64> {
    let mut g = Multigraph::new(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = r * cols + c;
            if c + 1 < cols {
                g.add_edge(x, x + 1, Weight::Finite(weight())).expect("grid edge");
            }
            if r + 1 < rows {
                g.add_edge(x, x + cols, Weight::Finite(weight())).expect("grid edge");
            }
        }
    }
    g
}

/// Outer face of the grid, clockwise from the corner `(0, 0)`.
pub fn grid_boundary(rows: usize, cols: usize) -> Vec<Vertex> {
    if rows == 1 {
        return (0..cols).collect();
    }
    if cols == 1 {
        return (0..rows).collect();
    }
    let mut b = Vec::new();
    b.extend(0..cols);
    b.extend((1..rows).map(|r| r * cols + cols - 1));
    b.extend((0..cols - 1).rev().map(|c| (rows - 1) * cols + c));
    b.extend((1..rows - 1).rev().map(|r| r * cols));
    b
}

/// Grid with `t` terminals spread evenly along the outer face and weights
/// drawn uniformly from `lo..=hi`.
pub fn grid_one_face(rows: usize, cols: usize, t: usize, lo: i64, hi: i64, seed: u64) -> Instance<i64> {
    let mut r = rng(seed);
    let g = grid_graph(rows, cols, || r.gen_range(lo..=hi));
    let boundary = grid_boundary(rows, cols);
    let t = t.min(boundary.len());
    let terminals: Vec<Vertex> = (0..t).map(|i| boundary[i * boundary.len() / t]).collect();
    Instance::steiner(g, terminals).expect("terminals on the grid")
}

/// Two adjacent centers joined to a terminal triangle: the 5-vertex
/// complete graph with terminals `a, b, c` = `0, 1, 2`.
pub fn k5_three_terminals() -> Instance<i64> {
    let mut g = Multigraph::new(5);
    for a in 0..5 {
        for b in a + 1..5 {
            g.add_edge(a, b, Weight::Finite(1)).expect("simple");
        }
    }
    Instance::steiner(g, [0, 1, 2]).expect("valid")
}

/// Square `a b c d` (terminals `0..4`) with center `x` (4) and, on every
/// side, two adjacent vertices joined to both corners of the side and to
/// the center. Unit weights, 13 vertices.
pub fn square_with_center() -> Instance<i64> {
    let mut g = Multigraph::new(13);
    let mut add = |a: usize, b: usize| {
        g.add_edge(a, b, Weight::Finite(1)).expect("simple");
    };
    for i in 0..4 {
        let (p, q) = (i, (i + 1) % 4);
        add(p, q);
        add(p, 4);
        let (s1, s2) = (5 + 2 * i, 6 + 2 * i);
        for s in [s1, s2] {
            add(p, s);
            add(s, q);
            add(s, 4);
        }
        add(s1, s2);
    }
    Instance::steiner(g, [0, 1, 2, 3]).expect("valid")
}

/// Parameters for random connected instances.
#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub n: usize,
    pub terminals: usize,
    pub virtual_edges: usize,
    pub max_weight: i64,
    pub max_extra_edges: usize,
}

impl RandomParams {
    pub fn plain(n: usize, terminals: usize) -> Self {
        RandomParams {
            n,
            terminals,
            virtual_edges: 0,
            max_weight: 8,
            max_extra_edges: n,
        }
    }
}

/// A random connected instance: a random spanning tree, extra random edges,
/// uniform weights and random virtual edges with `d <= min(u, v, c)`.
pub fn random_instance<R: Rng>(p: &RandomParams, rng: &mut R) -> Instance<i64> {
    let n = p.n.max(1);
    let mut g = Multigraph::new(n);
    for x in 1..n {
        let parent = rng.gen_range(0..x);
        g.add_edge(x, parent, Weight::Finite(rng.gen_range(0..=p.max_weight))).expect("tree edge");
    }
    let extra = rng.gen_range(0..=p.max_extra_edges);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            g.add_edge(a, b, Weight::Finite(rng.gen_range(0..=p.max_weight))).expect("extra edge");
        }
    }
    let terminals = sample(rng, n, p.terminals.min(n)).into_vec();
    let mut virtual_edges = Vec::new();
    if n >= 2 {
        for _ in 0..p.virtual_edges {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let wu = rng.gen_range(0..=p.max_weight);
            let wv = rng.gen_range(0..=p.max_weight);
            let wc = rng.gen_range(0..=p.max_weight);
            let wd = rng.gen_range(0..=wu.min(wv).min(wc));
            virtual_edges.push(VirtualEdge::new(
                a,
                b,
                Weight::Finite(wu),
                Weight::Finite(wv),
                Weight::Finite(wc),
                Weight::Finite(wd),
            ));
        }
    }
    Instance::new(g, terminals, virtual_edges).expect("generated instance")
}

/// Rejection-samples `random_instance` until the instance has no rooted
/// K4-minor. Returns the instance and the number of rejected draws.
pub fn random_minor_free<R: Rng>(p: &RandomParams, rng: &mut R) -> (Instance<i64>, usize) {
    let mut rejected = 0;
    loop {
        let inst = random_instance(p, rng);
        if instance_is_minor_free(&inst).unwrap_or(false) {
            return (inst, rejected);
        }
        rejected += 1;
    }
}

/// Outer cycle `0..m` around a path of hubs, each hub joined to a run
/// of the cycle; roots sit on the cycle, so on one face.
pub fn rim_instance<R: Rng>(r: &mut R, m: usize, hubs: usize, terminals: usize, virt: usize) -> Instance<i64> {
    let mut g = Multigraph::new(m + hubs);
    let mut edges = Vec::new();
    for i in 0..m {
        edges.push((i, (i + 1) % m));
    }
    for h in 1..hubs {
        edges.push((m + h - 1, m + h));
    }
    for i in 0..m {
        let h = i * hubs / m;
        edges.push((i, m + h));
        if h + 1 < hubs && (i + 1) * hubs / m > h {
            edges.push((i, m + h + 1));
        }
    }
    for (a, b) in edges {
        g.add_edge(a, b, Weight::Finite(r.gen_range(0..=8))).expect("rim edge");
    }
    let mut rim: Vec<usize> = (0..m).collect();
    let mut ve = Vec::new();
    let mut used = vec![false; m];
    for _ in 0..virt {
        let i = r.gen_range(0..m);
        if used[i] || used[(i + 1) % m] {
            continue;
        }
        used[i] = true;
        used[(i + 1) % m] = true;
        let (wu, wv, wc) = (r.gen_range(0..=8), r.gen_range(0..=8), r.gen_range(0..=8));
        let wd = r.gen_range(0..=wu.min(wv).min(wc));
        ve.push(VirtualEdge::new(i, (i + 1) % m, wu.into(), wv.into(), wc.into(), wd.into()));
    }
    rim.retain(|&x| !used[x]);
    let t: Vec<usize> = sample(r, rim.len(), terminals.min(rim.len())).into_iter().map(|i| rim[i]).collect();
    Instance::new(g, t, ve).expect("rim instance")
}

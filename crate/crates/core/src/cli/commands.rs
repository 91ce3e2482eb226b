use std::time::Instant;

use serde::Serialize;

use super::format::{format_scaled, format_weight, parse_instance, render_instance};
use crate::gen::{grid_one_face, k5_three_terminals, random_minor_free, rng, RandomParams};
use crate::graph::Vertex;
use crate::instance::{build_star_graph, validate_solution, Instance};
use crate::oracle::{check_certificate, has_rooted_k4, solve_vest_by_reduction, K4Certificate, MINOR_VERTEX_CAP};
use crate::solver::{solve, SolveError, SolveOutput};
use crate::weight::Weight;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_MINOR: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

/// Output of a command, written out by the caller.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Report {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Report {
    fn fail(code: i32, msg: impl std::fmt::Display) -> Self {
        Report {
            code,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SolveFlags {
    pub verify: bool,
    pub check_minor: bool,
    pub json: bool,
    pub scale: u32,
}

#[derive(Serialize)]
struct JsonStats {
    n: usize,
    m: usize,
    k: usize,
    recursion_nodes: usize,
    dp_entries: usize,
}

#[derive(Serialize)]
struct JsonReport {
    cost: i64,
    scale: u32,
    edges: Vec<[usize; 2]>,
    virtual_statuses: Vec<&'static str>,
    stats: JsonStats,
    verified: bool,
}

/// Prints the branch sets and cross edges of a certificate, naming each
/// vertex with `label`.
fn render_certificate(cert: &K4Certificate, label: impl Fn(Vertex) -> String) -> String {
    let mut out = String::from("rooted K4 minor\n");
    for (i, set) in cert.branch_sets.iter().enumerate() {
        let members: Vec<String> = set.iter().map(|&x| label(x)).collect();
        out += &format!("branch {} root {}: {}\n", i + 1, label(cert.root_witnesses[i]), members.join(" "));
    }
    for &(i, j, x, y) in &cert.cross_edges {
        out += &format!("cross {} {}: {} {}\n", i + 1, j + 1, label(x), label(y));
    }
    out
}

/// Labels vertices of the subdivided graph of `inst`: real vertices by
/// their 1-based number through `vmap`, subdivision vertices by the
/// endpoints of their virtual edge.
fn star_label<'a>(inst: &'a Instance<i64>, vmap: &'a [Vertex]) -> impl Fn(Vertex) -> String + 'a {
    let n = inst.vertex_count();
    move |x| match x.checked_sub(n) {
        None => (vmap[x] + 1).to_string(),
        Some(i) => {
            let e = &inst.virtual_edges[i];
            format!("[{}-{}]", vmap[e.u] + 1, vmap[e.v] + 1)
        }
    }
}

fn minor_check(inst: &Instance<i64>, stderr: &mut String) -> Option<Report> {
    let star = build_star_graph(inst);
    let identity: Vec<Vertex> = (0..inst.vertex_count()).collect();
    match has_rooted_k4(&star.graph, &star.star_roots) {
        Ok(None) => None,
        Ok(Some(cert)) => {
            if let Err(e) = check_certificate(&star.graph, &star.star_roots, &cert) {
                return Some(Report::fail(EXIT_INTERNAL, format!("invalid certificate: {e}")));
            }
            Some(Report {
                code: EXIT_MINOR,
                stdout: render_certificate(&cert, star_label(inst, &identity)),
                stderr: std::mem::take(stderr),
            })
        }
        Err(e) => {
            *stderr += &format!("note: exhaustive minor check skipped ({e}, cap {MINOR_VERTEX_CAP})\n");
            None
        }
    }
}

pub fn cmd_solve(text: &str, flags: SolveFlags) -> Report {
    let inst = match parse_instance(text, flags.scale) {
        Ok(i) => i,
        Err(e) => return Report::fail(EXIT_PARSE, e),
    };
    let mut stderr = String::new();
    if flags.check_minor {
        if let Some(r) = minor_check(&inst, &mut stderr) {
            return r;
        }
    }
    let out = match solve(&inst) {
        Ok(o) => o,
        Err(SolveError::Infeasible) => return Report::fail(EXIT_INFEASIBLE, "infeasible"),
        Err(SolveError::MinorFound(report)) => {
            return Report {
                code: EXIT_MINOR,
                stdout: render_certificate(&report.certificate, star_label(&report.instance, &report.vmap)),
                stderr,
            }
        }
        Err(e @ SolveError::MinorSuspected(_)) => return Report::fail(EXIT_MINOR, e),
        Err(e @ SolveError::InvalidInstance(_)) => return Report::fail(EXIT_PARSE, e),
        Err(e) => return Report::fail(EXIT_INTERNAL, e),
    };
    let mut verified = false;
    if flags.verify {
        if let Err(v) = validate_solution(&inst, &out.solution) {
            return Report::fail(EXIT_MISMATCH, format!("witness does not validate: {v:?}"));
        }
        match solve_vest_by_reduction(&inst) {
            Ok(o) if o.cost == out.solution.cost => verified = true,
            Ok(o) => {
                let want = format_weight(o.cost, flags.scale);
                return Report::fail(EXIT_MISMATCH, format!("oracle cost {want} differs"));
            }
            Err(e) => stderr += &format!("note: oracle comparison skipped ({e})\n"),
        }
    }
    let stdout = if flags.json {
        json_report(&inst, &out, flags.scale, verified)
    } else {
        text_report(&inst, &out, flags, verified)
    };
    Report {
        code: EXIT_OK,
        stdout,
        stderr,
    }
}

fn sorted_edges(inst: &Instance<i64>, out: &SolveOutput<i64>) -> Vec<(usize, usize, Weight<i64>)> {
    let mut edges: Vec<_> = out
        .solution
        .edges
        .iter()
        .map(|&id| {
            let e = inst.graph.edge(id);
            (e.u.min(e.v) + 1, e.u.max(e.v) + 1, e.weight)
        })
        .collect();
    edges.sort();
    edges
}

fn text_report(inst: &Instance<i64>, out: &SolveOutput<i64>, flags: SolveFlags, verified: bool) -> String {
    let mut s = format!("cost {}\n", format_weight(out.solution.cost, flags.scale));
    let edges = sorted_edges(inst, out);
    s += &format!("edges {}\n", edges.len());
    for (u, v, w) in edges {
        s += &format!("E {u} {v} {}\n", format_weight(w, flags.scale));
    }
    for (e, status) in inst.virtual_edges.iter().zip(&out.solution.statuses) {
        s += &format!("VE {} {} {}\n", e.u + 1, e.v + 1, status.name());
    }
    if flags.verify {
        s += &format!("verified {verified}\n");
    }
    s
}

fn json_report(inst: &Instance<i64>, out: &SolveOutput<i64>, scale: u32, verified: bool) -> String {
    let Weight::Finite(cost) = out.solution.cost else {
        unreachable!("solutions have finite cost")
    };
    let report = JsonReport {
        cost,
        scale,
        edges: sorted_edges(inst, out).into_iter().map(|(u, v, _)| [u, v]).collect(),
        virtual_statuses: out.solution.statuses.iter().map(|s| s.name()).collect(),
        stats: JsonStats {
            n: inst.vertex_count(),
            m: inst.graph.edge_count(),
            k: inst.root_count(),
            recursion_nodes: out.stats.recursion_nodes,
            dp_entries: out.stats.dp_entries,
        },
        verified,
    };
    serde_json::to_string_pretty(&report).expect("serializable") + "\n"
}

#[derive(Debug, Clone, Copy)]
pub enum Family {
    GridOneFace { rows: usize, cols: usize, terminals: usize, lo: i64, hi: i64, seed: u64 },
    Figure1Right,
    RandomMinorFree { n: usize, terminals: usize, virtual_edges: usize, max_weight: i64, seed: u64 },
}

/// Largest vertex count accepted by the rejection sampler, whose filter is
/// exhaustive.
pub const RANDOM_MAX_N: usize = 12;

pub fn generate(family: Family) -> Result<Instance<i64>, String> {
    match family {
        Family::GridOneFace { rows, cols, terminals, lo, hi, seed } => {
            if rows < 2 || cols < 2 {
                return Err("grid needs at least 2 rows and 2 columns".into());
            }
            let boundary = 2 * (rows + cols) - 4;
            if terminals > boundary {
                return Err(format!("at most {boundary} boundary terminals"));
            }
            if lo < 0 || hi < lo {
                return Err("weights need 0 <= lo <= hi".into());
            }
            Ok(grid_one_face(rows, cols, terminals, lo, hi, seed))
        }
        Family::Figure1Right => Ok(k5_three_terminals()),
        Family::RandomMinorFree { n, terminals, virtual_edges, max_weight, seed } => {
            if n == 0 || n > RANDOM_MAX_N {
                return Err(format!("n must be in 1..={RANDOM_MAX_N}"));
            }
            if terminals > n || (virtual_edges > 0 && n < 2) || max_weight < 0 {
                return Err("invalid terminal, virtual edge or weight parameters".into());
            }
            let p = RandomParams {
                n,
                terminals,
                virtual_edges,
                max_weight,
                max_extra_edges: n,
            };
            Ok(random_minor_free(&p, &mut rng(seed)).0)
        }
    }
}

pub fn cmd_generate(family: Family) -> Report {
    match generate(family) {
        Ok(inst) => Report {
            code: EXIT_OK,
            stdout: render_instance(&inst, 0),
            stderr: String::new(),
        },
        Err(e) => Report::fail(EXIT_PARSE, e),
    }
}

/// Unit grid with about `n` vertices and one boundary terminal per row.
pub fn bench_grid(n: usize) -> Instance<i64> {
    let rows = (n as f64).sqrt().floor().max(2.0) as usize;
    let cols = (n / rows).max(2);
    grid_one_face(rows, cols, rows, 1, 1, 0)
}

pub fn cmd_bench(sizes: &[usize], reps: usize) -> Report {
    let mut stdout = String::from("n,family,ms,cost\n");
    for &n in sizes {
        let inst = bench_grid(n);
        let mut times = Vec::new();
        let mut cost = Weight::Infinite;
        for _ in 0..reps.max(1) {
            let start = Instant::now();
            match solve(&inst) {
                Ok(out) => cost = out.solution.cost,
                Err(e) => return Report::fail(EXIT_INTERNAL, e),
            }
            times.push(start.elapsed().as_secs_f64() * 1000.0);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let cost = match cost {
            Weight::Finite(c) => format_scaled(c, 0),
            Weight::Infinite => "inf".into(),
        };
        stdout += &format!("{},grid,{median:.3},{cost}\n", inst.vertex_count());
    }
    Report {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Multigraph;

    fn k4_file() -> String {
        let mut g = Multigraph::new(4);
        for a in 0..4 {
            for b in a + 1..4 {
                g.add_edge(a, b, Weight::Finite(1)).unwrap();
            }
        }
        render_instance(&Instance::steiner(g, 0..4).unwrap(), 0)
    }

    #[test]
    fn fix_tri_file() {
        let text = render_instance(&k5_three_terminals(), 0);
        let r = cmd_solve(&text, SolveFlags { verify: true, ..SolveFlags::default() });
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        let lines: Vec<&str> = r.stdout.lines().collect();
        assert_eq!(lines[0], "cost 2");
        assert_eq!(lines[1], "edges 2");
        assert!(r.stdout.contains("verified true"));
    }

    #[test]
    fn k4_refused_with_certificate() {
        let text = k4_file();
        let r = cmd_solve(&text, SolveFlags { check_minor: true, ..SolveFlags::default() });
        assert_eq!(r.code, EXIT_MINOR);
        assert_eq!(r.stdout.lines().filter(|l| l.starts_with("branch")).count(), 4);
        assert_eq!(r.stdout.lines().filter(|l| l.starts_with("cross")).count(), 6);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(cmd_solve("VEST 2\n", SolveFlags::default()).code, EXIT_PARSE);
        let apart = "VEST 1\nSECTION Graph\nNodes 4\nEdges 2\nE 1 2 1\nE 3 4 1\nSECTION Terminals\nT 1\nT 4\nEOF\n";
        assert_eq!(cmd_solve(apart, SolveFlags::default()).code, EXIT_INFEASIBLE);
        let scaled = "VEST 1\nSECTION Graph\nNodes 2\nEdges 1\nE 1 2 0.25\nSECTION Terminals\nT 1\nT 2\nEOF\n";
        assert_eq!(cmd_solve(scaled, SolveFlags::default()).code, EXIT_PARSE);
        let r = cmd_solve(scaled, SolveFlags { scale: 2, ..SolveFlags::default() });
        assert!(r.stdout.starts_with("cost 0.25\n"), "{}", r.stdout);
    }

    #[test]
    fn json_schema() {
        let text = render_instance(&k5_three_terminals(), 0);
        let r = cmd_solve(&text, SolveFlags { json: true, verify: true, ..SolveFlags::default() });
        let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
        assert_eq!(v["cost"], 2);
        assert_eq!(v["scale"], 0);
        assert_eq!(v["edges"].as_array().unwrap().len(), 2);
        assert_eq!(v["virtual_statuses"], serde_json::json!([]));
        assert_eq!(v["stats"]["n"], 5);
        assert_eq!(v["stats"]["m"], 10);
        assert_eq!(v["stats"]["k"], 3);
        assert_eq!(v["verified"], true);
    }

    #[test]
    fn deterministic_reports() {
        let text = render_instance(&grid_one_face(5, 5, 8, 0, 9, 4), 0);
        let flags = SolveFlags { json: true, ..SolveFlags::default() };
        assert_eq!(cmd_solve(&text, flags), cmd_solve(&text, flags));
    }

    #[test]
    fn generators() {
        let grid = generate(Family::GridOneFace { rows: 3, cols: 3, terminals: 4, lo: 1, hi: 1, seed: 1 }).unwrap();
        assert_eq!(grid.vertex_count(), 9);
        let mut t = grid.terminals.clone();
        t.sort();
        assert_eq!(t, vec![0, 2, 6, 8]);
        let fig = generate(Family::Figure1Right).unwrap();
        assert_eq!((fig.vertex_count(), fig.graph.edge_count(), fig.terminals.len()), (5, 10, 3));
        let rnd = Family::RandomMinorFree { n: 8, terminals: 4, virtual_edges: 0, max_weight: 8, seed: 7 };
        let inst = generate(rnd).unwrap();
        assert!(crate::oracle::instance_is_minor_free(&inst).unwrap());
        assert_eq!(inst, generate(rnd).unwrap());
        let bad = Family::GridOneFace { rows: 3, cols: 3, terminals: 9, lo: 1, hi: 1, seed: 1 };
        assert_eq!(cmd_generate(bad).code, EXIT_PARSE);
    }

    #[test]
    fn bench_csv() {
        assert_eq!(cmd_bench(&[], 3).stdout, "n,family,ms,cost\n");
        let r = cmd_bench(&[16, 36], 3);
        let rows: Vec<&str> = r.stdout.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].starts_with("16,grid,"));
        assert!(rows[2].starts_with("36,grid,"));
    }
}

//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rooted_steiner::cli::commands::bench_grid;
use rooted_steiner::cli::format::render_instance;
use rooted_steiner::cycle::{find_root_cycle, validate_root_cycle, CycleError};
use rooted_steiner::gen::{grid_boundary, grid_graph, k5_three_terminals, random_instance, rng, RandomParams};
use rooted_steiner::graph::{find_cut_vertex, find_two_cut, Multigraph};
use rooted_steiner::instance::{build_star_graph, normalize, validate_solution, Instance};
use rooted_steiner::oracle::{check_certificate, dreyfus_wagner, instance_is_minor_free, solve_vest_by_reduction, K4Certificate};
use rooted_steiner::reduce::{preprocess, preprocess_instance};
use rooted_steiner::{solve, SolveError};
use rooted_steiner::weight::Weight;

type W = Weight<i64>;

/// Witness checks gathered while running criteria 1 to 3.
#[derive(Default)]
struct Witnesses {
    checked: usize,
    failures: Vec<String>,
}

impl Witnesses {
    /// Solves `inst`, checks its witness and returns the reported cost.
    fn solve(&mut self, inst: &Instance<i64>) -> Result<W, String> {
        let out = match solve(inst) {
            Ok(out) => out,
            Err(SolveError::Infeasible) => return Ok(Weight::Infinite),
            Err(e) => return Err(format!("solver error {e} on {inst:?}")),
        };
        self.checked += 1;
        if let Err(v) = validate_solution(inst, &out.solution) {
            self.failures.push(format!("{v:?} on {inst:?}"));
        } else if out.solution.cost != out.trace.cost {
            self.failures.push(format!("witness cost differs on {inst:?}"));
        }
        Ok(out.solution.cost)
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict, String> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn run(id: u32, title: &str, budget: Duration, f: impl FnOnce() -> Result<Verdict, String>) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (pass, detail) = match result {
        Ok(Ok(v)) => (v.pass, v.detail),
        Ok(Err(e)) => (false, e),
        Err(_) => (false, "panicked".to_string()),
    };
    let in_time = took <= budget;
    let pass = pass && in_time;
    println!(
        "criterion {id} [{}] {title}: {detail}; {:.1} s (budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

/// Draws random connected instances until `count` of them have no rooted
/// K4-minor and satisfy `keep`.
fn minor_free_sample(
    seed: u64,
    count: usize,
    mut params: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> RandomParams,
    keep: impl Fn(&Instance<i64>) -> bool,
) -> Vec<Instance<i64>> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let p = params(&mut r);
        let inst = random_instance(&p, &mut r);
        if keep(&inst) && instance_is_minor_free(&inst).unwrap() {
            out.push(inst);
        }
    }
    out
}

fn criterion_1(w: &mut Witnesses) -> Result<Verdict, String> {
    let sample = minor_free_sample(
        101,
        500,
        |r| RandomParams {
            n: r.gen_range(4..=9),
            terminals: r.gen_range(2..=5),
            virtual_edges: 0,
            max_weight: 8,
            max_extra_edges: 12,
        },
        |_| true,
    );
    let mut equal = 0;
    for inst in &sample {
        let want = dreyfus_wagner(&inst.graph, &inst.terminals).map_err(|e| e.to_string())?.cost;
        if w.solve(inst)? == want {
            equal += 1;
        }
    }
    verdict(equal == sample.len(), format!("{equal}/{} equal to Dreyfus-Wagner (tolerance 0)", sample.len()))
}

fn criterion_2(w: &mut Witnesses) -> Result<Verdict, String> {
    let sample = minor_free_sample(
        102,
        200,
        |r| {
            let n = r.gen_range(4..=9);
            RandomParams {
                n,
                terminals: r.gen_range(0..=n.min(5)),
                virtual_edges: r.gen_range(1..=3),
                max_weight: 8,
                max_extra_edges: 12,
            }
        },
        |inst| inst.virtual_edges.iter().all(|e| e.weight_disconnect <= e.weight_u.min(e.weight_v)),
    );
    let mut equal = 0;
    let mut deep = 0;
    for inst in &sample {
        let want = solve_vest_by_reduction(inst).map(|s| s.cost).unwrap_or(Weight::Infinite);
        equal += usize::from(w.solve(inst)? == want);
        deep += usize::from(inst.root_count() > rooted_steiner::ROOT_THRESHOLD);
    }
    verdict(
        equal == sample.len(),
        format!("{equal}/{} equal to the exhaustive solver (tolerance 0), {deep} above the base-case size", sample.len()),
    )
}

fn criterion_3(w: &mut Witnesses) -> Result<Verdict, String> {
    let mut total = 0;
    let mut equal = 0;
    for (rows, cols) in [(3, 3), (4, 3)] {
        let g = grid_graph(rows, cols, || 1);
        let boundary = grid_boundary(rows, cols);
        for mask in 0u32..1 << boundary.len() {
            if !(3..=6).contains(&mask.count_ones()) {
                continue;
            }
            let terminals: Vec<usize> = (0..boundary.len()).filter(|i| mask >> i & 1 == 1).map(|i| boundary[i]).collect();
            let inst = Instance::steiner(g.clone(), terminals).map_err(|e| e.to_string())?;
            let want = dreyfus_wagner(&inst.graph, &inst.terminals).map_err(|e| e.to_string())?.cost;
            total += 1;
            equal += usize::from(w.solve(&inst)? == want);
        }
    }
    verdict(equal == total, format!("{equal}/{total} boundary subsets equal to Dreyfus-Wagner (tolerance 0)"))
}

fn criterion_7(w: &Witnesses) -> Result<Verdict, String> {
    let detail = match w.failures.first() {
        None => format!("{} witnesses from criteria 1-3 valid with equal cost", w.checked),
        Some(f) => format!("{} of {} witnesses invalid, first: {f}", w.failures.len(), w.checked),
    };
    verdict(w.failures.is_empty() && w.checked > 0, detail)
}

fn unit_complete(n: usize) -> Multigraph<i64> {
    let mut g = Multigraph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            g.add_edge(a, b, Weight::Finite(1)).unwrap();
        }
    }
    g
}

/// Reads the certificate printed by the command line tool.
fn parse_certificate(text: &str) -> Option<K4Certificate> {
    let vertex = |t: &str| t.parse::<usize>().ok().map(|x| x - 1);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut witnesses = Vec::new();
    let mut cross = Vec::new();
    for line in text.lines() {
        let (head, tail) = line.split_once(": ")?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let tail: Vec<usize> = tail.split_whitespace().map(vertex).collect::<Option<_>>()?;
        match head[..] {
            ["branch", _, "root", r] => {
                witnesses.push(vertex(r)?);
                sets.push(tail);
            }
            ["cross", i, j] => cross.push((vertex(i)?, vertex(j)?, tail[0], tail[1])),
            _ => return None,
        }
    }
    Some(K4Certificate {
        branch_sets: sets.try_into().ok()?,
        root_witnesses: witnesses.try_into().ok()?,
        cross_edges: cross,
    })
}

fn criterion_4() -> Result<Verdict, String> {
    let tri = solve(&k5_three_terminals()).map_err(|e| e.to_string())?.solution.cost;
    let tri_oracle = solve_vest_by_reduction(&k5_three_terminals()).map_err(|e| e.to_string())?.cost;
    let grid = Instance::steiner(grid_graph(3, 3, || 1), [0, 2, 6, 8]).unwrap();
    let corners = solve(&grid).map_err(|e| e.to_string())?.solution.cost;
    let corners_oracle = solve_vest_by_reduction(&grid).map_err(|e| e.to_string())?.cost;

    let k4 = Instance::steiner(unit_complete(4), 0..4).unwrap();
    let path = std::env::temp_dir().join(format!("acceptance-k4-{}.vest", std::process::id()));
    std::fs::write(&path, render_instance(&k4, 0)).map_err(|e| e.to_string())?;
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rooted-steiner"))
        .args(["solve", "--check-minor"])
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    let _ = std::fs::remove_file(&path);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let body = stdout.split_once('\n').map_or("", |(_, rest)| rest);
    let cert_ok = parse_certificate(body).is_some_and(|c| check_certificate(&k4.graph, &[0, 1, 2, 3], &c).is_ok());
    let code = out.status.code();

    let two = Weight::Finite(2);
    let six = Weight::Finite(6);
    let pass = tri == two && tri_oracle == two && corners == six && corners_oracle == six && code == Some(4) && cert_ok;
    verdict(
        pass,
        format!(
            "triangle fixture {tri:?} (want 2), 3x3 corners {corners:?} (want 6), K4 exit {code:?} (want 4) certificate valid {cert_ok}"
        ),
    )
}

fn three_connected(inst: &Instance<i64>) -> bool {
    let skel = inst.skeleton_graph();
    matches!(find_cut_vertex(&skel), Ok(None)) && matches!(find_two_cut(&skel), Ok(None))
}

fn criterion_5() -> Result<Verdict, String> {
    let mut r = rng(105);
    let (mut free, mut valid, mut false_minor, mut confirmed, mut bad) = (0, 0, 0, 0, Vec::new());
    while free < 200 {
        let n = r.gen_range(4..=9);
        let p = RandomParams {
            n,
            terminals: r.gen_range(0..=n.min(5)),
            virtual_edges: r.gen_range(0..=4),
            max_weight: 4,
            max_extra_edges: 2 * n,
        };
        let inst = normalize(&random_instance(&p, &mut r));
        let ve = &inst.virtual_edges;
        let parallel = ve.iter().enumerate().any(|(i, a)| ve[i + 1..].iter().any(|b| b.joins(a.u, a.v)));
        let enough = inst.root_count() >= 3 && (!inst.terminals.is_empty() || inst.root_count() >= 4);
        if parallel || !enough || !three_connected(&inst) {
            continue;
        }
        let minor_free = instance_is_minor_free(&inst).map_err(|e| e.to_string())?;
        free += usize::from(minor_free);
        match find_root_cycle(&inst) {
            Ok(rc) if minor_free => match validate_root_cycle(&inst, &rc) {
                Ok(()) => valid += 1,
                Err(e) => bad.push(e),
            },
            Ok(_) => {}
            Err(CycleError::MinorFound(cert)) => {
                let star = build_star_graph(&inst);
                if minor_free || check_certificate(&star.graph, &star.star_roots, &cert).is_err() {
                    false_minor += 1;
                } else {
                    confirmed += 1;
                }
            }
            Err(e) if minor_free => bad.push(e.to_string()),
            Err(_) => {}
        }
    }
    verdict(
        valid == free && false_minor == 0,
        format!(
            "{valid}/{free} minor-free instances got a valid root cycle, {false_minor} false minors, {confirmed} certificates confirmed{}",
            bad.first().map_or(String::new(), |b| format!(", first failure: {b}"))
        ),
    )
}

fn criterion_6() -> Result<Verdict, String> {
    let mut r = rng(106);
    let (mut preserved, mut idempotent) = (0, 0);
    let total = 300;
    for i in 0..total {
        let p = RandomParams {
            n: r.gen_range(3..=9),
            terminals: r.gen_range(1..=5),
            virtual_edges: i % 3,
            max_weight: 8,
            max_extra_edges: 8,
        };
        let inst = random_instance(&p, &mut r);
        let expected = solve_vest_by_reduction(&inst).map_or(Weight::Infinite, |s| s.cost);
        let work = preprocess_instance(&inst);
        let got = solve_vest_by_reduction(&work.inst).map_or(Weight::Infinite, |s| s.cost + work.offset);
        preserved += usize::from(got == expected);
        let again = preprocess(&work);
        idempotent += usize::from(again.inst == work.inst && again.offset == work.offset);
    }
    verdict(
        preserved == total && idempotent == total,
        format!("cost preserved on {preserved}/{total}, idempotent on {idempotent}/{total}"),
    )
}

fn criterion_8() -> Result<Verdict, String> {
    let mut points = Vec::new();
    let mut cells = Vec::new();
    for n in [16, 36, 64, 100] {
        let inst = bench_grid(n);
        let mut times = Vec::new();
        for _ in 0..3 {
            let start = Instant::now();
            solve(&inst).map_err(|e| e.to_string())?;
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let median = times[1].max(1e-6);
        cells.push(format!("n={n}: {:.1} ms", median * 1000.0));
        points.push(((n as f64).ln(), median.ln(), median));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let last = points.last().map_or(0.0, |p| p.2);
    verdict(
        slope <= 4.5 && last < 60.0,
        format!("{}; log-log slope {slope:.2} (limit 4.5), n=100 {last:.3} s (limit 60 s)", cells.join(", ")),
    )
}

fn main() -> ExitCode {
    let mut w = Witnesses::default();
    let secs = Duration::from_secs;
    let results = [
        run(1, "oracle equivalence, plain Steiner", secs(120), || criterion_1(&mut w)),
        run(2, "oracle equivalence, virtual edges", secs(120), || criterion_2(&mut w)),
        run(3, "unit grids, boundary terminals", secs(60), || criterion_3(&mut w)),
        run(4, "fixtures", secs(60), criterion_4),
        run(5, "root cycle validity", secs(60), criterion_5),
        run(6, "preprocessing soundness", secs(60), criterion_6),
        run(7, "reconstruction", secs(1), || criterion_7(&w)),
        run(8, "grid scaling", secs(300), criterion_8),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
//! any criterion fails.

mod common;

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::time::{Duration, Instant};

use minima_explorer::cspace::{Configuration, Path, PlanningSpace};
use minima_explorer::equivalence::{is_visible, VisibilityParams};
use minima_explorer::minima_tree::{MinimaTree, TreeDocument};
use minima_explorer::optimize::{is_fixed_point, optimize, OptimizerParams};
use minima_explorer::scenarios::{Scenario, BUILTIN_NAMES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{free_sample, random_free_path, random_path_between, Run};

const SEEDS: u64 = 10;

struct Report {
    failed: usize,
}

impl Report {
    fn row(&mut self, ok: bool, name: &str, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

/// Sibling pairs of `run` that see each other.
fn visible_siblings(run: &Run) -> Vec<(usize, usize)> {
    let chain = run.scenario.problem().chain();
    let vp = &run.params.visibility;
    let mut out = Vec::new();
    for n in run.tree.nodes() {
        let ps = chain.level(n.child_level().min(chain.depth()));
        for (i, &a) in n.children.iter().enumerate() {
            for &b in &n.children[i + 1..] {
                let pa = run.tree.node(a).unwrap().path.as_ref().unwrap();
                let pb = run.tree.node(b).unwrap().path.as_ref().unwrap();
                if is_visible(pa, pb, ps, vp).unwrap() {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

fn leaf_ok(run: &Run, id: usize) -> bool {
    let node = run.tree.node(id).unwrap();
    let path = node.path.as_ref().unwrap();
    let ps = run.scenario.problem().chain().level(path.level());
    let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
    ps.path_free(path, ps.resolution())
        && is_fixed_point(path, ps, &run.params.optimizer, &mut rng).unwrap()
}

/// Checks the 2-level tree shape of one seed; `None` means it matches.
fn shape_problem(run: &Run, l0: usize, split: &[usize], limit: Duration) -> Option<String> {
    let mut sorted = run.split();
    sorted.sort_unstable();
    if run.level0().len() != l0 || sorted != split {
        return Some(format!("{} level-0 nodes split {:?}", run.level0().len(), run.split()));
    }
    if let Some(bad) = run.leaves().into_iter().find(|&l| !leaf_ok(run, l)) {
        return Some(format!("leaf {bad} collides or is not a fixed point"));
    }
    if run.elapsed > limit {
        return Some(format!("took {:.1?}", run.elapsed));
    }
    None
}

fn tree_shape(report: &mut Report, name: &str, runs: &[Run], split: &[usize], limit: Duration) {
    let mut good = 0;
    let mut notes = Vec::new();
    for (seed, run) in runs.iter().enumerate() {
        match shape_problem(run, 2, split, limit) {
            None => good += 1,
            Some(why) => notes.push(format!("seed {seed}: {why}")),
        }
    }
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    let label = split.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
    report.row(
        good >= 8,
        &format!("{name} tree shape"),
        format!(
            "{good}/{} seeds give 2 level-0 nodes split {label}, slowest seed {:.1?} (limit {:?}){}",
            runs.len(),
            slowest,
            limit,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

// ---------------------------------------------------------------------------
// Grid oracle for the car's base level.

/// Which slit a base-level path uses, by the sign of y - 3 where it crosses
/// the wall's midline x = 5.
fn slit_of(path: &[[f64; 2]]) -> Option<bool> {
    path.windows(2).find_map(|s| {
        let (a, b) = (s[0], s[1]);
        if (a[0] - 5.0) * (b[0] - 5.0) > 0.0 || a[0] == b[0] {
            return None;
        }
        let t = (5.0 - a[0]) / (b[0] - a[0]);
        Some(a[1] + t * (b[1] - a[1]) > 3.0)
    })
}

struct Oracle {
    /// Shortest grid path per slit, string-pulled, lower slit first.
    paths: Vec<Path>,
    grid_costs: Vec<f64>,
}

/// 8-connected grid with spacing 0.02 x the axis extent, anchored at the
/// start. Dijkstra runs once per slit with the other slit closed.
fn car_oracle(ps: &PlanningSpace, start: &[f64], goal: &[f64]) -> Oracle {
    let axes = ps.space().axes();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..2)
        .map(|k| match axes[k] {
            minima_explorer::cspace::Axis::Euclidean { lower, upper } => (lower, upper),
            _ => unreachable!("the car base is planar"),
        })
        .unzip();
    let step = [0.02 * (hi[0] - lo[0]), 0.02 * (hi[1] - lo[1])];
    let first = [
        ((lo[0] - start[0]) / step[0]).ceil() as i64,
        ((lo[1] - start[1]) / step[1]).ceil() as i64,
    ];
    let last = [
        ((hi[0] - start[0]) / step[0]).floor() as i64,
        ((hi[1] - start[1]) / step[1]).floor() as i64,
    ];
    let (nx, ny) = ((last[0] - first[0] + 1) as usize, (last[1] - first[1] + 1) as usize);
    let at = |i: usize, j: usize| {
        [start[0] + (first[0] + i as i64) as f64 * step[0], start[1] + (first[1] + j as i64) as f64 * step[1]]
    };
    let index = |p: &[f64]| {
        let i = ((p[0] - start[0]) / step[0]).round() as i64 - first[0];
        let j = ((p[1] - start[1]) / step[1]).round() as i64 - first[1];
        i as usize * ny + j as usize
    };
    let (s, g) = (index(start), index(goal));
    assert!((at(g / ny, g % ny)[0] - goal[0]).abs() < 1e-9 && (at(g / ny, g % ny)[1] - goal[1]).abs() < 1e-9);
    let free: Vec<bool> = (0..nx * ny).map(|v| ps.is_free(&at(v / ny, v % ny))).collect();
    let h = ps.resolution();

    let mut paths = Vec::new();
    let mut grid_costs = Vec::new();
    for upper in [false, true] {
        let mut dist = vec![f64::INFINITY; nx * ny];
        let mut prev = vec![usize::MAX; nx * ny];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push((Reverse(ordered(0.0)), s));
        while let Some((Reverse(d), v)) = heap.pop() {
            let d = f64::from_bits(d);
            if d > dist[v] || v == g {
                continue;
            }
            let (i, j) = ((v / ny) as i64, (v % ny) as i64);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                        continue;
                    }
                    let u = a as usize * ny + b as usize;
                    let (p, q) = (at(i as usize, j as usize), at(a as usize, b as usize));
                    let crosses = (p[0] - 5.0) * (q[0] - 5.0) <= 0.0 && p[0] != q[0];
                    if !free[u] || (crosses && (p[1] > 3.0) != upper) || !ps.segment_free(&p, &q, h) {
                        continue;
                    }
                    let nd = d + ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    if nd < dist[u] {
                        dist[u] = nd;
                        prev[u] = v;
                        heap.push((Reverse(ordered(nd)), u));
                    }
                }
            }
        }
        if !dist[g].is_finite() {
            continue;
        }
        let mut cells = vec![g];
        while *cells.last().unwrap() != s {
            cells.push(prev[*cells.last().unwrap()]);
        }
        cells.reverse();
        let raw: Vec<[f64; 2]> = cells.iter().map(|&v| at(v / ny, v % ny)).collect();
        // String pulling: jump to the farthest visible grid vertex.
        let mut pulled = vec![raw[0]];
        let mut k = 0;
        while k + 1 < raw.len() {
            let mut far = k + 1;
            for m in (k + 2..raw.len()).rev() {
                if ps.segment_free(&raw[k], &raw[m], h) {
                    far = m;
                    break;
                }
            }
            pulled.push(raw[far]);
            k = far;
        }
        assert_eq!(slit_of(&pulled), Some(upper), "string pulling changed the slit");
        grid_costs.push(dist[g]);
        let w = pulled.iter().map(|p| Configuration::new(p.to_vec())).collect();
        paths.push(Path::new(0, w, ps.space()).unwrap());
    }
    Oracle { paths, grid_costs }
}

/// Order-preserving bits of a non-negative float.
fn ordered(x: f64) -> u64 {
    x.to_bits()
}

fn oracle_row(report: &mut Report, runs: &[Run]) {
    let sc = &runs[0].scenario;
    let ps = sc.problem().chain().level(0);
    let oracle = car_oracle(ps, sc.problem().start(0), sc.problem().goal(0));
    let costs: Vec<f64> = oracle.paths.iter().map(|p| p.cost(ps.space())).collect();
    let vp = VisibilityParams::default();
    let mut matched = 0;
    let mut checked = 0;
    let mut notes = Vec::new();
    for (seed, run) in runs.iter().enumerate() {
        let l0 = run.level0();
        if l0.len() != 2 {
            continue;
        }
        checked += 1;
        let mut classes = Vec::new();
        for &id in &l0 {
            let node = run.tree.node(id).unwrap();
            let path = node.path.as_ref().unwrap();
            let cost = node.cost.unwrap();
            let class = (0..oracle.paths.len()).find(|&c| {
                is_visible(path, &oracle.paths[c], ps, &vp).unwrap()
                    && (cost - costs[c]).abs() <= 0.05 * costs[c]
            });
            match class {
                Some(c) => classes.push(c),
                None => notes.push(format!("seed {seed} node {id} (cost {cost:.3}) matches no class")),
            }
        }
        classes.sort_unstable();
        classes.dedup();
        if classes.len() == 2 {
            matched += 1;
        }
    }
    report.row(
        oracle.paths.len() == 2 && checked > 0 && matched == checked,
        "grid oracle on the car base",
        format!(
            "{} classes, grid costs {:.3?}, shortest-in-class {:.3?}; {matched}/{checked} two-minimum seeds map onto both classes within 5%{}",
            oracle.paths.len(),
            oracle.grid_costs,
            costs,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    );
}

// ---------------------------------------------------------------------------
// Property suites.

fn property_suites(report: &mut Report, runs: &[&Run]) {
    let scenarios: Vec<Scenario> = BUILTIN_NAMES.iter().map(|n| Scenario::builtin(n).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut metric = 0;
    for i in 0..10_000 {
        let chain = scenarios[i % scenarios.len()].problem().chain();
        let space = chain.level(i / scenarios.len() % (chain.depth() + 1)).space();
        let (a, b, c) = (space.sample_uniform(&mut rng), space.sample_uniform(&mut rng), space.sample_uniform(&mut rng));
        let d = |x: &[f64], y: &[f64]| space.distance(x, y).unwrap();
        if !(d(&a, &a) == 0.0 && d(&a, &b) > 0.0 && d(&a, &b) == d(&b, &a) && d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12) {
            metric += 1;
        }
    }
    report.row(metric == 0, "metric axioms", format!("{metric} violations in 10000 triples"));

    let mut fiber = 0;
    let layered: Vec<&Scenario> = scenarios.iter().filter(|s| s.problem().depth() > 0).collect();
    for i in 0..10_000 {
        let chain = layered[i % layered.len()].problem().chain();
        let k = 1 + i / layered.len() % chain.depth();
        let y = chain.level(k - 1).space().sample_uniform(&mut rng);
        let x = chain.sample_fiber(&y, k, &mut rng).unwrap();
        if chain.project(&x, k).unwrap() != y {
            fiber += 1;
        }
    }
    report.row(fiber == 0, "project after sample_fiber", format!("{fiber} mismatches in 10000 samples"));

    let violations: Vec<String> = scenarios
        .iter()
        .map(|s| (s.name(), s.problem().chain().check_admissibility(10_000, 7).violations))
        .filter(|(_, v)| *v > 0)
        .map(|(n, v)| format!("{n}: {v}"))
        .collect();
    report.row(
        violations.is_empty(),
        "admissibility of the built-ins",
        format!("10000 samples per level; violations: {}", if violations.is_empty() { "none".into() } else { violations.join(", ") }),
    );

    let params = OptimizerParams::default();
    let mut bad = Vec::new();
    for (name, level) in [("empty_2d", 0), ("planar_car", 0), ("planar_car", 1)] {
        let sc = Scenario::builtin(name).unwrap();
        let ps = sc.problem().chain().level(level);
        let count = if name == "empty_2d" { 1000 } else { 500 };
        let (mut rose, mut moved) = (0, 0);
        for _ in 0..count {
            let p = random_free_path(ps, level, 6, 2.0, &mut rng);
            let q = optimize(&p, ps, &params, &mut rng).unwrap();
            if q.cost(ps.space()) > p.cost(ps.space()) + 1e-9 || !ps.path_free(&q, ps.resolution()) {
                rose += 1;
            }
            if !is_fixed_point(&q, ps, &params, &mut rng).unwrap() {
                moved += 1;
            }
        }
        if rose + moved > 0 {
            bad.push(format!("{name} level {level}: {rose} not monotone, {moved} not idempotent of {count}"));
        }
    }
    report.row(
        bad.is_empty(),
        "optimizer monotonicity and idempotence",
        if bad.is_empty() { "1000 paths in empty_2d, 1000 in the car world".into() } else { bad.join("; ") },
    );

    let vp = VisibilityParams::default();
    let mut asym = 0;
    for i in 0..100 {
        let sc = &scenarios[if i % 2 == 0 { 0 } else { 1 }];
        let level = i / 2 % 2;
        let ps = sc.problem().chain().level(level);
        let (a, b) = (free_sample(ps, &mut rng), free_sample(ps, &mut rng));
        let p = random_path_between(ps, level, &a, &b, 2, &mut rng);
        let q = random_path_between(ps, level, &a, &b, 2, &mut rng);
        let vis = |x: &Path, y: &Path| is_visible(x, y, ps, &vp).unwrap();
        if !vis(&p, &p) || vis(&p, &q) != vis(&q, &p) {
            asym += 1;
        }
    }
    report.row(asym == 0, "is_visible reflexive and symmetric", format!("{asym} violations in 100 pairs"));

    let seen: usize = runs.iter().map(|r| visible_siblings(r).len()).sum();
    report.row(
        seen == 0,
        "sibling non-visibility",
        format!("{seen} visible sibling pairs over {} acceptance runs", runs.len()),
    );

    let mut trips = 0;
    for run in runs {
        let text = run.tree.to_document(run.scenario.stamp(), &run.params).to_text();
        let back = MinimaTree::from_document(&TreeDocument::parse(&text).unwrap()).unwrap();
        if back.to_document(run.scenario.stamp(), &run.params).to_text() != text {
            trips += 1;
        }
    }
    report.row(trips == 0, "tree serialization round trip", format!("{trips} of {} documents differ", runs.len()));

    let again = Run::full("planar_manipulator_2dof", 0);
    let first = runs.iter().find(|r| r.scenario.name() == "planar_manipulator_2dof" && r.params.seed == 0).unwrap();
    let same = again.tree.to_document(again.scenario.stamp(), &again.params).to_text()
        == first.tree.to_document(first.scenario.stamp(), &first.params).to_text();
    report.row(same, "batch determinism", format!("manipulator seed 0 re-run is {}byte-identical", if same { "" } else { "not " }));
}

// ---------------------------------------------------------------------------
// Pathological worlds.

fn minima(run: &Run) -> Vec<&Path> {
    run.level0().iter().map(|&c| run.tree.node(c).unwrap().path.as_ref().unwrap()).collect()
}

fn sphere_row(report: &mut Report, runs: &[Run]) {
    let ps = runs[0].scenario.problem().chain().level(0);
    let vp = VisibilityParams::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for run in runs {
        let m = minima(run);
        let free = m.iter().all(|p| ps.path_free(p, ps.resolution()));
        if !(1..=7).contains(&m.len()) || !free {
            ok = false;
        }
        notes.push(m.len().to_string());
    }
    // Greedy pairwise non-visible subset of the union.
    let mut union: Vec<&Path> = Vec::new();
    for p in runs.iter().flat_map(minima) {
        if union.iter().all(|q| !is_visible(p, q, ps, &vp).unwrap()) {
            union.push(p);
        }
    }
    report.row(
        ok && union.len() >= 3,
        "pathological sphere",
        format!(
            "minima per seed [{}], {} pairwise non-visible in the union of {} seeds",
            notes.join(", "),
            union.len(),
            runs.len()
        ),
    );
}

fn lattice_row(report: &mut Report, run: &Run) {
    let ps = run.scenario.problem().chain().level(0);
    let m = minima(run);
    let free = m.iter().all(|p| ps.path_free(p, ps.resolution()));
    let capped = run.tree.nodes().iter().all(|n| n.children.len() <= run.params.n);
    report.row(
        free && capped,
        "pathological lattice safety",
        format!("{} minima, all collision-free: {free}, within N = {}: {capped}", m.len(), run.params.n),
    );
}

fn main() {
    let t = Instant::now();
    let mut report = Report { failed: 0 };

    let car: Vec<Run> = (0..SEEDS).map(|s| Run::full("planar_car", s)).collect();
    tree_shape(&mut report, "planar_car", &car, &[2, 2], Duration::from_secs(60));
    let arm: Vec<Run> = (0..SEEDS).map(|s| Run::full("planar_manipulator_2dof", s)).collect();
    tree_shape(&mut report, "planar_manipulator_2dof", &arm, &[1, 2], Duration::from_secs(30));
    oracle_row(&mut report, &car);

    let sphere: Vec<Run> = (0..5).map(|s| Run::full("ball_sphere_3d", s)).collect();
    sphere_row(&mut report, &sphere);
    let lattice = Run::full("ball_lattice_3d", 0);
    lattice_row(&mut report, &lattice);

    let all: Vec<&Run> = car.iter().chain(&arm).chain(&sphere).chain([&lattice]).collect();
    property_suites(&mut report, &all);

    let missing = ["drone", "arm_7dof", "pr2", "airplane"].iter().all(|n| Scenario::builtin(n).is_err());
    report.row(
        missing,
        "full-scale rows out of scope",
        "drone, 7-dof arm, PR2 and airplane scenarios are not shipped and not reproduced".into(),
    );

    println!("{} failed, total {:.1?}", report.failed, t.elapsed());
    if report.failed > 0 {
        std::process::exit(1);
    }
}

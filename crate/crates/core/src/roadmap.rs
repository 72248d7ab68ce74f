//! Dense and sparse roadmaps grown on one bundle level.
//!
//! The dense graph is an RRT-style tree forest rooted at the start and goal.
//! Every new dense vertex is offered to the sparse graph, which keeps it only
//! if it adds coverage, joins two components, or closes a useful cycle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{sample_ball, BundleChain};
use crate::cspace::path::ArcLength;
use crate::cspace::{Configuration, Path, PlanningSpace};
use crate::error::{Error, Result};

/// Planner termination condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ptc {
    Iterations(u64),
    Time(Duration),
}

impl fmt::Display for Ptc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ptc::Iterations(n) => write!(f, "{n}it"),
            Ptc::Time(d) => write!(f, "{}s", d.as_secs_f64()),
        }
    }
}

impl FromStr for Ptc {
    type Err = Error;

    /// Accepts `5000it`, `2s`, `1.5s` or `250ms`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::OutOfRange(format!("budget `{s}` is not of the form 5000it, 2s or 250ms"));
        if let Some(n) = s.strip_suffix("it") {
            return n.trim().parse().map(Ptc::Iterations).map_err(|_| bad());
        }
        let (num, scale) = if let Some(n) = s.strip_suffix("ms") {
            (n, 1e-3)
        } else if let Some(n) = s.strip_suffix('s') {
            (n, 1.0)
        } else {
            return Err(bad());
        };
        let v: f64 = num.trim().parse().map_err(|_| bad())?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(Ptc::Time(Duration::from_secs_f64(v * scale)))
    }
}

impl Serialize for Ptc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ptc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthParams {
    /// Bias radius as a fraction of the base level's characteristic length.
    pub epsilon_frac: f64,
    /// Sparse visibility radius as a fraction of the characteristic length.
    pub delta_s: f64,
    /// Useful-cycle stretch factor.
    pub stretch: f64,
    /// Steering step as a fraction of the characteristic length.
    pub step_frac: f64,
    pub max_sample_attempts: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            epsilon_frac: 0.1,
            delta_s: 0.1,
            stretch: 3.0,
            step_frac: 0.2,
            max_sample_attempts: 100,
        }
    }
}

impl GrowthParams {
    pub fn validate(&self) -> Result<()> {
        let range = |name: &str, v: f64, ok: bool| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange(format!("{name} = {v}")))
            }
        };
        range("epsilon_frac", self.epsilon_frac, self.epsilon_frac >= 0.0)?;
        range("delta_s", self.delta_s, self.delta_s > 0.0 && self.delta_s < 1.0)?;
        range("stretch", self.stretch, self.stretch > 1.0)?;
        range("step_frac", self.step_frac, self.step_frac > 0.0)?;
        if self.max_sample_attempts == 0 {
            return Err(Error::OutOfRange("max_sample_attempts = 0".into()));
        }
        Ok(())
    }
}

/// Absolute radii resolved for one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Radii {
    pub epsilon: f64,
    pub delta: f64,
    pub step: f64,
    pub h: f64,
}

/// Undirected graph with stored edge lengths and coordinates in one buffer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    dim: usize,
    coords: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: usize,
}

impl Graph {
    fn new(dim: usize) -> Self {
        Graph { dim, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Each undirected edge once, as `(a, b, length)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, adj)| adj.iter().filter(move |(b, _)| a < *b).map(move |&(b, l)| (a, b, l)))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].iter().any(|&(v, _)| v == b)
    }

    /// Builds a graph from explicit vertices and edges; used by tests and
    /// tools that enumerate paths on hand-made graphs.
    pub fn from_parts(dim: usize, vertices: &[Vec<f64>], edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = Graph::new(dim);
        for v in vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            g.add_vertex(v);
        }
        for &(a, b, l) in edges {
            if a >= g.len() || b >= g.len() || a == b {
                return Err(Error::InvalidPath(format!("bad edge ({a}, {b})")));
            }
            g.add_edge(a, b, l);
        }
        Ok(g)
    }

    fn add_vertex(&mut self, x: &[f64]) -> usize {
        self.coords.extend_from_slice(x);
        self.adjacency.push(Vec::new());
        self.adjacency.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize, len: f64) {
        self.adjacency[a].push((b, len));
        self.adjacency[b].push((a, len));
        self.edges += 1;
    }

    fn nearest(&self, ps: &PlanningSpace, x: &[f64]) -> usize {
        let space = ps.space();
        let mut best = (0, f64::INFINITY);
        for i in 0..self.len() {
            let d = space.dist_sq(self.vertex(i), x);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn write_text(&self, out: &mut String) {
        for i in 0..self.len() {
            let _ = write!(out, "v {i}");
            for c in self.vertex(i) {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        for (a, b, l) in self.edges() {
            let _ = writeln!(out, "e {a} {b} {l}");
        }
    }
}

/// Why a dense vertex did or did not join the sparse graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SparseStatus {
    /// Start or goal, always present.
    Anchor { sparse: usize },
    Coverage { sparse: usize },
    Connectivity { sparse: usize },
    Cycle { sparse: usize },
    /// Not inserted: this sparse vertex lies within the visibility radius and sees it.
    CoveredBy { sparse: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GrowthStats {
    pub iterations: u64,
    pub sample_failures: u64,
    pub connect_failures: u64,
    pub dense_added: u64,
    pub sparse_added: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub added_dense: bool,
    pub added_sparse: bool,
}

/// What the growth is biased toward.
#[derive(Clone, Copy, Debug)]
pub enum Bias<'a> {
    /// Uniform sampling on the roadmap's level.
    Uniform,
    /// Samples near this path, which lives one level below the roadmap.
    Path(&'a Path),
}

pub const START: usize = 0;
pub const GOAL: usize = 1;

/// Paired dense and sparse graphs on one level. Vertex 0 is the start and
/// vertex 1 the goal in both graphs.
#[derive(Clone, Debug)]
pub struct Roadmap {
    level: usize,
    radii: Radii,
    stretch: f64,
    max_attempts: usize,
    dense: Graph,
    status: Vec<SparseStatus>,
    sparse: Graph,
    sparse_origin: Vec<usize>,
    components: Vec<usize>,
    rng: ChaCha8Rng,
    stats: GrowthStats,
}

impl Roadmap {
    /// Seeds both graphs with `start` and `goal` on `chain.level(level)`.
    pub fn new(
        chain: &BundleChain,
        level: usize,
        start: &[f64],
        goal: &[f64],
        params: &GrowthParams,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        if level > chain.depth() {
            return Err(Error::OutOfRange(format!("level {level} above chain depth {}", chain.depth())));
        }
        let ps = chain.level(level);
        let dim = ps.space().dim();
        for (which, x) in [("start", start), ("goal", goal)] {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
            }
            if !ps.is_clear(x) {
                return Err(Error::Infeasible { which, level });
            }
        }
        let base_len = if level == 0 {
            ps.space().characteristic_length()
        } else {
            chain.level(level - 1).space().characteristic_length()
        };
        let len = ps.space().characteristic_length();
        let radii = Radii {
            epsilon: params.epsilon_frac * base_len,
            delta: params.delta_s * len,
            step: params.step_frac * len,
            h: ps.resolution(),
        };
        let mut rm = Roadmap {
            level,
            radii,
            stretch: params.stretch,
            max_attempts: params.max_sample_attempts,
            dense: Graph::new(dim),
            status: Vec::new(),
            sparse: Graph::new(dim),
            sparse_origin: Vec::new(),
            components: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: GrowthStats::default(),
        };
        for (i, x) in [start, goal].into_iter().enumerate() {
            rm.dense.add_vertex(x);
            rm.sparse.add_vertex(x);
            rm.sparse_origin.push(i);
            rm.components.push(i);
            rm.status.push(SparseStatus::Anchor { sparse: i });
        }
        let d = ps.space().dist(start, goal);
        if d <= 2.0 * radii.delta && rm.sees(ps, start, goal) {
            rm.sparse.add_edge(START, GOAL, d);
            rm.union(START, GOAL);
        }
        Ok(rm)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn radii(&self) -> Radii {
        self.radii
    }

    pub fn dense(&self) -> &Graph {
        &self.dense
    }

    pub fn sparse(&self) -> &Graph {
        &self.sparse
    }

    /// Dense vertex that each sparse vertex copies.
    pub fn sparse_origin(&self, s: usize) -> usize {
        self.sparse_origin[s]
    }

    pub fn sparse_status(&self, dense: usize) -> SparseStatus {
        self.status[dense]
    }

    pub fn stats(&self) -> GrowthStats {
        self.stats
    }

    /// True when start and goal are in the same sparse component.
    pub fn solved(&mut self) -> bool {
        self.find(START) == self.find(GOAL)
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.components[i] != i {
            self.components[i] = self.components[self.components[i]];
            i = self.components[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.components[ra.max(rb)] = ra.min(rb);
        }
    }

    fn sees(&self, ps: &PlanningSpace, a: &[f64], b: &[f64]) -> bool {
        !ps.space().is_ambiguous(a, b) && ps.segment_clear(a, b, self.radii.h)
    }

    /// One sample-steer-insert iteration.
    pub fn grow_step(&mut self, chain: &BundleChain, bias: Bias<'_>) -> Result<StepOutcome> {
        let sampler = Sampler::new(chain, self.level, bias)?;
        Ok(self.step(chain, &sampler))
    }

    /// Calls [`Roadmap::grow_step`] until `ptc` fires. `progress` sees the
    /// statistics every 256 iterations.
    pub fn grow_until(
        &mut self,
        chain: &BundleChain,
        bias: Bias<'_>,
        ptc: Ptc,
        mut progress: impl FnMut(&GrowthStats),
    ) -> Result<()> {
        let sampler = Sampler::new(chain, self.level, bias)?;
        // Only time budgets read the clock, which keeps iteration budgets
        // usable on targets without one.
        let started = matches!(ptc, Ptc::Time(_)).then(Instant::now);
        let mut done: u64 = 0;
        loop {
            match ptc {
                Ptc::Iterations(n) if done >= n => break,
                Ptc::Time(t) if started.is_some_and(|s| s.elapsed() >= t) => break,
                _ => {}
            }
            self.step(chain, &sampler);
            done += 1;
            if done % 256 == 0 {
                progress(&self.stats);
            }
        }
        progress(&self.stats);
        Ok(())
    }

    fn step(&mut self, chain: &BundleChain, sampler: &Sampler<'_>) -> StepOutcome {
        self.stats.iterations += 1;
        let ps = chain.level(self.level);
        let Some(x_rand) = (0..self.max_attempts).find_map(|_| {
            let x = sampler.sample(chain, &self.radii, &mut self.rng);
            ps.is_clear(&x).then_some(x)
        }) else {
            self.stats.sample_failures += 1;
            return StepOutcome::default();
        };
        let near = self.dense.nearest(ps, &x_rand);
        let x_near = self.dense.vertex(near).to_vec();
        let d = ps.space().dist(&x_near, &x_rand);
        if d == 0.0 {
            self.stats.connect_failures += 1;
            return StepOutcome::default();
        }
        let mut x_new = vec![0.0; x_rand.len()];
        ps.space().interpolate_into(&x_near, &x_rand, (self.radii.step / d).min(1.0), &mut x_new);
        if !self.sees(ps, &x_near, &x_new) {
            self.stats.connect_failures += 1;
            return StepOutcome::default();
        }
        let id = self.dense.add_vertex(&x_new);
        self.dense.add_edge(near, id, ps.space().dist(&x_near, &x_new));
        self.stats.dense_added += 1;
        let status = self.add_conditional(ps, &x_new, id);
        let added_sparse = !matches!(status, SparseStatus::CoveredBy { .. });
        self.status.push(status);
        if added_sparse {
            self.stats.sparse_added += 1;
        }
        StepOutcome { added_dense: true, added_sparse }
    }

    fn add_conditional(&mut self, ps: &PlanningSpace, x: &[f64], dense_id: usize) -> SparseStatus {
        let delta = self.radii.delta;
        let space = ps.space();
        let mut near: Vec<(usize, f64)> = (0..self.sparse.len())
            .filter_map(|s| {
                let d = space.dist(self.sparse.vertex(s), x);
                (d <= 2.0 * delta).then_some((s, d))
            })
            .collect();
        near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let visible: Vec<(usize, f64)> =
            near.into_iter().filter(|&(s, _)| self.sees(ps, self.sparse.vertex(s), x)).collect();

        let status = if let Some(&(s, _)) = visible.iter().find(|&&(_, d)| d <= delta) {
            let mut roots: Vec<usize> = visible.iter().map(|&(v, _)| self.find(v)).collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() >= 2 {
                SparseStatus::Connectivity { sparse: self.sparse.len() }
            } else if self.closes_useful_cycle(&visible) {
                SparseStatus::Cycle { sparse: self.sparse.len() }
            } else {
                return SparseStatus::CoveredBy { sparse: s };
            }
        } else {
            SparseStatus::Coverage { sparse: self.sparse.len() }
        };
        let sid = self.sparse.add_vertex(x);
        self.sparse_origin.push(dense_id);
        self.components.push(sid);
        for &(s, d) in &visible {
            self.sparse.add_edge(s, sid, d);
            self.union(s, sid);
        }
        status
    }

    /// True when two visible sparse vertices are much farther apart in the
    /// sparse graph than through `x`.
    fn closes_useful_cycle(&self, visible: &[(usize, f64)]) -> bool {
        for (i, &(u, du)) in visible.iter().enumerate() {
            let targets: Vec<(usize, f64)> =
                visible[i + 1..].iter().map(|&(w, dw)| (w, self.stretch * (du + dw))).collect();
            if !targets.is_empty() && !all_within(&self.sparse, u, &targets) {
                return true;
            }
        }
        false
    }

    /// Re-checks every edge of both graphs at resolution `h`.
    pub fn edges_valid(&self, ps: &PlanningSpace, h: f64) -> bool {
        [&self.dense, &self.sparse]
            .iter()
            .all(|g| g.edges().all(|(a, b, _)| ps.segment_free(g.vertex(a), g.vertex(b), h)))
    }

    /// Structured text dump: one `v id coords...` line per vertex and one
    /// `e a b length` line per edge, dense graph first.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "roadmap level {}", self.level);
        let _ = writeln!(out, "dense {} {}", self.dense.len(), self.dense.edge_count());
        self.dense.write_text(&mut out);
        let _ = writeln!(out, "sparse {} {}", self.sparse.len(), self.sparse.edge_count());
        self.sparse.write_text(&mut out);
        out
    }

    pub fn sparse_path(&self, vertices: &[usize], ps: &PlanningSpace) -> Path {
        let w = vertices.iter().map(|&v| Configuration::from(self.sparse.vertex(v))).collect();
        Path::dedup(self.level, w, ps.space())
    }
}

/// True when every `(vertex, limit)` target lies within `limit` of `source`
/// in `g`. The search stops as soon as the answer is known.
fn all_within(g: &Graph, source: usize, targets: &[(usize, f64)]) -> bool {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    let cutoff = targets.iter().map(|t| t.1).fold(0.0, f64::max);
    let mut pending = targets.len();
    let mut limits: std::collections::HashMap<usize, f64> = targets.iter().copied().collect();
    let mut dist: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(Item(0.0, source));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[&v] {
            continue;
        }
        if let Some(limit) = limits.remove(&v) {
            if d > limit {
                return false;
            }
            pending -= 1;
            if pending == 0 {
                return true;
            }
        }
        for &(w, l) in g.neighbors(v) {
            let nd = d + l;
            if nd <= cutoff && dist.get(&w).map_or(true, |&old| nd < old) {
                dist.insert(w, nd);
                heap.push(Item(nd, w));
            }
        }
    }
    false
}

struct Sampler<'a> {
    level: usize,
    bias: Option<(&'a Path, ArcLength<'a>)>,
}

impl<'a> Sampler<'a> {
    fn new(chain: &BundleChain, level: usize, bias: Bias<'a>) -> Result<Self> {
        match bias {
            Bias::Uniform => Ok(Sampler { level, bias: None }),
            Bias::Path(p) => {
                if level == 0 || p.level() + 1 != level {
                    return Err(Error::InvalidPath(format!(
                        "bias path on level {} cannot guide growth on level {level}",
                        p.level()
                    )));
                }
                let arc = ArcLength::new(p, chain.level(level - 1).space());
                Ok(Sampler { level, bias: Some((p, arc)) })
            }
        }
    }

    fn sample(&self, chain: &BundleChain, radii: &Radii, rng: &mut ChaCha8Rng) -> Configuration {
        match &self.bias {
            None => chain.level(self.level).space().sample_uniform(rng),
            Some((p, arc)) => {
                let base = chain.level(self.level - 1);
                let mut y = vec![0.0; p.start().len()];
                arc.eval_into(base.space(), rng.gen_range(0.0..=1.0), &mut y);
                let y = sample_ball(base, &y, radii.epsilon, rng);
                chain.sample_fiber(&y, self.level, rng).expect("dimensions agree")
            }
        }
    }
}

//! The local-minima tree and its top-down expansion.
//!
//! The root stands for the empty set and has no path. A node on level `k`
//! holds a local minimum on `X_k`; its children are minima on `X_{k+1}` that
//! project and optimize back onto it. Expanding a node grows that node's
//! roadmap on the next level near its path, draws up to `2N` candidate paths
//! from the sparse graph, optimizes them and keeps the ones that refine the
//! node and are not visible to an existing child.

mod enumerate;
mod format;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::BundleChain;
use crate::cspace::{Configuration, Path};
use crate::equivalence::{is_visible, minima_exists, projection_equivalent, VisibilityParams};
use crate::error::{Error, Result};
use crate::optimize::{is_fixed_point, optimize, OptimizerParams};
use crate::roadmap::{Bias, GrowthParams, GrowthStats, Ptc, Roadmap, GOAL, START};

pub use enumerate::{
    candidate_paths, enumerate_paths, penalized_paths, Enumeration, DFS_EXPANSION_LIMIT,
    EDGE_PENALTY,
};
pub use format::{NodeRecord, ScenarioStamp, TreeDocument, TREE_FORMAT, TREE_FORMAT_VERSION};

pub const ROOT: usize = 0;

/// Parameters of the explorer loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorerParams {
    /// Maximum number of children per node.
    pub n: usize,
    /// Roadmap growth budget per expansion.
    pub budget: Ptc,
    pub seed: u64,
    pub enumeration: Enumeration,
    /// Childless expansions before a node is marked spurious.
    pub spurious_attempts: u32,
    pub growth: GrowthParams,
    pub optimizer: OptimizerParams,
    pub visibility: VisibilityParams,
}

impl Default for ExplorerParams {
    fn default() -> Self {
        ExplorerParams {
            n: 7,
            budget: Ptc::Iterations(20_000),
            seed: 0,
            enumeration: Enumeration::default(),
            spurious_attempts: 3,
            growth: GrowthParams::default(),
            optimizer: OptimizerParams::default(),
            visibility: VisibilityParams::default(),
        }
    }
}

impl ExplorerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::OutOfRange("n must be at least 1".into()));
        }
        if self.spurious_attempts == 0 {
            return Err(Error::OutOfRange("spurious_attempts must be at least 1".into()));
        }
        self.growth.validate()?;
        self.optimizer.validate()?;
        self.visibility.validate()
    }
}

/// A bundle chain with its start and goal, restricted to every level.
#[derive(Clone, Debug)]
pub struct Problem {
    chain: BundleChain,
    endpoints: Vec<(Configuration, Configuration)>,
}

impl Problem {
    /// `start` and `goal` live on the top level and must be free on every
    /// level after projection. Levels are checked from the top down.
    pub fn new(chain: BundleChain, start: Configuration, goal: Configuration) -> Result<Self> {
        let k = chain.depth();
        let mut endpoints = Vec::with_capacity(k + 1);
        for level in 0..=k {
            let ps = chain.level(level);
            let s = chain.project_to(&start, k, level)?;
            let g = chain.project_to(&goal, k, level)?;
            let (mut s, mut g) = (s.into_inner(), g.into_inner());
            ps.space().normalize(&mut s);
            ps.space().normalize(&mut g);
            endpoints.push((Configuration::new(s), Configuration::new(g)));
        }
        for level in (0..=k).rev() {
            let (s, g) = &endpoints[level];
            for (which, x) in [("start", s), ("goal", g)] {
                if !chain.level(level).is_free(x) {
                    return Err(Error::Infeasible { which, level });
                }
            }
        }
        Ok(Problem { chain, endpoints })
    }

    pub fn chain(&self) -> &BundleChain {
        &self.chain
    }

    pub fn depth(&self) -> usize {
        self.chain.depth()
    }

    pub fn start(&self, level: usize) -> &Configuration {
        &self.endpoints[level].0
    }

    pub fn goal(&self, level: usize) -> &Configuration {
        &self.endpoints[level].1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Unexpanded,
    Expanded,
    /// Repeated expansion found no refinement.
    Spurious,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaNode {
    pub id: usize,
    /// `None` for the root.
    pub level: Option<usize>,
    pub path: Option<Path>,
    pub parent: Option<usize>,
    /// Sorted by ascending cost.
    pub children: Vec<usize>,
    pub status: NodeStatus,
    pub cost: Option<f64>,
    /// Completed expansions of this node.
    pub attempts: u32,
}

impl MinimaNode {
    /// The level its children live on.
    pub fn child_level(&self) -> usize {
        self.level.map_or(0, |k| k + 1)
    }
}

/// Rooted tree of minima across levels, plus the roadmap each expanded node
/// grew for its children.
#[derive(Clone, Debug)]
pub struct MinimaTree {
    nodes: Vec<MinimaNode>,
    roadmaps: BTreeMap<usize, Roadmap>,
}

impl Default for MinimaTree {
    fn default() -> Self {
        Self::new()
    }
}

/// Counters for one expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionStats {
    pub growth: GrowthStats,
    pub enumerated: usize,
    pub not_equivalent: usize,
    pub duplicates: usize,
    pub accepted: usize,
}

/// Progress reported while an expansion runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub iterations: u64,
    pub candidates: usize,
}

/// A detached expansion: everything needed to grow and filter candidates
/// without holding the tree.
#[derive(Debug)]
pub struct ExpansionJob {
    node: usize,
    level: usize,
    attempt: u32,
    bias: Option<Path>,
    existing: Vec<Path>,
    roadmap: Roadmap,
}

#[derive(Debug)]
pub struct ExpansionResult {
    pub node: usize,
    pub accepted: Vec<Path>,
    pub stats: ExpansionStats,
    roadmap: Roadmap,
}

const TAG_ROADMAP: u64 = 1;
const TAG_OPTIMIZE: u64 = 2;
const TAG_PROJECT: u64 = 3;
const TAG_AUDIT: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for a tuple of identifiers.
pub(crate) fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

impl ExpansionJob {
    pub fn node(&self) -> usize {
        self.node
    }

    /// Grows the roadmap, then enumerates, optimizes and filters candidates.
    pub fn run(
        mut self,
        problem: &Problem,
        params: &ExplorerParams,
        mut progress: impl FnMut(Progress),
    ) -> Result<ExpansionResult> {
        let chain = problem.chain();
        let bias = self.bias.as_ref().map_or(Bias::Uniform, Bias::Path);
        let mut accepted: Vec<Path> = Vec::new();
        self.roadmap.grow_until(chain, bias, params.budget, |s| {
            progress(Progress { iterations: s.iterations, candidates: 0 })
        })?;
        let mut stats = ExpansionStats { growth: self.roadmap.stats(), ..Default::default() };
        let ps = chain.level(self.level);
        let candidates =
            candidate_paths(self.roadmap.sparse(), START, GOAL, 2 * params.n, params.enumeration)?;
        stats.enumerated = candidates.len();
        for (idx, vertices) in candidates.iter().enumerate() {
            if self.existing.len() + accepted.len() >= params.n {
                break;
            }
            let raw = self.roadmap.sparse_path(vertices, ps);
            let parts = [self.node as u64, self.attempt as u64, idx as u64];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                &[parts[0], parts[1], parts[2], TAG_OPTIMIZE],
            ));
            let q = match optimize(&raw, ps, &params.optimizer, &mut rng) {
                Ok(q) => q,
                Err(e) => {
                    log::debug!("candidate {idx} skipped: {e}");
                    continue;
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                &[parts[0], parts[1], parts[2], TAG_PROJECT],
            ));
            if !projection_equivalent(
                &q,
                self.bias.as_ref(),
                chain,
                &params.optimizer,
                &params.visibility,
                &mut rng,
            )? {
                stats.not_equivalent += 1;
                continue;
            }
            if minima_exists(&q, self.existing.iter().chain(&accepted), ps, &params.visibility)? {
                stats.duplicates += 1;
                continue;
            }
            accepted.push(q);
            progress(Progress { iterations: stats.growth.iterations, candidates: accepted.len() });
        }
        stats.accepted = accepted.len();
        Ok(ExpansionResult { node: self.node, accepted, stats, roadmap: self.roadmap })
    }
}

impl MinimaTree {
    /// A tree holding only the root.
    pub fn new() -> Self {
        MinimaTree {
            nodes: vec![MinimaNode {
                id: ROOT,
                level: None,
                path: None,
                parent: None,
                children: Vec::new(),
                status: NodeStatus::Unexpanded,
                cost: None,
                attempts: 0,
            }],
            roadmaps: BTreeMap::new(),
        }
    }

    pub fn nodes(&self) -> &[MinimaNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&MinimaNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The roadmap grown while expanding `id`, if any.
    pub fn roadmap(&self, id: usize) -> Option<&Roadmap> {
        self.roadmaps.get(&id)
    }

    /// Node counts per level, root level first as `-1`.
    pub fn level_counts(&self) -> Vec<(i64, usize)> {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.level.map_or(-1, |k| k as i64)).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }

    /// Detaches an expansion of `id`. The node's cached roadmap moves into
    /// the job and returns with [`MinimaTree::commit_expansion`].
    pub fn begin_expansion(
        &mut self,
        id: usize,
        problem: &Problem,
        params: &ExplorerParams,
    ) -> Result<ExpansionJob> {
        params.validate()?;
        let node = self.node(id)?;
        if node.level == Some(problem.depth()) {
            return Err(Error::LeafLevel(id));
        }
        let level = node.child_level();
        let bias = node.path.clone();
        let existing = node
            .children
            .iter()
            .map(|&c| self.nodes[c].path.clone().expect("non-root nodes carry paths"))
            .collect();
        let attempt = node.attempts;
        let roadmap = match self.roadmaps.remove(&id) {
            Some(r) => r,
            None => Roadmap::new(
                problem.chain(),
                level,
                problem.start(level),
                problem.goal(level),
                &params.growth,
                derive_seed(params.seed, &[id as u64, TAG_ROADMAP]),
            )?,
        };
        Ok(ExpansionJob { node: id, level, attempt, bias, existing, roadmap })
    }

    /// Adds the accepted paths as children and returns their ids.
    pub fn commit_expansion(
        &mut self,
        result: ExpansionResult,
        params: &ExplorerParams,
        problem: &Problem,
    ) -> Result<Vec<usize>> {
        let id = result.node;
        let level = self.node(id)?.child_level();
        let space = problem.chain().level(level).space();
        self.roadmaps.insert(id, result.roadmap);
        let mut new_ids = Vec::with_capacity(result.accepted.len());
        for path in result.accepted {
            let child = self.nodes.len();
            let cost = path.cost(space);
            self.nodes.push(MinimaNode {
                id: child,
                level: Some(level),
                path: Some(path),
                parent: Some(id),
                children: Vec::new(),
                status: NodeStatus::Unexpanded,
                cost: Some(cost),
                attempts: 0,
            });
            self.nodes[id].children.push(child);
            new_ids.push(child);
        }
        let mut children = std::mem::take(&mut self.nodes[id].children);
        children.sort_by(|&a, &b| {
            let (ca, cb) = (self.nodes[a].cost.unwrap(), self.nodes[b].cost.unwrap());
            ca.total_cmp(&cb).then(a.cmp(&b))
        });
        let node = &mut self.nodes[id];
        node.children = children;
        node.attempts += 1;
        if node.status != NodeStatus::Spurious || !node.children.is_empty() {
            node.status = NodeStatus::Expanded;
        }
        if node.children.is_empty() {
            self.mark_spurious(id, params, problem.depth());
        }
        Ok(new_ids)
    }

    /// Marks an expanded, childless, non-root node below the top level that
    /// has been expanded at least `spurious_attempts` times. Returns whether
    /// the node is now spurious.
    pub fn mark_spurious(&mut self, id: usize, params: &ExplorerParams, depth: usize) -> bool {
        let Some(node) = self.nodes.get_mut(id) else {
            log::warn!("mark_spurious: unknown node {id}");
            return false;
        };
        let eligible = node.parent.is_some()
            && node.children.is_empty()
            && node.status != NodeStatus::Unexpanded
            && node.level.is_some_and(|k| k < depth)
            && node.attempts >= params.spurious_attempts;
        if eligible {
            node.status = NodeStatus::Spurious;
        } else if node.status != NodeStatus::Spurious {
            log::debug!("node {id} does not qualify as spurious");
        }
        node.status == NodeStatus::Spurious
    }

    /// Node ids in breadth-first order.
    pub fn breadth_first(&self) -> Vec<usize> {
        let mut order = vec![ROOT];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.nodes[order[i]].children.iter().copied());
            i += 1;
        }
        order
    }

    /// Checks the tree invariants and returns one message per violation.
    pub fn audit(&self, problem: &Problem, params: &ExplorerParams) -> Vec<String> {
        let mut out = Vec::new();
        let chain = problem.chain();
        for node in &self.nodes {
            let (Some(level), Some(path)) = (node.level, node.path.as_ref()) else {
                if node.id != ROOT {
                    out.push(format!("node {} has no level or path", node.id));
                }
                continue;
            };
            let ps = chain.level(level);
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[node.id as u64, TAG_AUDIT]));
            if !ps.path_free(path, ps.resolution()) {
                out.push(format!("node {} path collides", node.id));
            }
            match is_fixed_point(path, ps, &params.optimizer, &mut rng) {
                Ok(true) => {}
                Ok(false) => out.push(format!("node {} is not a fixed point", node.id)),
                Err(e) => out.push(format!("node {}: {e}", node.id)),
            }
            let parent = &self.nodes[node.parent.unwrap_or(ROOT)];
            if parent.child_level() != level {
                out.push(format!("node {} sits on the wrong level", node.id));
            }
            match projection_equivalent(
                path,
                parent.path.as_ref(),
                chain,
                &params.optimizer,
                &params.visibility,
                &mut rng,
            ) {
                Ok(true) => {}
                Ok(false) => out.push(format!("node {} does not refine its parent", node.id)),
                Err(e) => out.push(format!("node {}: {e}", node.id)),
            }
        }
        for node in &self.nodes {
            if node.children.len() > params.n {
                out.push(format!("node {} has {} children", node.id, node.children.len()));
            }
            let costs: Vec<f64> = node.children.iter().map(|&c| self.nodes[c].cost.unwrap()).collect();
            if costs.windows(2).any(|w| w[0] > w[1]) {
                out.push(format!("children of node {} are not sorted by cost", node.id));
            }
            let level = node.child_level();
            for (i, &a) in node.children.iter().enumerate() {
                for &b in &node.children[i + 1..] {
                    let (pa, pb) = (self.nodes[a].path.as_ref(), self.nodes[b].path.as_ref());
                    if let (Some(pa), Some(pb)) = (pa, pb) {
                        if is_visible(pa, pb, chain.level(level), &params.visibility).unwrap_or(true) {
                            out.push(format!("siblings {a} and {b} are visible to each other"));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Grows, enumerates, filters and commits in one call.
pub fn update_minima_tree(
    tree: &mut MinimaTree,
    id: usize,
    problem: &Problem,
    params: &ExplorerParams,
) -> Result<Vec<usize>> {
    let job = tree.begin_expansion(id, problem, params)?;
    let result = job.run(problem, params, |_| {})?;
    tree.commit_expansion(result, params, problem)
}

/// Expands every node above `depth` breadth-first: depth 0 leaves the root
/// alone, depth 1 expands the root, depth 2 also expands every level-0 node.
pub fn expand_to_depth(
    tree: &mut MinimaTree,
    depth: usize,
    problem: &Problem,
    params: &ExplorerParams,
) -> Result<()> {
    let mut frontier = vec![ROOT];
    for d in 0..depth {
        let mut next = Vec::new();
        for id in frontier {
            if d > 0 && tree.node(id)?.level == Some(problem.depth()) {
                continue;
            }
            update_minima_tree(tree, id, problem, params)?;
            next.extend(tree.node(id)?.children.iter().copied());
        }
        next.sort_unstable();
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(())
}

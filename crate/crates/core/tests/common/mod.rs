#![allow(dead_code)]

use std::time::{Duration, Instant};

use minima_explorer::cspace::{Configuration, Path, PlanningSpace};
use minima_explorer::minima_tree::{expand_to_depth, ExplorerParams, MinimaTree, ROOT};
use minima_explorer::scenarios::Scenario;
use rand::Rng;

/// A uniformly sampled free configuration.
pub fn free_sample<R: Rng>(ps: &PlanningSpace, rng: &mut R) -> Configuration {
    loop {
        let x = ps.space().sample_uniform(rng);
        if ps.is_free(&x) {
            return x;
        }
    }
}

/// A random collision-free polyline with `waypoints` vertices whose segments
/// are at most `step` long.
pub fn random_free_path<R: Rng>(
    ps: &PlanningSpace,
    level: usize,
    waypoints: usize,
    step: f64,
    rng: &mut R,
) -> Path {
    let space = ps.space();
    let h = ps.resolution();
    let mut w = vec![free_sample(ps, rng)];
    while w.len() < waypoints {
        let prev = w.last().unwrap().clone();
        let target = space.sample_uniform(rng);
        let d = space.distance(&prev, &target).unwrap();
        let t = if d > step { step / d } else { 1.0 };
        let next = space.interpolate(&prev, &target, t).unwrap();
        if space.distance(&prev, &next).unwrap() > 1e-6
            && !space.is_ambiguous(&prev, &next)
            && ps.is_free(&next)
            && ps.segment_free(&prev, &next, h)
        {
            w.push(next);
        }
    }
    Path::new(level, w, space).unwrap()
}

pub struct Run {
    pub scenario: Scenario,
    pub params: ExplorerParams,
    pub tree: MinimaTree,
    pub elapsed: Duration,
}

impl Run {
    /// Expands the builtin scenario all the way down with the given seed.
    pub fn full(name: &str, seed: u64) -> Run {
        let scenario = Scenario::builtin(name).unwrap();
        let mut params = scenario.params().clone();
        params.seed = seed;
        let mut tree = MinimaTree::new();
        let t = Instant::now();
        let depth = scenario.problem().depth() + 1;
        expand_to_depth(&mut tree, depth, scenario.problem(), &params).unwrap();
        Run { scenario, params, tree, elapsed: t.elapsed() }
    }

    pub fn level0(&self) -> Vec<usize> {
        self.tree.node(ROOT).unwrap().children.clone()
    }

    /// Child counts of the level-0 nodes, in cost order.
    pub fn split(&self) -> Vec<usize> {
        self.level0().iter().map(|&c| self.tree.node(c).unwrap().children.len()).collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        let top = self.scenario.problem().depth();
        self.tree.nodes().iter().filter(|n| n.level == Some(top)).map(|n| n.id).collect()
    }

    pub fn audit(&self) -> Vec<String> {
        self.tree.audit(self.scenario.problem(), &self.params)
    }
}

/// A random collision-free path from `a` to `b` through `vias` free
/// intermediate configurations.
pub fn random_path_between<R: Rng>(
    ps: &PlanningSpace,
    level: usize,
    a: &Configuration,
    b: &Configuration,
    vias: usize,
    rng: &mut R,
) -> Path {
    let space = ps.space();
    let h = ps.resolution();
    let sees = |x: &Configuration, y: &Configuration| !space.is_ambiguous(x, y) && ps.segment_free(x, y, h);
    loop {
        let mut w = vec![a.clone()];
        while w.len() <= vias {
            let x = free_sample(ps, rng);
            if !sees(w.last().unwrap(), &x) {
                break;
            }
            w.push(x);
        }
        if w.len() == vias + 1 && sees(w.last().unwrap(), b) {
            w.push(b.clone());
            return Path::new(level, w, space).unwrap();
        }
    }
}

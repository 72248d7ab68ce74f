//! Deciding whether two paths are deformations of one another.
//!
//! Two paths with shared endpoints are visible to each other when the
//! straight sweep that moves `p(t)` to `q(t)`, at matched arc-length
//! parameters, stays free. The sweep is sampled at rungs; neighbouring rungs
//! whose quadrilateral diagonals collide trigger local refinement.
//!
//! When the matched sweep fails, the two parameterizations may drift apart
//! by up to `max_shift` of the arc length: a monotone staircase through the
//! grid of free segments `p(s_i) q(t_j)` from one endpoint to the other
//! also witnesses a deformation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::BundleChain;
use crate::cspace::path::{ArcLength, COINCIDENT};
use crate::cspace::{angle_diff, Path, PlanningSpace};
use crate::error::{Error, Result};
use crate::optimize::{optimize_unchecked, OptimizerParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisibilityParams {
    pub n_rungs: usize,
    /// Local refinement stops once the rung spacing reaches `1 / (max_rungs - 1)`.
    pub max_rungs: usize,
    /// Largest parameter drift allowed between the two paths; zero keeps the
    /// matched sweep only.
    pub max_shift: f64,
}

impl Default for VisibilityParams {
    fn default() -> Self {
        VisibilityParams { n_rungs: 20, max_rungs: 160, max_shift: 0.1 }
    }
}

impl VisibilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rungs < 2 || self.max_rungs < self.n_rungs {
            return Err(Error::OutOfRange(format!(
                "need 2 <= n_rungs <= max_rungs, got {} and {}",
                self.n_rungs, self.max_rungs
            )));
        }
        if !(0.0..=1.0).contains(&self.max_shift) {
            return Err(Error::OutOfRange(format!("max_shift = {} not in [0, 1]", self.max_shift)));
        }
        Ok(())
    }
}

struct Rung {
    t: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    // Signed circle-axis offsets from p to q, antisymmetric under swapping.
    offsets: Vec<f64>,
}

struct Sweep<'a> {
    ps: &'a PlanningSpace,
    p: ArcLength<'a>,
    q: ArcLength<'a>,
    circles: Vec<usize>,
    min_gap: f64,
}

impl Sweep<'_> {
    fn rung(&self, t: f64) -> Rung {
        let dim = self.ps.space().dim();
        let mut p = vec![0.0; dim];
        let mut q = vec![0.0; dim];
        self.p.eval_into(self.ps.space(), t, &mut p);
        self.q.eval_into(self.ps.space(), t, &mut q);
        let offsets = self.offsets(&p, &q);
        Rung { t, p, q, offsets }
    }

    // Rung endpoints lie on the two paths, which are free at this resolution.
    fn sees(&self, a: &[f64], b: &[f64]) -> bool {
        !self.ps.space().is_ambiguous(a, b)
            && self.ps.segment_interior_free(a, b, self.ps.resolution())
    }

    fn continuous(&self, a: &Rung, b: &Rung) -> bool {
        a.offsets
            .iter()
            .zip(&b.offsets)
            .all(|(x, y)| (x - y).abs() <= std::f64::consts::PI)
    }

    /// Checks the band between two accepted rungs, refining where needed.
    fn band(&self, a: &Rung, b: &Rung) -> bool {
        let diagonals = self.sees(&a.p, &b.q) && self.sees(&a.q, &b.p);
        let continuous = self.continuous(a, b);
        if diagonals && continuous {
            return true;
        }
        if b.t - a.t <= self.min_gap {
            return continuous;
        }
        let mid = self.rung(0.5 * (a.t + b.t));
        self.sees(&mid.p, &mid.q) && self.band(a, &mid) && self.band(&mid, b)
    }

    fn offsets(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        self.circles
            .iter()
            .map(|&i| if p[i] <= q[i] { angle_diff(p[i], q[i]) } else { -angle_diff(q[i], p[i]) })
            .collect()
    }

    /// Searches the grid of `samples` points per path for a monotone chain
    /// of free segments with continuous circle offsets, staying within
    /// `window` cells of the diagonal.
    fn staircase(&self, samples: usize, window: usize) -> bool {
        let dim = self.ps.space().dim();
        let last = samples - 1;
        let eval = |arc: &ArcLength, i: usize| {
            let mut out = vec![0.0; dim];
            arc.eval_into(self.ps.space(), i as f64 / last as f64, &mut out);
            out
        };
        let ps: Vec<Vec<f64>> = (0..samples).map(|i| eval(&self.p, i)).collect();
        let qs: Vec<Vec<f64>> = (0..samples).map(|i| eval(&self.q, i)).collect();
        let mut visited = vec![false; samples * samples];
        let mut stack = vec![(0usize, 0usize, self.offsets(&ps[0], &qs[0]))];
        visited[0] = true;
        while let Some((i, j, off)) = stack.pop() {
            if i == last && j == last {
                return true;
            }
            for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                let (a, b) = (i + di, j + dj);
                if a > last || b > last || a.abs_diff(b) > window || visited[a * samples + b] {
                    continue;
                }
                if !self.sees(&ps[a], &qs[b]) {
                    visited[a * samples + b] = true;
                    continue;
                }
                let next = self.offsets(&ps[a], &qs[b]);
                if off.iter().zip(&next).any(|(x, y)| (x - y).abs() > std::f64::consts::PI) {
                    continue;
                }
                visited[a * samples + b] = true;
                stack.push((a, b, next));
            }
        }
        false
    }
}

fn check_endpoints(p: &Path, q: &Path, ps: &PlanningSpace) -> Result<()> {
    let dim = ps.space().dim();
    for x in [p.start(), q.start()] {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
    }
    if p.level() != q.level() {
        return Err(Error::InvalidPath("paths live on different levels".into()));
    }
    let s = ps.space();
    if s.dist(p.start(), q.start()) > COINCIDENT || s.dist(p.goal(), q.goal()) > COINCIDENT {
        return Err(Error::EndpointMismatch);
    }
    Ok(())
}

/// True when the matched-parameter straight sweep from `p` to `q` is free.
/// The relation is reflexive and exactly symmetric.
pub fn is_visible(p: &Path, q: &Path, ps: &PlanningSpace, params: &VisibilityParams) -> Result<bool> {
    params.validate()?;
    check_endpoints(p, q, ps)?;
    if p == q {
        return Ok(true);
    }
    let sweep = Sweep {
        ps,
        p: ArcLength::new(p, ps.space()),
        q: ArcLength::new(q, ps.space()),
        circles: (0..ps.space().dim()).filter(|&i| ps.space().axes()[i].is_circle()).collect(),
        min_gap: 1.0 / (params.max_rungs - 1) as f64 + 1e-12,
    };
    let n = params.n_rungs;
    let rungs: Vec<Rung> = (0..n).map(|i| sweep.rung(i as f64 / (n - 1) as f64)).collect();
    if rungs.iter().all(|r| sweep.sees(&r.p, &r.q))
        && rungs.windows(2).all(|w| sweep.band(&w[0], &w[1]))
    {
        return Ok(true);
    }
    let samples = params.max_rungs;
    let window = (params.max_shift * (samples - 1) as f64).floor() as usize;
    Ok(window > 0 && sweep.staircase(samples, window))
}

/// True when `q` is visible to some member of `set`.
pub fn minima_exists<'a>(
    q: &Path,
    set: impl IntoIterator<Item = &'a Path>,
    ps: &PlanningSpace,
    params: &VisibilityParams,
) -> Result<bool> {
    for other in set {
        if is_visible(q, other, ps, params)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Projects `child` one level down, optimizes it there and tests visibility
/// against `parent`. A missing parent stands for the root, which accepts
/// every child.
pub fn projection_equivalent<R: Rng + ?Sized>(
    child: &Path,
    parent: Option<&Path>,
    chain: &BundleChain,
    optimizer: &OptimizerParams,
    visibility: &VisibilityParams,
    rng: &mut R,
) -> Result<bool> {
    let Some(parent) = parent else {
        return Ok(true);
    };
    if child.level() != parent.level() + 1 {
        return Err(Error::InvalidPath(format!(
            "child on level {} cannot refine a parent on level {}",
            child.level(),
            parent.level()
        )));
    }
    let ps = chain.level(parent.level());
    let projected = chain.project_path(child)?;
    let reduced = optimize_unchecked(&projected, ps, optimizer, rng);
    is_visible(&reduced, parent, ps, visibility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cspace::{Axis, Configuration, Link, Obstacle, Robot, SpaceDescriptor, World};
    use std::f64::consts::PI;

    fn disk_world() -> PlanningSpace {
        PlanningSpace::new(
            SpaceDescriptor::euclidean(2, -5.0, 5.0).unwrap(),
            World::new(vec![Obstacle::Circle { center: [0.0, 0.0], radius: 1.0 }], Robot::Point)
                .unwrap(),
        )
        .unwrap()
    }

    fn path(ps: &PlanningSpace, pts: &[&[f64]]) -> Path {
        let w = pts.iter().map(|p| Configuration::new(p.to_vec())).collect();
        Path::new(0, w, ps.space()).unwrap()
    }

    #[test]
    fn same_side_visible_opposite_not() {
        let ps = disk_world();
        let v = VisibilityParams::default();
        let above = path(&ps, &[&[-3.0, 0.0], &[0.0, 2.0], &[3.0, 0.0]]);
        let above2 = path(&ps, &[&[-3.0, 0.0], &[-1.0, 1.5], &[1.0, 1.5], &[3.0, 0.0]]);
        let below = path(&ps, &[&[-3.0, 0.0], &[0.0, -2.0], &[3.0, 0.0]]);
        assert!(is_visible(&above, &above, &ps, &v).unwrap());
        assert!(is_visible(&above, &above2, &ps, &v).unwrap());
        assert!(!is_visible(&above, &below, &ps, &v).unwrap());
        assert!(!is_visible(&below, &above, &ps, &v).unwrap());
    }

    #[test]
    fn endpoints_must_match() {
        let ps = disk_world();
        let a = path(&ps, &[&[-3.0, 0.0], &[3.0, 3.0]]);
        let b = path(&ps, &[&[-3.0, 0.0], &[3.0, 2.0]]);
        assert_eq!(
            is_visible(&a, &b, &ps, &VisibilityParams::default()),
            Err(Error::EndpointMismatch)
        );
    }

    #[test]
    fn minima_exists_basics() {
        let ps = disk_world();
        let v = VisibilityParams::default();
        let a = path(&ps, &[&[-3.0, 0.0], &[0.0, 2.0], &[3.0, 0.0]]);
        assert!(!minima_exists(&a, [], &ps, &v).unwrap());
        assert!(minima_exists(&a, [&a], &ps, &v).unwrap());
    }

    #[test]
    fn opposite_arcs_on_a_free_circle_are_distinct() {
        let ps = PlanningSpace::new(
            SpaceDescriptor::new(vec![Axis::Circle]).unwrap(),
            World::new(vec![], Robot::Arm {
                base: [0.0, 0.0],
                links: vec![Link { length: 1.0, width: 0.1 }],
            })
            .unwrap(),
        )
        .unwrap();
        let ccw = path(&ps, &[&[0.0], &[PI / 2.0], &[-PI]]);
        let cw = path(&ps, &[&[0.0], &[-PI / 2.0], &[-PI]]);
        let v = VisibilityParams::default();
        assert!(!is_visible(&ccw, &cw, &ps, &v).unwrap());
        let ccw2 = path(&ps, &[&[0.0], &[1.0], &[2.5], &[-PI]]);
        assert!(is_visible(&ccw, &ccw2, &ps, &v).unwrap());
    }
}

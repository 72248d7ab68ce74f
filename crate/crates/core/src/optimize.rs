//! The path optimizer: randomized shortcutting alternated with vertex
//! reduction, run until a round stops paying off.
//!
//! A path is a local minimum when a further run of the optimizer cannot
//! lower its cost by more than the convergence tolerance. Segments whose
//! circle coordinates differ by half a turn are never created, since their
//! geodesic is not unique.

use rand::Rng;
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use crate::cspace::{angle_diff, wrap_angle, Configuration, Path, PlanningSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    /// Shortcut attempts per round.
    pub shortcut_rounds: usize,
    /// Vertex-reduction passes per round.
    pub vertex_reduction_passes: usize,
    /// Relative cost change below which a path counts as a fixed point.
    pub convergence_tol: f64,
    /// Hard cap on rounds.
    pub max_rounds: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            shortcut_rounds: 50,
            vertex_reduction_passes: 1,
            convergence_tol: 0.01,
            max_rounds: 400,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tol > 0.0 && self.convergence_tol <= 0.1) {
            return Err(Error::OutOfRange(format!(
                "convergence_tol = {} not in (0, 0.1]",
                self.convergence_tol
            )));
        }
        if self.vertex_reduction_passes == 0 || self.max_rounds == 0 {
            return Err(Error::OutOfRange(
                "vertex_reduction_passes and max_rounds must be at least 1".into(),
            ));
        }
        Ok(())
    }

    // Rounds continue while they improve by more than this fraction, which
    // keeps a later run well inside the tolerance.
    fn round_threshold(&self) -> f64 {
        self.convergence_tol / 10.0
    }
}

/// Optimizes `p`, which must be collision-free at the space's resolution.
pub fn optimize<R: Rng + ?Sized>(
    p: &Path,
    ps: &PlanningSpace,
    params: &OptimizerParams,
    rng: &mut R,
) -> Result<Path> {
    params.validate()?;
    if p.waypoints().iter().any(|w| w.len() != ps.space().dim()) {
        return Err(Error::DimensionMismatch {
            expected: ps.space().dim(),
            found: p.start().len(),
        });
    }
    if !ps.path_free(p, ps.resolution()) {
        return Err(Error::PathInCollision);
    }
    Ok(optimize_unchecked(p, ps, params, rng))
}

/// Like [`optimize`] without the collision precondition: only changes that
/// pass the collision check are made, existing segments are kept as they are.
/// New segments keep the planning clearance.
pub(crate) fn optimize_unchecked<R: Rng + ?Sized>(
    p: &Path,
    ps: &PlanningSpace,
    params: &OptimizerParams,
    rng: &mut R,
) -> Path {
    let mut w: Vec<Configuration> = p.waypoints().to_vec();
    let space = ps.space();
    let mut cost = polyline_cost(ps, &w);
    let mut rounds = 0;
    let mut stalled = 0;
    for _ in 0..MAX_CYCLES {
        let cycle_start = cost;
        while rounds < params.max_rounds {
            rounds += 1;
            let before = cost;
            for _ in 0..params.shortcut_rounds {
                if rng.gen_bool(0.5) {
                    try_shortcut(ps, &mut w, rng);
                } else {
                    try_partial_shortcut(ps, &mut w, rng);
                }
            }
            for _ in 0..params.vertex_reduction_passes {
                reduce_vertices(ps, &mut w);
            }
            cost = polyline_cost(ps, &w);
            if before - cost <= params.round_threshold() * cost {
                break;
            }
        }
        relax(ps, &mut w, params.round_threshold());
        reduce_vertices(ps, &mut w);
        cost = polyline_cost(ps, &w);
        if cycle_start - cost > params.round_threshold() * cost {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled == STALLED_CYCLES {
                break;
            }
        }
    }
    Path::dedup(p.level(), w, space)
}

/// Shortcut-then-relax cycles per run.
const MAX_CYCLES: usize = 8;

/// Consecutive cycles without progress that end a run. A single stalled
/// cycle can leave a segment that grazes an obstacle untouched.
const STALLED_CYCLES: usize = 2;

/// Waypoints per path during relaxation.
const RELAX_WAYPOINTS: usize = 64;
const RELAX_SWEEPS: usize = 200;

/// Resamples the path densely, then repeatedly pulls each interior waypoint
/// toward the midpoint of its neighbours while that is free and shorter.
fn relax(ps: &PlanningSpace, w: &mut Vec<Configuration>, threshold: f64) {
    let space = ps.space();
    let total = polyline_cost(ps, w);
    if w.len() < 3 || total <= 0.0 {
        return;
    }
    let spacing = total / RELAX_WAYPOINTS as f64;
    let mut dense = vec![w[0].clone()];
    for s in w.windows(2) {
        let pieces = (space.dist(&s[0], &s[1]) / spacing).ceil().max(1.0) as usize;
        let split: Vec<Configuration> = (1..pieces)
            .map(|k| {
                let mut out = vec![0.0; space.dim()];
                space.interpolate_into(&s[0], &s[1], k as f64 / pieces as f64, &mut out);
                Configuration::new(out)
            })
            .collect();
        // A segment is split only when every piece passes its own check.
        let mut chain = vec![&s[0]];
        chain.extend(split.iter());
        chain.push(&s[1]);
        if chain.windows(2).all(|c| sees(ps, c[0], c[1])) {
            dense.extend(split);
        }
        dense.push(s[1].clone());
    }
    *w = dense;
    let mut mid = vec![0.0; space.dim()];
    let mut cand = vec![0.0; space.dim()];
    for _ in 0..RELAX_SWEEPS {
        let mut gain = 0.0;
        for k in 1..w.len() - 1 {
            if space.is_ambiguous(&w[k - 1], &w[k + 1]) {
                continue;
            }
            space.interpolate_into(&w[k - 1], &w[k + 1], 0.5, &mut mid);
            let old = space.dist(&w[k - 1], &w[k]) + space.dist(&w[k], &w[k + 1]);
            for alpha in [1.0, 0.5, 0.25] {
                space.interpolate_into(&w[k], &mid, alpha, &mut cand);
                let new = space.dist(&w[k - 1], &cand) + space.dist(&cand, &w[k + 1]);
                if new < old - 1e-12 && sees(ps, &w[k - 1], &cand) && sees(ps, &cand, &w[k + 1]) {
                    w[k] = Configuration::new(cand.clone());
                    gain += old - new;
                    break;
                }
            }
        }
        if gain <= threshold * total / 10.0 {
            break;
        }
    }
}

/// True when a fresh optimizer run changes the cost by less than the
/// tolerance.
pub fn is_fixed_point<R: Rng + ?Sized>(
    p: &Path,
    ps: &PlanningSpace,
    params: &OptimizerParams,
    rng: &mut R,
) -> Result<bool> {
    let c = p.cost(ps.space());
    let q = optimize(p, ps, params, rng)?;
    Ok(c - q.cost(ps.space()) <= params.convergence_tol * c)
}

fn polyline_cost(ps: &PlanningSpace, w: &[Configuration]) -> f64 {
    w.windows(2).map(|s| ps.space().dist(&s[0], &s[1])).sum()
}

fn sees(ps: &PlanningSpace, a: &[f64], b: &[f64]) -> bool {
    !ps.space().is_ambiguous(a, b) && ps.segment_clear(a, b, ps.resolution())
}

/// Replaces the stretch between two random arc-length positions with a
/// straight segment when that is free and strictly shorter.
fn try_shortcut<R: Rng + ?Sized>(ps: &PlanningSpace, w: &mut Vec<Configuration>, rng: &mut R) {
    let space = ps.space();
    let lengths: Vec<f64> = w.windows(2).map(|s| space.dist(&s[0], &s[1])).collect();
    let total: f64 = lengths.iter().sum();
    if w.len() < 3 || total <= 0.0 {
        return;
    }
    let mut s1 = rng.gen_range(0.0..total);
    let mut s2 = rng.gen_range(0.0..total);
    if s1 > s2 {
        std::mem::swap(&mut s1, &mut s2);
    }
    let locate = |s: f64| {
        let mut acc = 0.0;
        for (i, &l) in lengths.iter().enumerate() {
            if s < acc + l || i + 1 == lengths.len() {
                return (i, if l > 0.0 { ((s - acc) / l).clamp(0.0, 1.0) } else { 0.0 });
            }
            acc += l;
        }
        unreachable!("lengths is non-empty")
    };
    let (i, ti) = locate(s1);
    let (j, tj) = locate(s2);
    if i == j {
        return;
    }
    let mut a = vec![0.0; space.dim()];
    let mut b = vec![0.0; space.dim()];
    space.interpolate_into(&w[i], &w[i + 1], ti, &mut a);
    space.interpolate_into(&w[j], &w[j + 1], tj, &mut b);
    let old = space.dist(&a, &w[i + 1])
        + lengths[i + 1..j].iter().sum::<f64>()
        + space.dist(&w[j], &b);
    let new = space.dist(&a, &b);
    if new >= old - 1e-12 * total {
        return;
    }
    if !sees(ps, &a, &b) || !sees(ps, &w[i], &a) || !sees(ps, &b, &w[j + 1]) {
        return;
    }
    let tail = w.split_off(j + 1);
    w.truncate(i + 1);
    w.push(Configuration::new(a));
    w.push(Configuration::new(b));
    w.extend(tail);
}

/// Straightens one coordinate between two waypoints, leaving the others in
/// place. Interpolation follows the cumulative arc length of the stretch.
fn try_partial_shortcut<R: Rng + ?Sized>(ps: &PlanningSpace, w: &mut [Configuration], rng: &mut R) {
    let space = ps.space();
    if w.len() < 3 {
        return;
    }
    let mut i = rng.gen_range(0..w.len());
    let mut j = rng.gen_range(0..w.len());
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    if j < i + 2 {
        return;
    }
    let axis = rng.gen_range(0..space.dim());
    let circle = space.axes()[axis].is_circle();
    let (from, to) = (w[i][axis], w[j][axis]);
    let delta = if circle { angle_diff(from, to) } else { to - from };
    if circle && delta.abs() >= PI - 1e-9 {
        return;
    }
    let mut cumulative = vec![0.0];
    for s in w[i..=j].windows(2) {
        cumulative.push(cumulative.last().unwrap() + space.dist(&s[0], &s[1]));
    }
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return;
    }
    let mut stretch: Vec<Configuration> = w[i..=j].to_vec();
    for (k, c) in stretch.iter_mut().enumerate().take(j - i).skip(1) {
        let mut coords = c.coords().to_vec();
        let v = from + delta * cumulative[k] / total;
        coords[axis] = if circle { wrap_angle(v) } else { v };
        *c = Configuration::new(coords);
    }
    let old = total;
    let new: f64 = stretch.windows(2).map(|s| space.dist(&s[0], &s[1])).sum();
    if new >= old - 1e-12 * old {
        return;
    }
    if stretch.windows(2).all(|s| sees(ps, &s[0], &s[1])) {
        w[i..=j].clone_from_slice(&stretch);
    }
}

/// Removes interior waypoints whose neighbours see each other directly.
fn reduce_vertices(ps: &PlanningSpace, w: &mut Vec<Configuration>) {
    let space = ps.space();
    let mut i = 1;
    while i + 1 < w.len() {
        let direct = space.dist(&w[i - 1], &w[i + 1]);
        let via = space.dist(&w[i - 1], &w[i]) + space.dist(&w[i], &w[i + 1]);
        if direct <= via && sees(ps, &w[i - 1], &w[i + 1]) {
            w.remove(i);
        } else {
            i += 1;
        }
    }
}

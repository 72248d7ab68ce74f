//! Fiber-bundle chains `X_K -> ... -> X_0`.
//!
//! Level `k` owns a planning space; for `k >= 1` a projection maps it onto
//! level `k - 1` by keeping a subset of coordinates. The fiber over a base
//! point is filled by sampling the dropped coordinates uniformly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cspace::{Axis, Configuration, Path, PlanningSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Projection {
    Identity,
    /// Removes the listed coordinates of the total space.
    DropFactors { indices: Vec<usize> },
}

#[derive(Clone, Debug)]
struct Link {
    projection: Projection,
    retained: Vec<usize>,
    dropped: Vec<usize>,
}

/// Ordered levels `0..=K`, level `K` being the full problem.
#[derive(Clone, Debug)]
pub struct BundleChain {
    levels: Vec<PlanningSpace>,
    // links[k - 1] maps level k onto level k - 1.
    links: Vec<Link>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityWitness {
    pub level: usize,
    pub configuration: Configuration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub samples_per_level: usize,
    pub violations: usize,
    /// At most [`MAX_WITNESSES`] free total-space points over colliding base points.
    pub witnesses: Vec<AdmissibilityWitness>,
}

pub const MAX_WITNESSES: usize = 16;

impl BundleChain {
    /// `levels[0]` is the coarsest space; `projections[k - 1]` maps level `k`
    /// onto level `k - 1`.
    pub fn new(levels: Vec<PlanningSpace>, projections: Vec<Projection>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidBundle("a chain needs at least one level".into()));
        }
        if projections.len() + 1 != levels.len() {
            return Err(Error::InvalidBundle(format!(
                "{} levels need {} projections, got {}",
                levels.len(),
                levels.len() - 1,
                projections.len()
            )));
        }
        let mut links = Vec::with_capacity(projections.len());
        for (i, projection) in projections.into_iter().enumerate() {
            let (total, base) = (levels[i + 1].space(), levels[i].space());
            let dropped = match &projection {
                Projection::Identity => Vec::new(),
                Projection::DropFactors { indices } => {
                    let mut d = indices.clone();
                    d.sort_unstable();
                    d.dedup();
                    if d.is_empty() || d.len() != indices.len() {
                        return Err(Error::InvalidBundle(format!(
                            "level {}: drop indices {indices:?} must be nonempty and distinct",
                            i + 1
                        )));
                    }
                    if let Some(&bad) = d.iter().find(|&&j| j >= total.dim()) {
                        return Err(Error::InvalidBundle(format!(
                            "level {}: drop index {bad} out of range for a {}D space",
                            i + 1,
                            total.dim()
                        )));
                    }
                    if d.len() == total.dim() {
                        return Err(Error::InvalidBundle(format!(
                            "level {}: cannot drop every coordinate",
                            i + 1
                        )));
                    }
                    d
                }
            };
            let expected = total.without_axes(&dropped)?;
            if &expected != base {
                return Err(Error::InvalidBundle(format!(
                    "level {}: base space does not match the total space with {dropped:?} removed",
                    i + 1
                )));
            }
            let retained = (0..total.dim()).filter(|j| !dropped.contains(j)).collect();
            links.push(Link { projection, retained, dropped });
        }
        Ok(BundleChain { levels, links })
    }

    /// The number of projections `K`.
    pub fn depth(&self) -> usize {
        self.links.len()
    }

    pub fn level(&self, k: usize) -> &PlanningSpace {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[PlanningSpace] {
        &self.levels
    }

    pub fn top(&self) -> &PlanningSpace {
        self.levels.last().unwrap()
    }

    pub fn projection(&self, k: usize) -> Result<&Projection> {
        self.link(k).map(|l| &l.projection)
    }

    fn link(&self, k: usize) -> Result<&Link> {
        if k == 0 || k > self.depth() {
            return Err(Error::NoBase(k));
        }
        Ok(&self.links[k - 1])
    }

    /// Maps a level-`k` configuration onto level `k - 1`.
    pub fn project(&self, x: &[f64], k: usize) -> Result<Configuration> {
        let link = self.link(k)?;
        let dim = self.levels[k].space().dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
        }
        Ok(Configuration::new(link.retained.iter().map(|&j| x[j]).collect()))
    }

    /// Maps a level-`from` configuration down to level `to <= from`.
    pub fn project_to(&self, x: &[f64], from: usize, to: usize) -> Result<Configuration> {
        if to > from || from > self.depth() {
            return Err(Error::OutOfRange(format!("cannot project level {from} to level {to}")));
        }
        let mut y = Configuration::from(x);
        for k in (to + 1..=from).rev() {
            y = self.project(&y, k)?;
        }
        Ok(y)
    }

    /// Pointwise projection with consecutive duplicates removed.
    pub fn project_path(&self, path: &Path) -> Result<Path> {
        let k = path.level();
        let w = path
            .waypoints()
            .iter()
            .map(|x| self.project(x, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Path::dedup(k - 1, w, self.levels[k - 1].space()))
    }

    /// A level-`k` configuration projecting exactly onto the level-`k - 1`
    /// point `y`.
    pub fn sample_fiber<R: Rng + ?Sized>(&self, y: &[f64], k: usize, rng: &mut R) -> Result<Configuration> {
        let link = self.link(k)?;
        let base_dim = self.levels[k - 1].space().dim();
        if y.len() != base_dim {
            return Err(Error::DimensionMismatch { expected: base_dim, found: y.len() });
        }
        let total = self.levels[k].space();
        let mut x = vec![0.0; total.dim()];
        for (&j, &v) in link.retained.iter().zip(y) {
            x[j] = v;
        }
        for &j in &link.dropped {
            x[j] = total.sample_axis(j, rng);
        }
        Ok(Configuration::new(x))
    }

    /// Samples each level `k >= 1` uniformly and counts free points whose
    /// projection collides.
    pub fn check_admissibility(&self, n_samples: usize, seed: u64) -> AdmissibilityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violations = 0;
        let mut witnesses = Vec::new();
        for k in 1..=self.depth() {
            let ps = &self.levels[k];
            for _ in 0..n_samples {
                let x = ps.space().sample_uniform(&mut rng);
                if !ps.is_free(&x) {
                    continue;
                }
                let y = self.project(&x, k).expect("dimension checked");
                if !self.levels[k - 1].is_free(&y) {
                    violations += 1;
                    if witnesses.len() < MAX_WITNESSES {
                        witnesses.push(AdmissibilityWitness { level: k, configuration: x });
                    }
                }
            }
        }
        AdmissibilityReport { samples_per_level: n_samples, violations, witnesses }
    }
}

/// Uniform sample in the metric ball of radius `r` around `center`, by
/// rejection from the enclosing box. Circle coordinates are wrapped.
pub(crate) fn sample_ball<R: Rng + ?Sized>(
    ps: &PlanningSpace,
    center: &[f64],
    r: f64,
    rng: &mut R,
) -> Configuration {
    let space = ps.space();
    let mut x = vec![0.0; space.dim()];
    if r <= 0.0 {
        x.copy_from_slice(center);
        return Configuration::new(x);
    }
    loop {
        let mut d_sq = 0.0;
        for (i, w) in space.weights().iter().enumerate() {
            let u = rng.gen_range(-1.0..=1.0) * r;
            d_sq += u * u;
            let step = u / w;
            x[i] = match space.axes()[i] {
                Axis::Euclidean { .. } => center[i] + step,
                Axis::Circle => crate::cspace::wrap_angle(center[i] + step.clamp(-PI, PI)),
            };
        }
        if d_sq <= r * r {
            return Configuration::new(x);
        }
    }
}

use super::{Configuration, Path, Robot, SpaceDescriptor, World};
use crate::error::{Error, Result};

/// Collision resolution as a fraction of the shortest Euclidean axis.
pub const DEFAULT_RESOLUTION_FRACTION: f64 = 0.01;

/// Default planning clearance as a fraction of the resolution.
pub const DEFAULT_CLEARANCE_FRACTION: f64 = 0.25;

/// A configuration space together with the world that realizes its
/// constraint function.
///
/// Roadmaps and the optimizer keep a small clearance from obstacles by
/// checking against a padded robot; the constraint function itself and the
/// visibility sweep use the exact robot.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningSpace {
    space: SpaceDescriptor,
    world: World,
    padded: World,
    resolution: f64,
    clearance: Option<f64>,
}

impl PlanningSpace {
    pub fn new(space: SpaceDescriptor, world: World) -> Result<Self> {
        match world.robot().config_dim() {
            Some(d) if d != space.dim() => {
                return Err(Error::DimensionMismatch { expected: d, found: space.dim() })
            }
            None => {
                if !(2..=3).contains(&space.dim()) {
                    return Err(Error::InvalidWorld(format!(
                        "point robot needs a 2D or 3D space, got {}D",
                        space.dim()
                    )));
                }
                if let Some(wd) = world.workspace_dim() {
                    if wd != space.dim() {
                        return Err(Error::InvalidWorld(format!(
                            "{}D point robot among {wd}D obstacles",
                            space.dim()
                        )));
                    }
                }
            }
            _ => {}
        }
        let positional = match world.robot() {
            Robot::Point => space.dim(),
            Robot::Disk { .. } | Robot::Rectangle { .. } => 2,
            Robot::Ball { .. } => 3,
            Robot::Arm { .. } => 0,
        };
        if space.axes()[..positional].iter().any(|a| a.is_circle()) {
            return Err(Error::InvalidSpace("position axes must be Euclidean".into()));
        }
        let extent = space.shortest_euclidean_extent().unwrap_or(std::f64::consts::TAU);
        let resolution = DEFAULT_RESOLUTION_FRACTION * extent;
        let padded = world.padded(DEFAULT_CLEARANCE_FRACTION * resolution, space.dim());
        Ok(PlanningSpace { space, world, padded, resolution, clearance: None })
    }

    pub fn with_resolution(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::OutOfRange(format!("collision resolution must be positive, got {h}")));
        }
        self.resolution = h;
        self.padded = self.world.padded(self.clearance(), self.space.dim());
        Ok(self)
    }

    /// Sets the planning clearance, a workspace distance; zero plans against
    /// the exact robot.
    pub fn with_clearance(mut self, margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::OutOfRange(format!("clearance must be non-negative, got {margin}")));
        }
        self.clearance = Some(margin);
        self.padded = self.world.padded(margin, self.space.dim());
        Ok(self)
    }

    pub fn clearance(&self) -> f64 {
        self.clearance.unwrap_or(DEFAULT_CLEARANCE_FRACTION * self.resolution)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Default collision-check resolution `h`.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn measure(&self) -> f64 {
        self.space.measure()
    }

    /// The constraint function: 1 in collision or out of bounds, 0 when free.
    pub fn phi(&self, x: &[f64]) -> Result<u8> {
        if x.len() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: x.len() });
        }
        Ok(u8::from(!self.is_free(x)))
    }

    pub fn is_free(&self, x: &[f64]) -> bool {
        self.space.contains(x) && !self.world.collides(x)
    }

    /// Free with the planning clearance.
    pub fn is_clear(&self, x: &[f64]) -> bool {
        self.space.contains(x) && !self.padded.collides(x)
    }

    /// Checks the geodesic from `a` to `b` at a dyadic set of points spaced at
    /// most `h` apart, endpoints included. The endpoint order is canonicalized,
    /// so the result is symmetric, and halving `h` only adds check points.
    pub fn segment_free(&self, a: &[f64], b: &[f64], h: f64) -> bool {
        self.is_free(a) && self.is_free(b) && self.interior(a, b, h, |x| self.is_free(x))
    }

    /// [`Self::segment_free`] without the endpoint checks, for segments whose
    /// endpoints lie on paths already validated at the same resolution.
    pub(crate) fn segment_interior_free(&self, a: &[f64], b: &[f64], h: f64) -> bool {
        self.interior(a, b, h, |x| self.is_free(x))
    }

    /// [`Self::segment_free`] with the planning clearance.
    pub fn segment_clear(&self, a: &[f64], b: &[f64], h: f64) -> bool {
        self.is_clear(a) && self.is_clear(b) && self.interior(a, b, h, |x| self.is_clear(x))
    }

    fn interior(&self, a: &[f64], b: &[f64], h: f64, free: impl Fn(&[f64]) -> bool) -> bool {
        let (a, b) = if a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
            == Some(std::cmp::Ordering::Greater)
        {
            (b, a)
        } else {
            (a, b)
        };
        let d = self.space.dist(a, b);
        let mut n: u64 = 1;
        while d / n as f64 > h && n < 1 << 40 {
            n <<= 1;
        }
        let mut buf = vec![0.0; a.len()];
        // Coarse-to-fine: each pass checks the odd multiples of 1/stride.
        let mut stride = 2;
        while stride <= n {
            let step = n / stride;
            let mut i = step;
            while i < n {
                self.space.interpolate_into(a, b, i as f64 / n as f64, &mut buf);
                if !free(&buf) {
                    return false;
                }
                i += 2 * step;
            }
            stride <<= 1;
        }
        true
    }

    pub fn path_free(&self, path: &Path, h: f64) -> bool {
        path.waypoints().windows(2).all(|w| self.segment_free(&w[0], &w[1], h))
    }

    /// Robot footprint at `x`, for rendering.
    pub fn footprint(&self, x: &Configuration) -> Vec<super::Shape2> {
        self.world.footprint(x)
    }
}

//! Configuration spaces: products of bounded real axes and circles.
//!
//! A [`SpaceDescriptor`] is the ordered product of its axes. Distances use the
//! weighted product metric (root-sum-of-squares of per-axis differences, with
//! the shortest angular difference on circle axes) and interpolation follows
//! the per-axis geodesic.

mod geometry;
pub(crate) mod path;
mod planning;
mod world;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use geometry::Shape2;
pub use path::Path;
pub use planning::{PlanningSpace, DEFAULT_RESOLUTION_FRACTION};
pub use world::{Link, Obstacle, Robot, World};

/// Circle differences at least this close to pi have no unique geodesic.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-9;

/// Normalizes an angle to `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for tiny negative inputs.
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Signed shortest angular step from `a` to `b`, in `[-pi, pi)`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(b - a)
}

/// Unsigned shortest arc between two angles; exactly symmetric in its arguments.
fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (b - a).abs() % TAU;
    d.min(TAU - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Axis {
    Euclidean { lower: f64, upper: f64 },
    Circle,
}

impl Axis {
    pub fn extent(&self) -> f64 {
        match *self {
            Axis::Euclidean { lower, upper } => upper - lower,
            Axis::Circle => TAU,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Axis::Circle)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Axis::Euclidean { lower, upper } => rng.gen_range(lower..upper),
            Axis::Circle => rng.gen_range(-PI..PI),
        }
    }
}

/// A point in a [`SpaceDescriptor`]. Circle coordinates are kept in `[-pi, pi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Self {
        Configuration(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

impl From<&[f64]> for Configuration {
    fn from(v: &[f64]) -> Self {
        Configuration(v.to_vec())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:.4}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    axes: Vec<Axis>,
    weights: Vec<f64>,
}

impl SpaceDescriptor {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let weights = vec![1.0; axes.len()];
        Self::with_weights(axes, weights)
    }

    pub fn with_weights(axes: Vec<Axis>, weights: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one axis".into()));
        }
        if weights.len() != axes.len() {
            return Err(Error::DimensionMismatch {
                expected: axes.len(),
                found: weights.len(),
            });
        }
        for (i, axis) in axes.iter().enumerate() {
            if let Axis::Euclidean { lower, upper } = *axis {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::InvalidSpace(format!(
                        "axis {i}: lower bound {lower} must be below upper bound {upper}"
                    )));
                }
            }
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("axis weights must be positive, got {w}")));
        }
        Ok(SpaceDescriptor { axes, weights })
    }

    /// `n` unweighted real axes sharing the same bounds.
    pub fn euclidean(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![Axis::Euclidean { lower, upper }; n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Product of axis extents; circle axes contribute `2 pi`.
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Axis::extent).product()
    }

    /// `measure^(1/dim)`, the length scale used to normalize radii.
    pub fn characteristic_length(&self) -> f64 {
        self.measure().powf(1.0 / self.dim() as f64)
    }

    pub fn shortest_euclidean_extent(&self) -> Option<f64> {
        self.axes
            .iter()
            .filter(|a| !a.is_circle())
            .map(Axis::extent)
            .min_by(|a, b| a.total_cmp(b))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.dist(a, b))
    }

    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dist_sq(a, b).sqrt()
    }

    pub(crate) fn dist_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.axes.len() {
            let d = match self.axes[i] {
                Axis::Euclidean { .. } => b[i] - a[i],
                Axis::Circle => circle_gap(a[i], b[i]),
            } * self.weights[i];
            acc += d * d;
        }
        acc
    }

    pub fn interpolate(&self, a: &[f64], b: &[f64], t: f64) -> Result<Configuration> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("interpolation parameter {t} not in [0, 1]")));
        }
        let mut out = vec![0.0; self.dim()];
        self.interpolate_into(a, b, t, &mut out);
        Ok(Configuration(out))
    }

    pub(crate) fn interpolate_into(&self, a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
        if t <= 0.0 {
            out.copy_from_slice(a);
            return;
        }
        if t >= 1.0 {
            out.copy_from_slice(b);
            return;
        }
        for i in 0..self.axes.len() {
            out[i] = match self.axes[i] {
                Axis::Euclidean { .. } => a[i] + t * (b[i] - a[i]),
                Axis::Circle => wrap_angle(a[i] + t * angle_diff(a[i], b[i])),
            };
        }
    }

    /// True when some circle axis separates `a` and `b` by (numerically) pi,
    /// so the geodesic between them is not unique.
    pub fn is_ambiguous(&self, a: &[f64], b: &[f64]) -> bool {
        self.axes.iter().enumerate().any(|(i, axis)| {
            axis.is_circle() && angle_diff(a[i], b[i]).abs() >= PI - ANTIPODAL_TOLERANCE
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self.axes.iter().zip(x).all(|(axis, &v)| match *axis {
                Axis::Euclidean { lower, upper } => v >= lower && v <= upper,
                Axis::Circle => v.is_finite(),
            })
    }

    /// Wraps circle coordinates into `[-pi, pi)`.
    pub fn normalize(&self, x: &mut [f64]) {
        for (axis, v) in self.axes.iter().zip(x.iter_mut()) {
            if axis.is_circle() {
                *v = wrap_angle(*v);
            }
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        Configuration(self.axes.iter().map(|a| a.sample(rng)).collect())
    }

    pub(crate) fn sample_axis<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        self.axes[i].sample(rng)
    }

    /// The descriptor with the listed axes removed, order preserved.
    pub fn without_axes(&self, drop: &[usize]) -> Result<SpaceDescriptor> {
        let axes = (0..self.dim())
            .filter(|i| !drop.contains(i))
            .map(|i| self.axes[i])
            .collect();
        let weights = (0..self.dim())
            .filter(|i| !drop.contains(i))
            .map(|i| self.weights[i])
            .collect();
        SpaceDescriptor::with_weights(axes, weights)
    }
}

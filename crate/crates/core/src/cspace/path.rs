use serde::{Deserialize, Serialize};

use super::{Configuration, SpaceDescriptor};
use crate::error::{Error, Result};

/// Waypoints closer than this are treated as the same configuration.
pub(crate) const COINCIDENT: f64 = 1e-12;

/// A polyline in the space of one bundle level.
///
/// Interior waypoints that coincide with their predecessor are removed on
/// construction. The first and last waypoints are always kept, so a path
/// whose endpoints coincide is the degenerate two-point path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    level: usize,
    waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(level: usize, waypoints: Vec<Configuration>, space: &SpaceDescriptor) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "a path needs at least two waypoints, got {}",
                waypoints.len()
            )));
        }
        for w in &waypoints {
            if w.len() != space.dim() {
                return Err(Error::DimensionMismatch { expected: space.dim(), found: w.len() });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPath(format!("non-finite waypoint {w}")));
            }
        }
        Ok(Self::dedup(level, waypoints, space))
    }

    pub(crate) fn dedup(level: usize, waypoints: Vec<Configuration>, space: &SpaceDescriptor) -> Self {
        let n = waypoints.len();
        let mut iter = waypoints.into_iter();
        let mut kept: Vec<Configuration> = Vec::with_capacity(n);
        kept.push(iter.next().expect("non-empty"));
        let last = iter.next_back().expect("at least two");
        for w in iter {
            if space.dist(kept.last().unwrap(), &w) > COINCIDENT {
                kept.push(w);
            }
        }
        while kept.len() > 1 && space.dist(kept.last().unwrap(), &last) <= COINCIDENT {
            kept.pop();
        }
        kept.push(last);
        Path { level, waypoints: kept }
    }

    /// Trusts the caller that `waypoints` are already deduplicated.
    pub(crate) fn from_raw(level: usize, waypoints: Vec<Configuration>) -> Self {
        Path { level, waypoints }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &Configuration {
        self.waypoints.last().unwrap()
    }

    /// Sum of metric distances between consecutive waypoints.
    pub fn cost(&self, space: &SpaceDescriptor) -> f64 {
        self.waypoints.windows(2).map(|w| space.dist(&w[0], &w[1])).sum()
    }

    /// Point at arc-length fraction `t`; `t = 0` and `t = 1` return the
    /// endpoints exactly.
    pub fn eval(&self, space: &SpaceDescriptor, t: f64) -> Result<Configuration> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("path parameter {t} not in [0, 1]")));
        }
        let arc = ArcLength::new(self, space);
        let mut out = vec![0.0; space.dim()];
        arc.eval_into(space, t, &mut out);
        Ok(Configuration::new(out))
    }

    /// `samples` points at equal arc-length spacing, endpoints included.
    pub fn densify(&self, space: &SpaceDescriptor, samples: usize) -> Vec<Configuration> {
        let samples = samples.max(2);
        let arc = ArcLength::new(self, space);
        (0..samples)
            .map(|i| {
                let mut out = vec![0.0; space.dim()];
                arc.eval_into(space, i as f64 / (samples - 1) as f64, &mut out);
                Configuration::new(out)
            })
            .collect()
    }

    /// Joins `self` and `other`, which must share the junction waypoint.
    pub fn concat(&self, other: &Path, space: &SpaceDescriptor) -> Result<Path> {
        if self.level != other.level {
            return Err(Error::InvalidPath("paths live on different levels".into()));
        }
        if space.dist(self.goal(), other.start()) > COINCIDENT {
            return Err(Error::EndpointMismatch);
        }
        let mut w = self.waypoints.clone();
        w.extend(other.waypoints[1..].iter().cloned());
        Ok(Self::dedup(self.level, w, space))
    }

    pub fn reversed(&self) -> Path {
        let mut w = self.waypoints.clone();
        w.reverse();
        Path { level: self.level, waypoints: w }
    }
}

/// Cumulative arc length of a path, for repeated evaluation.
pub(crate) struct ArcLength<'a> {
    waypoints: &'a [Configuration],
    cumulative: Vec<f64>,
}

impl<'a> ArcLength<'a> {
    pub(crate) fn new(path: &'a Path, space: &SpaceDescriptor) -> Self {
        let mut cumulative = Vec::with_capacity(path.waypoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in path.waypoints.windows(2) {
            acc += space.dist(&w[0], &w[1]);
            cumulative.push(acc);
        }
        ArcLength { waypoints: &path.waypoints, cumulative }
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub(crate) fn eval_into(&self, space: &SpaceDescriptor, t: f64, out: &mut [f64]) {
        let n = self.waypoints.len();
        if t <= 0.0 || self.total() <= 0.0 {
            out.copy_from_slice(&self.waypoints[0]);
            return;
        }
        if t >= 1.0 {
            out.copy_from_slice(&self.waypoints[n - 1]);
            return;
        }
        let s = t * self.total();
        let seg = self.cumulative.partition_point(|&c| c <= s).clamp(1, n - 1);
        let (c0, c1) = (self.cumulative[seg - 1], self.cumulative[seg]);
        let local = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
        space.interpolate_into(&self.waypoints[seg - 1], &self.waypoints[seg], local, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> SpaceDescriptor {
        SpaceDescriptor::euclidean(2, -10.0, 10.0).unwrap()
    }

    fn path(points: &[[f64; 2]]) -> Path {
        let w = points.iter().map(|p| Configuration::new(p.to_vec())).collect();
        Path::new(0, w, &plane()).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(path(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).cost(&plane()), 2.0);
        assert_eq!(path(&[[0.5, 0.5], [0.5, 0.5]]).cost(&plane()), 0.0);
    }

    #[test]
    fn consecutive_duplicates_removed() {
        let p = path(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(p.waypoints().len(), 2);
        let p = path(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(p.waypoints().len(), 2);
    }

    #[test]
    fn eval_endpoints_exact_and_arc_length() {
        let s = plane();
        let p = path(&[[0.0, 0.0], [1.0, 0.0], [1.0, 3.0]]);
        assert_eq!(p.eval(&s, 0.0).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(p.eval(&s, 1.0).unwrap().coords(), &[1.0, 3.0]);
        let q = p.eval(&s, 0.5).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-12 && (q[1] - 1.0).abs() < 1e-12);
        assert!(p.eval(&s, 1.5).is_err());
    }

    #[test]
    fn concat_adds_costs() {
        let s = plane();
        let a = path(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = path(&[[1.0, 0.0], [1.0, 2.0], [3.0, 2.0]]);
        let c = a.concat(&b, &s).unwrap();
        assert!((c.cost(&s) - a.cost(&s) - b.cost(&s)).abs() < 1e-12);
        assert_eq!(c.waypoints().len(), 4);
        assert_eq!(b.concat(&a, &s), Err(Error::EndpointMismatch));
    }

    #[test]
    fn too_short_or_wrong_dimension() {
        let s = plane();
        assert!(Path::new(0, vec![Configuration::new(vec![0.0, 0.0])], &s).is_err());
        let w = vec![Configuration::new(vec![0.0]), Configuration::new(vec![1.0])];
        assert!(Path::new(0, w, &s).is_err());
    }
}

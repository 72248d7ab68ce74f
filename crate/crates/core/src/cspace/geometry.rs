//! Closed-set intersection tests for the primitives robots and obstacles are
//! built from. Touching shapes intersect.

use serde::{Deserialize, Serialize};

/// A convex 2D workspace shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape2 {
    Circle { center: [f64; 2], radius: f64 },
    /// Convex polygon, vertices counter-clockwise.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape2 {
    pub fn intersects(&self, other: &Shape2) -> bool {
        use Shape2::*;
        match (self, other) {
            (Circle { center: a, radius: ra }, Circle { center: b, radius: rb }) => {
                dist_sq2(*a, *b) <= (ra + rb) * (ra + rb)
            }
            (Polygon { vertices }, Circle { center, radius })
            | (Circle { center, radius }, Polygon { vertices }) => {
                polygon_circle(vertices, *center, *radius)
            }
            (Polygon { vertices: a }, Polygon { vertices: b }) => polygon_polygon(a, b),
        }
    }

    /// Oriented rectangle centered at `center`, `length` along `heading`.
    pub fn oriented_rect(center: [f64; 2], heading: f64, length: f64, width: f64) -> Shape2 {
        let (s, c) = heading.sin_cos();
        let (hl, hw) = (0.5 * length, 0.5 * width);
        let corner = |u: f64, v: f64| [center[0] + c * u - s * v, center[1] + s * u + c * v];
        Shape2::Polygon {
            vertices: vec![corner(-hl, -hw), corner(hl, -hw), corner(hl, hw), corner(-hl, hw)],
        }
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape2::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape2::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

fn dist_sq2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn point_segment_dist_sq(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist_sq2(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

pub(crate) fn polygon_contains(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = vertices.len();
    (0..n).all(|i| cross(vertices[i], vertices[(i + 1) % n], p) >= 0.0)
}

pub(crate) fn polygon_circle(vertices: &[[f64; 2]], center: [f64; 2], radius: f64) -> bool {
    if polygon_contains(vertices, center) {
        return true;
    }
    let n = vertices.len();
    let r_sq = radius * radius;
    (0..n).any(|i| point_segment_dist_sq(center, vertices[i], vertices[(i + 1) % n]) <= r_sq)
}

fn project(vertices: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vertices {
        let d = v[0] * axis[0] + v[1] * axis[1];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

fn separated_along_edges(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    let n = a.len();
    (0..n).any(|i| {
        let p = a[i];
        let q = a[(i + 1) % n];
        let axis = [q[1] - p[1], p[0] - q[0]];
        let (amin, amax) = project(a, axis);
        let (bmin, bmax) = project(b, axis);
        amax < bmin || bmax < amin
    })
}

pub(crate) fn polygon_polygon(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    !(separated_along_edges(a, b) || separated_along_edges(b, a))
}

/// Signed area; positive for counter-clockwise vertex order.
pub(crate) fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub(crate) fn is_convex_ccw(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    n >= 3
        && signed_area(vertices) > 0.0
        && (0..n).all(|i| cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]) >= 0.0)
}

pub(crate) fn ball_box(center: [f64; 3], radius: f64, min: [f64; 3], max: [f64; 3]) -> bool {
    let mut d_sq = 0.0;
    for k in 0..3 {
        let c = center[k].clamp(min[k], max[k]);
        d_sq += (center[k] - c) * (center[k] - c);
    }
    d_sq <= radius * radius
}

pub(crate) fn ball_ball(a: [f64; 3], ra: f64, b: [f64; 3], rb: f64) -> bool {
    let d_sq: f64 = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
    d_sq <= (ra + rb) * (ra + rb)
}

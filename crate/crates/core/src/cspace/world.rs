use serde::{Deserialize, Serialize};

use super::geometry::{self, Shape2};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    /// Convex polygon; vertices may be given in either orientation.
    Polygon { vertices: Vec<[f64; 2]> },
    Circle { center: [f64; 2], radius: f64 },
    /// Axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
}

impl Obstacle {
    pub fn workspace_dim(&self) -> usize {
        match self {
            Obstacle::Polygon { .. } | Obstacle::Circle { .. } => 2,
            Obstacle::Box { .. } | Obstacle::Sphere { .. } => 3,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidWorld(msg));
        match self {
            Obstacle::Polygon { vertices } => {
                let mut v = vertices.clone();
                if geometry::signed_area(&v) < 0.0 {
                    v.reverse();
                }
                if !geometry::is_convex_ccw(&v) {
                    return bad(format!("polygon {vertices:?} is not convex with positive area"));
                }
            }
            Obstacle::Circle { radius, .. } | Obstacle::Sphere { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad(format!("obstacle radius must be positive, got {radius}"));
                }
            }
            Obstacle::Box { min, max } => {
                if (0..3).any(|k| !(min[k] < max[k])) {
                    return bad(format!("box min {min:?} must be below max {max:?}"));
                }
            }
        }
        Ok(())
    }

    /// Top-down outline (3D obstacles are projected onto the x-y plane).
    pub fn outline(&self) -> Shape2 {
        match self {
            Obstacle::Polygon { vertices } => {
                let mut v = vertices.clone();
                if geometry::signed_area(&v) < 0.0 {
                    v.reverse();
                }
                Shape2::Polygon { vertices: v }
            }
            Obstacle::Circle { center, radius } => Shape2::Circle { center: *center, radius: *radius },
            Obstacle::Box { min, max } => Shape2::Polygon {
                vertices: vec![[min[0], min[1]], [max[0], min[1]], [max[0], max[1]], [min[0], max[1]]],
            },
            Obstacle::Sphere { center, radius } => Shape2::Circle {
                center: [center[0], center[1]],
                radius: *radius,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub length: f64,
    pub width: f64,
}

/// Robot geometry together with its placement rule: how a configuration
/// positions the body in the workspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Robot {
    /// Position-only robot in 2D or 3D; coordinates are the position.
    Point,
    /// Disk at `(x, y)`.
    Disk { radius: f64 },
    /// Rectangle at `(x, y, heading)`, `length` along the heading.
    Rectangle { length: f64, width: f64 },
    /// Planar serial chain; coordinate `i` is the relative angle of joint `i`.
    Arm { base: [f64; 2], links: Vec<Link> },
    /// Ball at `(x, y, z)`.
    Ball { radius: f64 },
}

impl Robot {
    /// Number of configuration coordinates the placement rule consumes, or
    /// `None` when it adapts to the space (point robots).
    pub fn config_dim(&self) -> Option<usize> {
        match self {
            Robot::Point => None,
            Robot::Disk { .. } => Some(2),
            Robot::Rectangle { .. } => Some(3),
            Robot::Arm { links, .. } => Some(links.len()),
            Robot::Ball { .. } => Some(3),
        }
    }

    fn workspace_dim(&self) -> Option<usize> {
        match self {
            Robot::Point => None,
            Robot::Disk { .. } | Robot::Rectangle { .. } | Robot::Arm { .. } => Some(2),
            Robot::Ball { .. } => Some(3),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidWorld(format!("robot {name} must be positive, got {v}")))
            }
        };
        match self {
            Robot::Point => Ok(()),
            Robot::Disk { radius } | Robot::Ball { radius } => positive("radius", *radius),
            Robot::Rectangle { length, width } => {
                positive("length", *length)?;
                positive("width", *width)
            }
            Robot::Arm { links, .. } => {
                if links.is_empty() {
                    return Err(Error::InvalidWorld("arm needs at least one link".into()));
                }
                links.iter().try_for_each(|l| {
                    positive("link length", l.length)?;
                    positive("link width", l.width)
                })
            }
        }
    }

    /// Rough radius of the body, used for drawing and resolution heuristics.
    pub fn reach(&self) -> f64 {
        match self {
            Robot::Point => 0.0,
            Robot::Disk { radius } | Robot::Ball { radius } => *radius,
            Robot::Rectangle { length, width } => 0.5 * length.hypot(*width),
            Robot::Arm { links, .. } => links.iter().map(|l| l.length).sum(),
        }
    }
}

enum Body {
    Circle([f64; 2], f64),
    Quad([[f64; 2]; 4]),
}

fn quad(center: [f64; 2], heading: f64, length: f64, width: f64) -> [[f64; 2]; 4] {
    let (s, c) = heading.sin_cos();
    let (hl, hw) = (0.5 * length, 0.5 * width);
    let corner = |u: f64, v: f64| [center[0] + c * u - s * v, center[1] + s * u + c * v];
    [corner(-hl, -hw), corner(hl, -hw), corner(hl, hw), corner(-hl, hw)]
}

/// Obstacles plus the robot that moves among them.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    obstacles: Vec<Obstacle>,
    outlines: Vec<Shape2>,
    robot: Robot,
}

impl World {
    /// The same world with the robot grown by `margin` on every side. A point
    /// robot becomes a disk or ball in a `dim`-dimensional space.
    pub(crate) fn padded(&self, margin: f64, dim: usize) -> World {
        if margin <= 0.0 {
            return self.clone();
        }
        let robot = match &self.robot {
            Robot::Point if dim == 3 => Robot::Ball { radius: margin },
            Robot::Point => Robot::Disk { radius: margin },
            Robot::Disk { radius } => Robot::Disk { radius: radius + margin },
            Robot::Ball { radius } => Robot::Ball { radius: radius + margin },
            Robot::Rectangle { length, width } => {
                Robot::Rectangle { length: length + 2.0 * margin, width: width + 2.0 * margin }
            }
            Robot::Arm { base, links } => Robot::Arm {
                base: *base,
                links: links
                    .iter()
                    .map(|l| Link { length: l.length, width: l.width + 2.0 * margin })
                    .collect(),
            },
        };
        World { obstacles: self.obstacles.clone(), outlines: self.outlines.clone(), robot }
    }

    pub fn new(obstacles: Vec<Obstacle>, robot: Robot) -> Result<Self> {
        robot.validate()?;
        for o in &obstacles {
            o.validate()?;
        }
        if let Some(first) = obstacles.first() {
            let dim = first.workspace_dim();
            if obstacles.iter().any(|o| o.workspace_dim() != dim) {
                return Err(Error::InvalidWorld("obstacles mix 2D and 3D primitives".into()));
            }
            if let Some(rdim) = robot.workspace_dim() {
                if rdim != dim {
                    return Err(Error::InvalidWorld(format!(
                        "{rdim}D robot among {dim}D obstacles"
                    )));
                }
            }
        }
        let outlines = obstacles.iter().map(Obstacle::outline).collect();
        Ok(World { obstacles, outlines, robot })
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    /// Workspace dimension implied by the obstacles or, failing that, the robot.
    pub fn workspace_dim(&self) -> Option<usize> {
        self.obstacles
            .first()
            .map(Obstacle::workspace_dim)
            .or_else(|| self.robot.workspace_dim())
    }

    fn body_hits(&self, body: &Body) -> bool {
        self.outlines.iter().any(|o| match (body, o) {
            (Body::Circle(c, r), shape) => {
                Shape2::Circle { center: *c, radius: *r }.intersects(shape)
            }
            (Body::Quad(q), Shape2::Circle { center, radius }) => {
                geometry::polygon_circle(q, *center, *radius)
            }
            (Body::Quad(q), Shape2::Polygon { vertices }) => geometry::polygon_polygon(q, vertices),
        })
    }

    fn ball_hits(&self, c: [f64; 3], r: f64) -> bool {
        self.obstacles.iter().any(|o| match o {
            Obstacle::Box { min, max } => geometry::ball_box(c, r, *min, *max),
            Obstacle::Sphere { center, radius } => geometry::ball_ball(c, r, *center, *radius),
            _ => false,
        })
    }

    /// True when the robot placed at `x` touches any obstacle. `x` must have
    /// the dimension the placement rule expects; bounds are not checked here.
    pub(crate) fn collides(&self, x: &[f64]) -> bool {
        match &self.robot {
            Robot::Point => {
                if x.len() == 3 {
                    self.ball_hits([x[0], x[1], x[2]], 0.0)
                } else {
                    self.body_hits(&Body::Circle([x[0], x[1]], 0.0))
                }
            }
            Robot::Disk { radius } => self.body_hits(&Body::Circle([x[0], x[1]], *radius)),
            Robot::Rectangle { length, width } => {
                self.body_hits(&Body::Quad(quad([x[0], x[1]], x[2], *length, *width)))
            }
            Robot::Arm { base, links } => {
                let mut joint = *base;
                let mut heading = 0.0;
                for (link, angle) in links.iter().zip(x) {
                    heading += angle;
                    let (s, c) = heading.sin_cos();
                    let tip = [joint[0] + c * link.length, joint[1] + s * link.length];
                    let mid = [0.5 * (joint[0] + tip[0]), 0.5 * (joint[1] + tip[1])];
                    if self.body_hits(&Body::Quad(quad(mid, heading, link.length, link.width))) {
                        return true;
                    }
                    joint = tip;
                }
                false
            }
            Robot::Ball { radius } => self.ball_hits([x[0], x[1], x[2]], *radius),
        }
    }

    /// Top-down workspace footprint of the robot at `x`.
    pub fn footprint(&self, x: &[f64]) -> Vec<Shape2> {
        match &self.robot {
            Robot::Point => vec![Shape2::Circle { center: [x[0], x[1]], radius: 0.0 }],
            Robot::Disk { radius } | Robot::Ball { radius } => {
                vec![Shape2::Circle { center: [x[0], x[1]], radius: *radius }]
            }
            Robot::Rectangle { length, width } => {
                vec![Shape2::oriented_rect([x[0], x[1]], x[2], *length, *width)]
            }
            Robot::Arm { base, links } => {
                let mut out = Vec::with_capacity(links.len());
                let mut joint = *base;
                let mut heading = 0.0;
                for (link, angle) in links.iter().zip(x) {
                    heading += angle;
                    let (s, c) = heading.sin_cos();
                    let tip = [joint[0] + c * link.length, joint[1] + s * link.length];
                    let mid = [0.5 * (joint[0] + tip[0]), 0.5 * (joint[1] + tip[1])];
                    out.push(Shape2::oriented_rect(mid, heading, link.length, link.width));
                    joint = tip;
                }
                out
            }
        }
    }

    /// A workspace point that traces the motion: the position for mobile
    /// robots, the end effector for arms.
    pub fn trace_point(&self, x: &[f64]) -> [f64; 2] {
        match &self.robot {
            Robot::Arm { base, links } => {
                let mut p = *base;
                let mut heading = 0.0;
                for (link, angle) in links.iter().zip(x) {
                    heading += angle;
                    p[0] += heading.cos() * link.length;
                    p[1] += heading.sin() * link.length;
                }
                p
            }
            _ => [x[0], x[1]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_circle_world(robot: Robot) -> World {
        World::new(vec![Obstacle::Circle { center: [0.0, 0.0], radius: 1.0 }], robot).unwrap()
    }

    #[test]
    fn disk_examples() {
        let w = unit_circle_world(Robot::Disk { radius: 0.1 });
        assert!(!w.collides(&[5.0, 5.0]));
        assert!(w.collides(&[0.0, 0.0]));
        let w = unit_circle_world(Robot::Disk { radius: 0.5 });
        assert!(w.collides(&[1.5, 0.0]), "tangency counts as contact");
    }

    #[test]
    fn rectangle_heading_matters() {
        let w = World::new(
            vec![Obstacle::Polygon {
                vertices: vec![[-1.0, 0.4], [1.0, 0.4], [1.0, 1.0], [-1.0, 1.0]],
            }],
            Robot::Rectangle { length: 1.0, width: 0.2 },
        )
        .unwrap();
        assert!(!w.collides(&[0.0, 0.0, 0.0]));
        assert!(w.collides(&[0.0, 0.0, FRAC_PI_2]));
    }

    #[test]
    fn arm_links_chain_angles() {
        let w = World::new(
            vec![Obstacle::Circle { center: [0.0, 1.5], radius: 0.2 }],
            Robot::Arm {
                base: [0.0, 0.0],
                links: vec![Link { length: 1.0, width: 0.1 }, Link { length: 1.0, width: 0.1 }],
            },
        )
        .unwrap();
        assert!(w.collides(&[FRAC_PI_2, 0.0]));
        assert!(!w.collides(&[FRAC_PI_2, FRAC_PI_2]));
        assert!(!w.collides(&[0.0, 0.0]));
        let tip = w.trace_point(&[FRAC_PI_2, -FRAC_PI_2]);
        assert!((tip[0] - 1.0).abs() < 1e-12 && (tip[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balls_in_3d() {
        let w = World::new(
            vec![Obstacle::Sphere { center: [0.0, 0.0, 0.0], radius: 1.0 }],
            Robot::Ball { radius: 0.25 },
        )
        .unwrap();
        assert!(w.collides(&[0.0, 0.0, 1.25]));
        assert!(!w.collides(&[0.0, 0.0, 1.3]));
    }

    #[test]
    fn rejects_bad_worlds() {
        assert!(World::new(vec![], Robot::Disk { radius: 0.0 }).is_err());
        assert!(World::new(
            vec![Obstacle::Sphere { center: [0.0; 3], radius: 1.0 }],
            Robot::Disk { radius: 0.1 }
        )
        .is_err());
        assert!(World::new(
            vec![Obstacle::Polygon { vertices: vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]] }],
            Robot::Point
        )
        .is_err());
    }

    #[test]
    fn clockwise_polygons_are_accepted() {
        let w = World::new(
            vec![Obstacle::Polygon {
                vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]],
            }],
            Robot::Point,
        )
        .unwrap();
        assert!(w.collides(&[0.5, 0.5]));
        assert!(!w.collides(&[1.5, 0.5]));
    }
}

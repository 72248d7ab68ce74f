//! Top-down drawing geometry for scenarios and tree paths, plus a small SVG
//! writer used by the command line and the browser demo.
//!
//! A path on level k is drawn with level k's own robot, so base-level paths
//! of the car show a disk and full-level paths show the rectangle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cspace::{Axis, Path, Robot, Shape2};
use crate::minima_tree::{MinimaTree, Problem};

/// Default samples per path.
pub const TRACE_SAMPLES: usize = 200;
/// Robot footprints drawn along a path.
pub const FOOTPRINT_SAMPLES: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Lower-left and upper-right corners of the drawing area.
    pub bounds: [[f64; 2]; 2],
    pub obstacles: Vec<Shape2>,
    pub start: Vec<Shape2>,
    pub goal: Vec<Shape2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGeometry {
    pub node: usize,
    pub level: usize,
    /// Set when the path lives below the full space; its footprints then
    /// show that level's simplified robot.
    pub quotient_level: bool,
    /// Level-space coordinates at equal arc-length spacing.
    pub waypoints: Vec<Vec<f64>>,
    /// Workspace trace point of each waypoint.
    pub trace: Vec<[f64; 2]>,
    pub footprints: Vec<Vec<Shape2>>,
}

fn grow(bounds: &mut [[f64; 2]; 2], (lo, hi): ([f64; 2], [f64; 2])) {
    for k in 0..2 {
        bounds[0][k] = bounds[0][k].min(lo[k]);
        bounds[1][k] = bounds[1][k].max(hi[k]);
    }
}

impl Scene {
    pub fn of(problem: &Problem) -> Self {
        let top = problem.chain().top();
        let k = problem.depth();
        let obstacles: Vec<Shape2> = top.world().obstacles().iter().map(|o| o.outline()).collect();
        let start = top.footprint(problem.start(k));
        let goal = top.footprint(problem.goal(k));
        let mut bounds = [[f64::INFINITY; 2], [f64::NEG_INFINITY; 2]];
        for s in obstacles.iter().chain(&start).chain(&goal) {
            grow(&mut bounds, s.bounding_box());
        }
        // Arms sweep their reach; mobile robots the first two axes.
        let base = problem.chain().level(0);
        if let Robot::Arm { base: b, .. } = top.world().robot() {
            let r = top.world().robot().reach();
            grow(&mut bounds, ([b[0] - r, b[1] - r], [b[0] + r, b[1] + r]));
        } else if let [Axis::Euclidean { lower: x0, upper: x1 }, Axis::Euclidean { lower: y0, upper: y1 }, ..] =
            base.space().axes()
        {
            grow(&mut bounds, ([*x0, *y0], [*x1, *y1]));
        }
        if !bounds[0][0].is_finite() {
            bounds = [[-1.0, -1.0], [1.0, 1.0]];
        }
        Scene { bounds, obstacles, start, goal }
    }
}

impl PathGeometry {
    pub fn of(problem: &Problem, node: usize, path: &Path) -> Self {
        Self::sampled(problem, node, path, TRACE_SAMPLES)
    }

    /// Like [`PathGeometry::of`] with `samples` waypoints (at least 2).
    pub fn sampled(problem: &Problem, node: usize, path: &Path, samples: usize) -> Self {
        let ps = problem.chain().level(path.level());
        let world = ps.world();
        let waypoints: Vec<Vec<f64>> =
            path.densify(ps.space(), samples.max(2)).into_iter().map(|c| c.into_inner()).collect();
        let trace = waypoints.iter().map(|x| world.trace_point(x)).collect();
        let footprints =
            path.densify(ps.space(), FOOTPRINT_SAMPLES).iter().map(|x| ps.footprint(x)).collect();
        PathGeometry {
            node,
            level: path.level(),
            quotient_level: path.level() < problem.depth(),
            waypoints,
            trace,
            footprints,
        }
    }

    /// Geometry for every node of `tree` that has a path.
    pub fn all(problem: &Problem, tree: &MinimaTree) -> Vec<PathGeometry> {
        tree.nodes()
            .iter()
            .filter_map(|n| n.path.as_ref().map(|p| PathGeometry::of(problem, n.id, p)))
            .collect()
    }
}

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// SVG size in pixels along the longer side.
const SVG_SIZE: f64 = 640.0;

fn shape_svg(out: &mut String, s: &Shape2, to_px: &dyn Fn([f64; 2]) -> [f64; 2], scale: f64, style: &str) {
    match s {
        Shape2::Circle { center, radius } => {
            let c = to_px(*center);
            let r = (radius * scale).max(1.5);
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" {style}/>"#, c[0], c[1]);
        }
        Shape2::Polygon { vertices } => {
            let pts: Vec<String> = vertices
                .iter()
                .map(|v| {
                    let p = to_px(*v);
                    format!("{:.2},{:.2}", p[0], p[1])
                })
                .collect();
            let _ = writeln!(out, r#"<polygon points="{}" {style}/>"#, pts.join(" "));
        }
    }
}

/// Renders the scene and `paths`. `highlight` draws that node's footprints
/// and thickens its trace.
pub fn to_svg(scene: &Scene, paths: &[PathGeometry], highlight: Option<usize>) -> String {
    let [lo, hi] = scene.bounds;
    let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let scale = SVG_SIZE / w.max(h);
    let to_px = move |p: [f64; 2]| [(p[0] - lo[0] + pad) * scale, (hi[1] + pad - p[1]) * scale];
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fafafa"/>"##);
    for o in &scene.obstacles {
        shape_svg(&mut out, o, &to_px, scale, r##"fill="#555" stroke="none""##);
    }
    for (i, p) in paths.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let lit = highlight == Some(p.node);
        if lit {
            let style = format!(r#"fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1""#);
            for f in p.footprints.iter().flatten() {
                shape_svg(&mut out, f, &to_px, scale, &style);
            }
        }
        let pts: Vec<String> = p
            .trace
            .iter()
            .map(|v| {
                let q = to_px(*v);
                format!("{:.2},{:.2}", q[0], q[1])
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-node="{}" data-level="{}" points="{}" fill="none" stroke="{color}" stroke-width="{}"/>"#,
            p.node,
            p.level,
            pts.join(" "),
            if lit { 3 } else { 1 }
        );
    }
    for s in &scene.start {
        shape_svg(&mut out, s, &to_px, scale, r##"fill="#2a2" fill-opacity="0.5" stroke="#060""##);
    }
    for s in &scene.goal {
        shape_svg(&mut out, s, &to_px, scale, r##"fill="#c33" fill-opacity="0.5" stroke="#600""##);
    }
    out.push_str("</svg>\n");
    out
}

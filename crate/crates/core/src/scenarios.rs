//! Scenario documents and the built-in fixtures.
//!
//! A scenario is a TOML document with a `version` field, a list of spaces
//! (coarsest first), the obstacles, the full robot, one `[[bundle]]` entry
//! per projection carrying the robot of the level below, the start and goal
//! on the full space, and default explorer parameters. Unknown fields are
//! rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundle::{AdmissibilityReport, BundleChain, Projection};
use crate::cspace::{Axis, Configuration, Obstacle, PlanningSpace, Robot, SpaceDescriptor, World};
use crate::error::{Error, Result};
use crate::minima_tree::{ExplorerParams, Problem, ScenarioStamp};

pub const SCENARIO_VERSION: u32 = 1;

/// Samples per level for the admissibility check run at load time.
pub const ADMISSIBILITY_SAMPLES: usize = 10_000;

pub const BUILTIN_NAMES: [&str; 5] =
    ["planar_car", "planar_manipulator_2dof", "ball_sphere_3d", "ball_lattice_3d", "empty_2d"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Collision-check resolution; defaults to a fraction of the shortest axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    /// Planning clearance; defaults to a quarter of the resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    pub projection: Projection,
    /// Robot realizing the constraint function of the level below.
    pub base_robot: Robot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub robot: Robot,
    #[serde(default)]
    pub world: Vec<Obstacle>,
    pub space: Vec<SpaceDoc>,
    #[serde(default)]
    pub bundle: Vec<BundleDoc>,
    pub problem: ProblemDoc,
    #[serde(default)]
    pub params: ExplorerParams,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    doc: ScenarioDoc,
    problem: Problem,
    warnings: Vec<String>,
    admissibility: AdmissibilityReport,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn load(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| scenario_err(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Self> {
        if doc.version != SCENARIO_VERSION {
            return Err(scenario_err(format!(
                "version: unsupported scenario version {} (expected {SCENARIO_VERSION})",
                doc.version
            )));
        }
        if doc.space.is_empty() {
            return Err(scenario_err("space: at least one level is required"));
        }
        if doc.bundle.len() + 1 != doc.space.len() {
            return Err(scenario_err(format!(
                "bundle: {} spaces need {} bundle entries, found {}",
                doc.space.len(),
                doc.space.len() - 1,
                doc.bundle.len()
            )));
        }
        doc.params.validate().map_err(|e| scenario_err(format!("params: {e}")))?;
        let top = doc.space.len() - 1;
        let mut levels = Vec::with_capacity(doc.space.len());
        for (k, s) in doc.space.iter().enumerate() {
            let field = |e: Error| scenario_err(format!("space[{k}]: {e}"));
            let descriptor = match &s.weights {
                Some(w) => SpaceDescriptor::with_weights(s.axes.clone(), w.clone()),
                None => SpaceDescriptor::new(s.axes.clone()),
            }
            .map_err(field)?;
            let robot = if k == top { doc.robot.clone() } else { doc.bundle[k].base_robot.clone() };
            let world = World::new(doc.world.clone(), robot).map_err(field)?;
            let mut ps = PlanningSpace::new(descriptor, world).map_err(field)?;
            if let Some(h) = s.resolution {
                ps = ps.with_resolution(h).map_err(field)?;
            }
            if let Some(m) = s.clearance {
                ps = ps.with_clearance(m).map_err(field)?;
            }
            levels.push(ps);
        }
        let projections = doc.bundle.iter().map(|b| b.projection.clone()).collect();
        let chain =
            BundleChain::new(levels, projections).map_err(|e| scenario_err(format!("bundle: {e}")))?;
        let dim = chain.top().space().dim();
        for (which, x) in [("start", &doc.problem.start), ("goal", &doc.problem.goal)] {
            if x.len() != dim {
                return Err(scenario_err(format!(
                    "problem.{which}: expected {dim} coordinates, found {}",
                    x.len()
                )));
            }
        }
        let problem = Problem::new(
            chain,
            Configuration::new(doc.problem.start.clone()),
            Configuration::new(doc.problem.goal.clone()),
        )?;
        let admissibility = problem.chain().check_admissibility(ADMISSIBILITY_SAMPLES, 0);
        let mut warnings = Vec::new();
        if admissibility.violations > 0 {
            let w = format!(
                "bundle chain is not admissible: {} of {} samples per level are free over a colliding base",
                admissibility.violations, admissibility.samples_per_level
            );
            log::warn!("{}: {w}", doc.name);
            warnings.push(w);
        }
        Ok(Scenario { doc, problem, warnings, admissibility })
    }

    /// One of [`BUILTIN_NAMES`].
    pub fn builtin(name: &str) -> Result<Self> {
        Self::load(builtin_text(name)?)
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn params(&self) -> &ExplorerParams {
        &self.doc.params
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn admissibility(&self) -> &AdmissibilityReport {
        &self.admissibility
    }

    /// Canonical document text; loading it yields an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.doc).expect("scenario documents serialize")
    }

    pub fn stamp(&self) -> ScenarioStamp {
        let hash = Sha256::digest(self.to_toml().as_bytes());
        ScenarioStamp { name: self.doc.name.clone(), hash: hex::encode(hash) }
    }
}

/// Raw text of a built-in fixture.
pub fn builtin_text(name: &str) -> Result<&'static str> {
    Ok(match name {
        "planar_car" => include_str!("../scenarios/planar_car.toml"),
        "planar_manipulator_2dof" => include_str!("../scenarios/planar_manipulator_2dof.toml"),
        "ball_sphere_3d" => include_str!("../scenarios/ball_sphere_3d.toml"),
        "ball_lattice_3d" => include_str!("../scenarios/ball_lattice_3d.toml"),
        "empty_2d" => include_str!("../scenarios/empty_2d.toml"),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    })
}

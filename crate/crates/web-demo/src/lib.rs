//! Browser demo for the minima-tree explorer.
//!
//! [`DemoCore`] holds a session and maps key presses to commands; it is plain
//! Rust and tested natively. [`Demo`] is the thin wasm-bindgen wrapper the
//! page in `www/` talks to. The page offers three operations: expand the
//! selected node (`w`), move through the tree (arrow keys or a click in the
//! tree panel) and download the selected path (`u`).

use std::sync::Arc;

use minima_explorer::explorer::{Command, Response, Session, SessionView, EXPORT_SAMPLES};
use minima_explorer::roadmap::Ptc;
use minima_explorer::scenarios::{Scenario, BUILTIN_NAMES};
use minima_explorer::scene::{to_svg, PathGeometry, Scene};
use wasm_bindgen::prelude::*;

pub struct DemoCore {
    session: Session,
    scene: Scene,
}

/// The command bound to a key, if any.
pub fn key_command(key: &str) -> Option<Command> {
    Some(match key {
        "ArrowLeft" => Command::Left,
        "ArrowRight" => Command::Right,
        "ArrowUp" => Command::Up,
        "ArrowDown" => Command::Down,
        "w" => Command::Expand,
        "u" => Command::ExportSelected,
        _ => return None,
    })
}

impl DemoCore {
    /// Iteration budgets only: the browser has no clock for time budgets.
    pub fn new(scenario: &str, seed: u64, iterations: u64) -> Result<Self, String> {
        let sc = Scenario::builtin(scenario).map_err(|e| e.to_string())?;
        let mut params = sc.params().clone();
        params.seed = seed;
        params.budget = Ptc::Iterations(iterations);
        let scene = Scene::of(sc.problem());
        let session = Session::new(Arc::new(sc), params).map_err(|e| e.to_string())?;
        Ok(DemoCore { session, scene })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn view(&self) -> SessionView {
        self.session.view()
    }

    pub fn key(&mut self, key: &str) -> Result<Option<Response>, String> {
        match key_command(key) {
            Some(c) => self.session.command(c).map(Some).map_err(|e| e.to_string()),
            None => Ok(None),
        }
    }

    pub fn select(&mut self, id: usize) -> Result<Response, String> {
        self.session.command(Command::Select { id }).map_err(|e| e.to_string())
    }

    /// All paths, the selection highlighted.
    pub fn svg(&self) -> String {
        let problem = self.session.scenario().problem();
        let paths = PathGeometry::all(problem, self.session.tree());
        to_svg(&self.scene, &paths, Some(self.session.selection()))
    }

    /// The selected path as CSV, one waypoint per row, or `None` at the root.
    pub fn export_csv(&self) -> Option<String> {
        let e = self.session.export(self.session.selection(), EXPORT_SAMPLES)?;
        let rows: Vec<String> = e
            .waypoints
            .iter()
            .map(|w| w.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(","))
            .collect();
        Some(rows.join("\n") + "\n")
    }
}

#[wasm_bindgen]
pub struct Demo(DemoCore);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, seed: u64, iterations: u64) -> Result<Demo, JsError> {
        DemoCore::new(scenario, seed, iterations).map(Demo).map_err(|e| JsError::new(&e))
    }

    /// Builtin scenario names.
    pub fn scenarios() -> Vec<String> {
        BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
    }

    /// Handles a key; returns the command response as JSON, or an empty
    /// string for unbound keys.
    pub fn key(&mut self, key: &str) -> Result<String, JsError> {
        let r = self.0.key(key).map_err(|e| JsError::new(&e))?;
        Ok(r.map(|r| serde_json::to_string(&r).expect("serializable")).unwrap_or_default())
    }

    pub fn select(&mut self, id: usize) -> Result<String, JsError> {
        let r = self.0.select(id).map_err(|e| JsError::new(&e))?;
        Ok(serde_json::to_string(&r).expect("serializable"))
    }

    pub fn view(&self) -> String {
        serde_json::to_string(&self.0.view()).expect("serializable")
    }

    pub fn svg(&self) -> String {
        self.0.svg()
    }

    pub fn export_csv(&self) -> Option<String> {
        self.0.export_csv()
    }
}

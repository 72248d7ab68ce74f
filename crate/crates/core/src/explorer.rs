//! The interactive session: a tree, a selection and the commands that move
//! the selection or grow the tree under it.
//!
//! Every command is appended to the session's event log together with its
//! outcome. Replaying the commands of a log on a fresh session with the same
//! scenario and parameters rebuilds the same tree when the budget is an
//! iteration count.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cspace::Path;
use crate::error::{Error, Result};
use crate::minima_tree::{
    ExpansionJob, ExpansionResult, ExplorerParams, MinimaTree, NodeStatus, TreeDocument, ROOT,
};
use crate::scenarios::Scenario;

/// Waypoints in an exported path.
pub const EXPORT_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Select { id: usize },
    Left,
    Right,
    Up,
    Down,
    Expand,
    ExportSelected,
}

/// A node as the session view shows it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: usize,
    /// `-1` for the root.
    pub level: i64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub status: NodeStatus,
    pub cost: Option<f64>,
    /// Position among its siblings, cheapest first; 0 for the root.
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: i64,
    pub count: usize,
}

/// Everything a client needs to draw the tree panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub selection: usize,
    pub depth: usize,
    pub nodes: Vec<NodeSummary>,
    pub level_counts: Vec<LevelCount>,
}

impl SessionView {
    /// Depends on nothing but the tree and the selection.
    pub fn of(tree: &MinimaTree, selection: usize, depth: usize) -> Self {
        let nodes = tree
            .nodes()
            .iter()
            .map(|n| NodeSummary {
                id: n.id,
                level: n.level.map_or(-1, |k| k as i64),
                parent: n.parent,
                children: n.children.clone(),
                status: n.status,
                cost: n.cost,
                rank: n.parent.map_or(0, |p| {
                    tree.nodes()[p].children.iter().position(|&c| c == n.id).unwrap_or(0)
                }),
            })
            .collect();
        let level_counts =
            tree.level_counts().into_iter().map(|(level, count)| LevelCount { level, count }).collect();
        SessionView { selection, depth, nodes, level_counts }
    }
}

/// A path handed out by `export_selected`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedPath {
    pub node: usize,
    pub level: usize,
    /// Set when the path lives on a lower level than the full space.
    pub quotient_level: bool,
    pub waypoints: Vec<Vec<f64>>,
}

/// What a command did besides producing the new view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Selected { id: usize },
    /// An expansion was started and has not been committed yet.
    Pending { node: usize },
    /// The command had no effect, for the given reason.
    Unchanged { notice: String },
    Expanded { node: usize, new_children: Vec<usize> },
    ExpansionFailed { node: usize, error: String },
    Exported { node: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: usize,
    pub command: Command,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Response {
    pub view: SessionView,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export: Option<ExportedPath>,
}

/// One user's exploration of one scenario.
#[derive(Debug)]
pub struct Session {
    scenario: Arc<Scenario>,
    params: ExplorerParams,
    tree: MinimaTree,
    selection: usize,
    log: Vec<Event>,
    /// Node being expanded and the sequence number of its expand command.
    running: Option<(usize, usize)>,
}

impl Session {
    pub fn new(scenario: Arc<Scenario>, params: ExplorerParams) -> Result<Self> {
        params.validate()?;
        Ok(Session {
            scenario,
            params,
            tree: MinimaTree::new(),
            selection: ROOT,
            log: Vec::new(),
            running: None,
        })
    }

    /// A fresh session that re-runs every command of `events` in order.
    pub fn replay(scenario: Arc<Scenario>, params: ExplorerParams, events: &[Event]) -> Result<Self> {
        let mut s = Session::new(scenario, params)?;
        for e in events {
            // Rejected commands are part of the log and are rejected again.
            let _ = s.command(e.command.clone());
        }
        Ok(s)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn scenario_arc(&self) -> Arc<Scenario> {
        Arc::clone(&self.scenario)
    }

    pub fn params(&self) -> &ExplorerParams {
        &self.params
    }

    pub fn tree(&self) -> &MinimaTree {
        &self.tree
    }

    pub fn selection(&self) -> usize {
        self.selection
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    /// The node whose expansion is running, if any.
    pub fn busy(&self) -> Option<usize> {
        self.running.map(|(node, _)| node)
    }

    pub fn view(&self) -> SessionView {
        SessionView::of(&self.tree, self.selection, self.scenario.problem().depth())
    }

    pub fn document(&self) -> TreeDocument {
        self.tree.to_document(self.scenario.stamp(), &self.params)
    }

    fn record(&mut self, command: Command, outcome: Outcome) -> usize {
        let seq = self.log.len();
        self.log.push(Event { seq, command, outcome });
        seq
    }

    fn respond(&mut self, command: Command, outcome: Outcome, export: Option<ExportedPath>) -> Response {
        self.record(command, outcome.clone());
        Response { view: self.view(), outcome, export }
    }

    fn unchanged(&mut self, command: Command, notice: &str) -> Response {
        self.respond(command, Outcome::Unchanged { notice: notice.into() }, None)
    }

    fn select(&mut self, command: Command, id: usize) -> Response {
        self.selection = id;
        self.respond(command, Outcome::Selected { id }, None)
    }

    /// Runs one command to completion; `expand` blocks until the expansion
    /// is committed.
    pub fn command(&mut self, command: Command) -> Result<Response> {
        let node = self.tree.node(self.selection)?.clone();
        let siblings = |tree: &MinimaTree| -> Vec<usize> {
            node.parent.map_or_else(Vec::new, |p| tree.nodes()[p].children.clone())
        };
        match command {
            Command::Select { id } => {
                self.tree.node(id)?;
                Ok(self.select(command, id))
            }
            Command::Left | Command::Right => {
                let sib = siblings(&self.tree);
                let Some(i) = sib.iter().position(|&c| c == node.id) else {
                    return Ok(self.unchanged(command, "the root has no siblings"));
                };
                let j = if command == Command::Left { i.saturating_sub(1) } else { (i + 1).min(sib.len() - 1) };
                if i == j {
                    return Ok(self.unchanged(command, "no further sibling"));
                }
                Ok(self.select(command, sib[j]))
            }
            Command::Up => match node.parent {
                Some(p) => Ok(self.select(command, p)),
                None => Ok(self.unchanged(command, "the root has no parent")),
            },
            Command::Down => match node.children.first() {
                Some(&c) => Ok(self.select(command, c)),
                None => Ok(self.unchanged(command, "no children; expand first")),
            },
            Command::Expand => {
                let job = self.begin_expand()?;
                let result = job.run(self.scenario.problem(), &self.params, |_| {});
                self.finish_expand(result)
            }
            Command::ExportSelected => match self.export(self.selection, EXPORT_SAMPLES) {
                Some(export) => {
                    let outcome = Outcome::Exported { node: export.node };
                    Ok(self.respond(command, outcome, Some(export)))
                }
                None => Ok(self.unchanged(command, "the root has no path")),
            },
        }
    }

    /// Detaches an expansion of the selected node. The session stays busy
    /// until [`Session::finish_expand`] is called.
    pub fn begin_expand(&mut self) -> Result<ExpansionJob> {
        if let Some((node, _)) = self.running {
            return Err(Error::Busy(node));
        }
        let id = self.selection;
        match self.tree.begin_expansion(id, self.scenario.problem(), &self.params) {
            Ok(job) => {
                let seq = self.record(Command::Expand, Outcome::Pending { node: id });
                self.running = Some((id, seq));
                Ok(job)
            }
            Err(e) => {
                self.record(Command::Expand, Outcome::ExpansionFailed { node: id, error: e.to_string() });
                Err(e)
            }
        }
    }

    /// Commits (or records the failure of) the running expansion.
    pub fn finish_expand(&mut self, result: Result<ExpansionResult>) -> Result<Response> {
        let (node, seq) = self.running.take().ok_or(Error::NotBusy)?;
        let outcome = match result {
            Ok(r) => {
                let new_children =
                    self.tree.commit_expansion(r, &self.params, self.scenario.problem())?;
                Outcome::Expanded { node, new_children }
            }
            Err(e) => Outcome::ExpansionFailed { node, error: e.to_string() },
        };
        self.log[seq].outcome = outcome.clone();
        if let Outcome::ExpansionFailed { error, .. } = &outcome {
            log::warn!("expansion of node {node} failed: {error}");
        }
        Ok(Response { view: self.view(), outcome, export: None })
    }

    /// The path of `id` sampled at `samples` points of equal arc length, or
    /// `None` for the root.
    pub fn export(&self, id: usize, samples: usize) -> Option<ExportedPath> {
        let n = self.tree.node(id).ok()?;
        let (level, path) = (n.level?, n.path.as_ref()?);
        Some(ExportedPath {
            node: id,
            level,
            quotient_level: level < self.scenario.problem().depth(),
            waypoints: densify(path, self, level, samples),
        })
    }
}

fn densify(path: &Path, s: &Session, level: usize, samples: usize) -> Vec<Vec<f64>> {
    let space = s.scenario.problem().chain().level(level).space();
    path.densify(space, samples).into_iter().map(|c| c.into_inner()).collect()
}

//! Tree serialization: a JSON document listing every node in id order.
//!
//! Floats are written in shortest round-trip form, so parsing a document and
//! writing it again reproduces it byte for byte.

use serde::{Deserialize, Serialize};

use super::{ExplorerParams, MinimaNode, MinimaTree, NodeStatus, ROOT};
use crate::cspace::{Configuration, Path};
use crate::error::{Error, Result};

pub const TREE_FORMAT: &str = "minima-tree";
pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStamp {
    pub name: String,
    /// Hex SHA-256 of the canonical scenario text.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: usize,
    /// `-1` for the root.
    pub level: i64,
    pub parent: Option<usize>,
    pub status: NodeStatus,
    pub cost: Option<f64>,
    pub attempts: u32,
    pub children: Vec<usize>,
    pub waypoints: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub format: String,
    pub version: u32,
    pub scenario: ScenarioStamp,
    pub params: ExplorerParams,
    pub root: usize,
    pub nodes: Vec<NodeRecord>,
}

impl TreeDocument {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tree documents serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: TreeDocument =
            serde_json::from_str(text).map_err(|e| Error::TreeFormat(e.to_string()))?;
        if doc.format != TREE_FORMAT || doc.version != TREE_FORMAT_VERSION {
            return Err(Error::TreeFormat(format!(
                "unsupported document {} version {}",
                doc.format, doc.version
            )));
        }
        Ok(doc)
    }
}

impl MinimaTree {
    pub fn to_document(&self, scenario: ScenarioStamp, params: &ExplorerParams) -> TreeDocument {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                level: n.level.map_or(-1, |k| k as i64),
                parent: n.parent,
                status: n.status,
                cost: n.cost,
                attempts: n.attempts,
                children: n.children.clone(),
                waypoints: n
                    .path
                    .as_ref()
                    .map(|p| p.waypoints().iter().map(|w| w.coords().to_vec()).collect())
                    .unwrap_or_default(),
            })
            .collect();
        TreeDocument {
            format: TREE_FORMAT.into(),
            version: TREE_FORMAT_VERSION,
            scenario,
            params: params.clone(),
            root: ROOT,
            nodes,
        }
    }

    /// Rebuilds a tree from a document, checking its structure. Roadmaps are
    /// not part of the document, so later expansions start fresh ones.
    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let bad = |m: String| Err(Error::TreeFormat(m));
        if doc.root != ROOT || doc.nodes.is_empty() {
            return bad("the root must be node 0".into());
        }
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, r) in doc.nodes.iter().enumerate() {
            if r.id != i {
                return bad(format!("node {} listed at position {i}", r.id));
            }
            let is_root = i == ROOT;
            if is_root != (r.level == -1) || is_root != r.parent.is_none() {
                return bad(format!("node {i}: only the root may lack a level or parent"));
            }
            if r.level < -1 {
                return bad(format!("node {i}: level {}", r.level));
            }
            let path = if is_root {
                if !r.waypoints.is_empty() || r.cost.is_some() {
                    return bad("the root carries no path".into());
                }
                None
            } else {
                if r.waypoints.len() < 2 || r.cost.is_none() {
                    return bad(format!("node {i} needs a path and a cost"));
                }
                let w = r.waypoints.iter().map(|c| Configuration::new(c.clone())).collect();
                Some(Path::from_raw(r.level as usize, w))
            };
            nodes.push(MinimaNode {
                id: i,
                level: (!is_root).then_some(r.level as usize),
                path,
                parent: r.parent,
                children: r.children.clone(),
                status: r.status,
                cost: r.cost,
                attempts: r.attempts,
            });
        }
        for n in &nodes {
            for &c in &n.children {
                let Some(child) = nodes.get(c) else {
                    return bad(format!("node {} lists missing child {c}", n.id));
                };
                if child.parent != Some(n.id) || child.level != Some(n.child_level()) {
                    return bad(format!("node {c} does not belong under node {}", n.id));
                }
            }
            if let Some(p) = n.parent {
                if !nodes.get(p).is_some_and(|pn| pn.children.contains(&n.id)) {
                    return bad(format!("node {} is missing from its parent's children", n.id));
                }
            }
        }
        Ok(MinimaTree { nodes, roadmaps: Default::default() })
    }
}

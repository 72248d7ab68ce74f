//! Local-minima tree exploration for sampling-based motion planning.
//!
//! A problem is described as a chain of planning spaces linked by
//! projections. Expanding a node of the [`MinimaTree`] grows a sparse roadmap
//! on the next level near the node's path, enumerates candidate paths,
//! optimizes them and keeps those that are distinct local minima and project
//! back onto the node.

pub mod bundle;
pub mod cspace;
pub mod equivalence;
pub mod error;
pub mod explorer;
pub mod minima_tree;
pub mod optimize;
pub mod roadmap;
pub mod scenarios;
pub mod scene;

pub use error::{Error, Result};

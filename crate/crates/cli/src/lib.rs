//! Batch runs and the session service for the minima-tree explorer.

pub mod batch;
pub mod server;

use std::path::Path;

use minima_explorer::scenarios::Scenario;

/// Loads `builtin:NAME` or a scenario file. Errors carry the parser's
/// line and column.
pub fn load_scenario(spec: &str) -> anyhow::Result<Scenario> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(Scenario::builtin(name)?);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| anyhow::anyhow!("cannot read {spec}: {e}"))?;
    Scenario::load(&text).map_err(|e| anyhow::anyhow!("{spec}: {e}"))
}

/// Resolves a scenario name for the service: a builtin name, `builtin:NAME`,
/// or `NAME` / `NAME.toml` inside `dir`. Paths outside `dir` are refused.
pub fn resolve_scenario(name: &str, dir: Option<&Path>) -> anyhow::Result<Scenario> {
    let bare = name.strip_prefix("builtin:").unwrap_or(name);
    if minima_explorer::scenarios::BUILTIN_NAMES.contains(&bare) {
        return Ok(Scenario::builtin(bare)?);
    }
    let Some(dir) = dir else {
        anyhow::bail!("unknown scenario `{name}` and no scenario directory is configured");
    };
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        anyhow::bail!("scenario name `{name}` must be a plain file name");
    }
    let file = if name.ends_with(".toml") { dir.join(name) } else { dir.join(format!("{name}.toml")) };
    load_scenario(&file.to_string_lossy())
}

use std::fmt;
use std::path::PathBuf;

use clap::Args;
use minima_explorer::minima_tree::{expand_to_depth, Enumeration, MinimaTree, ROOT};
use minima_explorer::roadmap::Ptc;
use minima_explorer::scene::{to_svg, PathGeometry, Scene};

use crate::load_scenario;

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Scenario file, or `builtin:NAME`.
    #[arg(long)]
    pub scenario: String,
    /// Tree depth to expand; defaults to every level.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Children per node.
    #[arg(long)]
    pub n: Option<usize>,
    /// Roadmap budget per expansion, e.g. `20000it` or `2s`.
    #[arg(long)]
    pub budget: Option<Ptc>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_enumeration)]
    pub enumeration: Option<Enumeration>,
    /// Writes the tree document here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes one SVG per leaf path, plus `tree.svg` with every path, into
    /// this directory.
    #[arg(long)]
    pub emit_svg: Option<PathBuf>,
}

fn parse_enumeration(s: &str) -> Result<Enumeration, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("expected `penalized` or `depth_first`, got `{s}`"))
}

/// Why a batch run stopped; each maps to its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// The scenario or the flags are unusable.
    Input(anyhow::Error),
    /// The base level has no minimum within the budget.
    NoMinima,
    Other(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::NoMinima => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::NoMinima => write!(f, "no level-0 minimum found within the budget"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

/// Runs the batch job and returns the tree document text.
pub fn run(args: &BatchArgs) -> Result<String, Failure> {
    let scenario = load_scenario(&args.scenario).map_err(Failure::Input)?;
    for w in scenario.warnings() {
        log::warn!("{w}");
    }
    let mut params = scenario.params().clone();
    if let Some(n) = args.n {
        params.n = n;
    }
    if let Some(b) = args.budget {
        params.budget = b;
    }
    if let Some(s) = args.seed {
        params.seed = s;
    }
    if let Some(e) = args.enumeration {
        params.enumeration = e;
    }
    params.validate().map_err(|e| Failure::Input(e.into()))?;
    let problem = scenario.problem();
    let full = problem.depth() + 1;
    let depth = args.depth.unwrap_or(full);
    if depth > full {
        return Err(Failure::Input(anyhow::anyhow!("--depth must be at most {full}, got {depth}")));
    }

    let mut tree = MinimaTree::new();
    expand_to_depth(&mut tree, depth, problem, &params).map_err(|e| Failure::Other(e.into()))?;
    for (level, count) in tree.level_counts() {
        log::info!("level {level}: {count} node(s)");
    }
    let text = tree.to_document(scenario.stamp(), &params).to_text();
    let write = |path: &PathBuf, body: &str| {
        std::fs::write(path, body).map_err(|e| Failure::Other(anyhow::anyhow!("cannot write {}: {e}", path.display())))
    };
    if let Some(path) = &args.out {
        write(path, &text)?;
    }
    if let Some(dir) = &args.emit_svg {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Other(anyhow::anyhow!("cannot create {}: {e}", dir.display())))?;
        let scene = Scene::of(problem);
        let paths = PathGeometry::all(problem, &tree);
        write(&dir.join("tree.svg"), &to_svg(&scene, &paths, None))?;
        for n in tree.nodes().iter().filter(|n| n.id != ROOT && n.children.is_empty()) {
            let own: Vec<PathGeometry> = paths.iter().filter(|g| g.node == n.id).cloned().collect();
            write(&dir.join(format!("leaf-{}.svg", n.id)), &to_svg(&scene, &own, Some(n.id)))?;
        }
    }
    if depth > 0 && tree.node(ROOT).map(|r| r.children.is_empty()).unwrap_or(true) {
        return Err(Failure::NoMinima);
    }
    Ok(text)
}

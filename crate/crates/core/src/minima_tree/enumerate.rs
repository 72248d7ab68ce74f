//! Simple start-to-goal path enumeration on a sparse roadmap.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roadmap::Graph;

/// How candidate paths are drawn from the sparse graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enumeration {
    /// Depth-first search over simple paths, shortest edges first.
    DepthFirst,
    /// Repeated shortest-path search, inflating the edges of earlier paths.
    #[default]
    Penalized,
}

/// Vertex expansions after which depth-first enumeration gives up.
pub const DFS_EXPANSION_LIMIT: usize = 1_000_000;

/// Edge weight multiplier applied per earlier use in penalized enumeration.
pub const EDGE_PENALTY: f64 = 2.0;

fn check_anchors(g: &Graph, start: usize, goal: usize) -> Result<()> {
    if start >= g.len() {
        return Err(Error::MissingVertex("start"));
    }
    if goal >= g.len() {
        return Err(Error::MissingVertex("goal"));
    }
    Ok(())
}

/// Up to `m` simple paths by iterative depth-first search with backtracking.
/// Neighbours are expanded by ascending edge length, ties by vertex id.
pub fn enumerate_paths(g: &Graph, start: usize, goal: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    check_anchors(g, start, goal)?;
    let mut out = Vec::new();
    if m == 0 {
        return Ok(out);
    }
    if start == goal {
        out.push(vec![start]);
        return Ok(out);
    }
    let sorted = |v: usize| {
        let mut n = g.neighbors(v).to_vec();
        n.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        n
    };
    let mut on_path = vec![false; g.len()];
    let mut path = vec![start];
    let mut stack = vec![(sorted(start), 0usize)];
    on_path[start] = true;
    let mut expansions = 0;
    while let Some((nbrs, next)) = stack.last_mut() {
        if *next >= nbrs.len() {
            stack.pop();
            on_path[path.pop().unwrap()] = false;
            continue;
        }
        let (v, _) = nbrs[*next];
        *next += 1;
        if on_path[v] {
            continue;
        }
        if v == goal {
            let mut p = path.clone();
            p.push(goal);
            out.push(p);
            if out.len() >= m {
                break;
            }
            continue;
        }
        expansions += 1;
        if expansions > DFS_EXPANSION_LIMIT {
            log::warn!("depth-first enumeration stopped after {DFS_EXPANSION_LIMIT} expansions");
            break;
        }
        on_path[v] = true;
        path.push(v);
        stack.push((sorted(v), 0));
    }
    Ok(out)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

fn shortest_path(
    g: &Graph,
    start: usize,
    goal: usize,
    weight: impl Fn(usize, usize, f64) -> f64,
) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut prev = vec![usize::MAX; g.len()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Item(0.0, start));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if v == goal {
            break;
        }
        for &(w, l) in g.neighbors(v) {
            let nd = d + weight(v, w, l);
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = v;
                heap.push(Item(nd, w));
            }
        }
    }
    if !dist[goal].is_finite() {
        return None;
    }
    let mut p = vec![goal];
    while *p.last().unwrap() != start {
        p.push(prev[*p.last().unwrap()]);
    }
    p.reverse();
    Some(p)
}

/// Up to `m` distinct simple paths: each round takes a shortest path under
/// weights inflated by [`EDGE_PENALTY`] for every earlier use of an edge.
pub fn penalized_paths(g: &Graph, start: usize, goal: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    check_anchors(g, start, goal)?;
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut uses: HashMap<(usize, usize), i32> = HashMap::new();
    for _ in 0..4 * m {
        if out.len() >= m {
            break;
        }
        let Some(p) = shortest_path(g, start, goal, |a, b, l| {
            l * EDGE_PENALTY.powi(*uses.get(&(a.min(b), a.max(b))).unwrap_or(&0))
        }) else {
            break;
        };
        for e in p.windows(2) {
            *uses.entry((e[0].min(e[1]), e[0].max(e[1]))).or_insert(0) += 1;
        }
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Dispatches on `method`.
pub fn candidate_paths(
    g: &Graph,
    start: usize,
    goal: usize,
    m: usize,
    method: Enumeration,
) -> Result<Vec<Vec<usize>>> {
    match method {
        Enumeration::DepthFirst => enumerate_paths(g, start, goal, m),
        Enumeration::Penalized => penalized_paths(g, start, goal, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> Graph {
        let vertices: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        Graph::from_parts(1, &vertices, edges).unwrap()
    }

    #[test]
    fn single_edge() {
        let g = graph(2, &[(0, 1, 1.0)]);
        assert_eq!(enumerate_paths(&g, 0, 1, 7).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn four_cycle() {
        let g = graph(4, &[(0, 2, 1.0), (2, 1, 1.0), (1, 3, 1.0), (3, 0, 1.5)]);
        let paths = enumerate_paths(&g, 0, 1, 7).unwrap();
        assert_eq!(paths, vec![vec![0, 2, 1], vec![0, 3, 1]]);
    }

    #[test]
    fn complete_graph_on_five() {
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b, 1.0 + 0.1 * (a + b) as f64));
            }
        }
        let g = graph(5, &edges);
        let paths = enumerate_paths(&g, 0, 1, 16).unwrap();
        assert_eq!(paths.len(), 16);
        let distinct: HashSet<_> = paths.iter().collect();
        assert_eq!(distinct.len(), 16);
        for p in &paths {
            let unique: HashSet<_> = p.iter().collect();
            assert_eq!(unique.len(), p.len());
        }
        assert_eq!(enumerate_paths(&g, 0, 1, 100).unwrap().len(), 16);
    }

    #[test]
    fn missing_anchor_and_disconnected() {
        let g = graph(3, &[(0, 1, 1.0)]);
        assert_eq!(enumerate_paths(&g, 0, 5, 3), Err(Error::MissingVertex("goal")));
        assert!(enumerate_paths(&g, 0, 2, 3).unwrap().is_empty());
        assert!(penalized_paths(&g, 0, 2, 3).unwrap().is_empty());
    }

    #[test]
    fn penalized_finds_both_sides_of_a_cycle() {
        let g = graph(4, &[(0, 2, 1.0), (2, 1, 1.0), (1, 3, 1.5), (3, 0, 1.5)]);
        let paths = penalized_paths(&g, 0, 1, 4).unwrap();
        assert_eq!(paths, vec![vec![0, 2, 1], vec![0, 3, 1]]);
    }
}

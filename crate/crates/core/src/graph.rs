//! Constraint graphs.
//!
//! Nodes are indexed `0..m` inside the library. Files, CLI arguments, CSV
//! output and validation messages use 1-based ids `1..=m`.
//!
//! A usable constraint graph carries a self-loop at every node, has
//! bidirectional neighbourhoods and is irreducible. [`Graph::validate`]
//! reports every violation instead of failing, so malformed inputs can be
//! inspected. All generators add the self-loops even where the topology name
//! (clique, star) would not suggest them.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// Sorted, deduplicated successor lists.
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from raw successor lists without enforcing any
    /// structural assumption. Lists are sorted and deduplicated.
    pub fn from_neighbors(mut neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let m = neighbors.len();
        if m == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        for (i, list) in neighbors.iter_mut().enumerate() {
            if let Some(&bad) = list.iter().find(|&&j| j >= m) {
                return Err(Error::InvalidSize(format!(
                    "node {} lists successor {} outside 1..={m}",
                    i + 1,
                    bad + 1
                )));
            }
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    /// Builds a graph from an undirected, 0-based edge list. Self-loops are
    /// added at every node and every edge is inserted in both directions.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut sets: Vec<BTreeSet<usize>> = (0..m).map(|i| BTreeSet::from([i])).collect();
        for &(i, j) in edges {
            if i >= m || j >= m {
                return Err(Error::InvalidSize(format!(
                    "edge ({}, {}) outside 1..={m}",
                    i + 1,
                    j + 1
                )));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        Ok(Self {
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Path `1 - 2 - ... - m`.
    pub fn linear(m: usize) -> Result<Self> {
        check_min("linear", m, 2)?;
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Self::from_edges(m, &edges)
    }

    /// Star on `m` nodes with hub `center` (0-based).
    pub fn star(m: usize, center: usize) -> Result<Self> {
        check_min("star", m, 2)?;
        if center >= m {
            return Err(Error::InvalidSize(format!(
                "star centre {} outside 1..={m}",
                center + 1
            )));
        }
        let edges: Vec<_> = (0..m).filter(|&i| i != center).map(|i| (center, i)).collect();
        Self::from_edges(m, &edges)
    }

    pub fn complete(m: usize) -> Result<Self> {
        check_min("complete", m, 2)?;
        Ok(Self {
            neighbors: vec![(0..m).collect(); m],
        })
    }

    /// Two cliques of sizes `m1` and `m2` joined by one bridge edge between
    /// the first node of each clique. Clique 1 occupies nodes `0..m1`.
    pub fn two_cliques(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidSize(format!(
                "two_cliques needs non-empty cliques, got {m1} and {m2}"
            )));
        }
        let m = m1 + m2;
        let mut edges = Vec::new();
        for (lo, hi) in [(0, m1), (m1, m)] {
            for i in lo..hi {
                for j in i + 1..hi {
                    edges.push((i, j));
                }
            }
        }
        edges.push((0, m1));
        Self::from_edges(m, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Successors `N(i)` in increasing order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Dense 0/1 adjacency matrix, row `i` marking `N(i)`.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let m = self.node_count();
        self.neighbors
            .iter()
            .map(|list| {
                let mut row = vec![0u8; m];
                for &j in list {
                    row[j] = 1;
                }
                row
            })
            .collect()
    }

    /// Nodes reachable from `start` along directed edges.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    pub fn validate(&self) -> ValidationReport {
        let m = self.node_count();
        let mut violations = Vec::new();
        if m < 2 {
            violations.push(Violation::TooFewNodes(m));
        }
        for i in 0..m {
            if !self.has_edge(i, i) {
                violations.push(Violation::MissingSelfLoop(i));
            }
        }
        for i in 0..m {
            for &j in &self.neighbors[i] {
                if !self.has_edge(j, i) {
                    violations.push(Violation::Asymmetric { from: i, to: j });
                }
            }
        }
        for i in 0..m {
            let seen = self.reachable_from(i);
            let missing: Vec<usize> = (0..m).filter(|&j| !seen[j]).collect();
            if let Some(&first) = missing.first() {
                violations.push(Violation::Unreachable {
                    from: i,
                    first,
                    count: missing.len(),
                });
            }
        }
        ValidationReport { violations }
    }

    /// Edge list in the on-disk shape: each undirected non-loop edge once,
    /// 1-based.
    pub fn to_file(&self) -> GraphFile {
        let mut edges = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list.iter().filter(|&&j| j > i) {
                edges.push([i + 1, j + 1]);
            }
        }
        GraphFile {
            m: self.node_count(),
            edges,
            directed: false,
        }
    }
}

fn check_min(kind: &str, m: usize, min: usize) -> Result<()> {
    if m < min {
        return Err(Error::InvalidSize(format!("{kind} graph needs m >= {min}, got {m}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    TooFewNodes(usize),
    MissingSelfLoop(usize),
    Asymmetric { from: usize, to: usize },
    /// `count` nodes, the lowest being `first`, cannot be reached from `from`.
    Unreachable { from: usize, first: usize, count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::TooFewNodes(m) => write!(f, "graph has {m} node(s), need at least 2"),
            Violation::MissingSelfLoop(i) => write!(f, "no self-loop at {}", i + 1),
            Violation::Asymmetric { from, to } => {
                write!(f, "edge {} -> {} has no reverse edge", from + 1, to + 1)
            }
            Violation::Unreachable { from, first, count } => write!(
                f,
                "graph is not irreducible: {count} node(s) unreachable from {}, e.g. {}",
                from + 1,
                first + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// JSON graph description: `{"m": 4, "edges": [[1, 2], [2, 3]]}`.
///
/// Edges are undirected and 1-based; self-loops are implied. With
/// `"directed": true` the list is read as arcs, and every arc whose reverse
/// is missing is repaired and reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub m: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub directed: bool,
}

/// A loaded graph plus notes about what the loader had to repair.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub repairs: Vec<String>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<LoadedGraph> {
        let m = self.m;
        let mut edges = Vec::with_capacity(self.edges.len());
        for [i, j] in &self.edges {
            if *i == 0 || *j == 0 || *i > m || *j > m {
                return Err(Error::InvalidSize(format!("edge [{i}, {j}] outside 1..={m}")));
            }
            edges.push((i - 1, j - 1));
        }
        let mut repairs = Vec::new();
        if self.directed {
            let arcs: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
            for &(i, j) in &arcs {
                if i != j && !arcs.contains(&(j, i)) {
                    repairs.push(format!(
                        "added missing reverse edge {} -> {}",
                        j + 1,
                        i + 1
                    ));
                }
            }
        }
        let graph = Graph::from_edges(m, &edges)?;
        Ok(LoadedGraph { graph, repairs })
    }
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GraphFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    file.into_graph()
}

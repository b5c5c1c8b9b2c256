//! Undirected simple graphs: construction, generators, and metrics.
//!
//! Graphs are immutable once built. The representation keeps a normalized
//! edge list (`u < v`, sorted, duplicate-free) plus a sorted adjacency
//! table, so neighbourhood scans are cache-friendly and edge membership is
//! a binary search. Vertices are `0..n` with `n >= 1`.
//!
//! Generators cover the fixed families used throughout the experiments
//! (`ring`, `path`, `complete`, `star`), Erdős–Rényi sampling retried until
//! the sample is connected, and a plain-text edge-list reader. All of them
//! are reachable through a single string descriptor (`"ring:64"`,
//! `"gnp:64:0.1:7"`, `"file:graph.txt"`), which is how graphs are named on
//! the command line and in reports.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::rng::{gnp_stream, Draw};

/// Retry cap for connected Erdős–Rényi sampling.
const GNP_MAX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("vertex {v} out of range for a graph on {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("descriptor `{desc}`: {reason}")]
    Descriptor { desc: String, reason: String },
    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },
    #[error("no connected sample within {attempts} attempts (n={n}, p={p})")]
    GnpDisconnected { n: usize, p: f64, attempts: u64 },
    #[error("reading `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Immutable undirected simple graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Build a graph from an edge iterator. Edges are normalized to
    /// `u < v` and deduplicated; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = (a.min(b), a.max(b));
            if v >= n {
                return Err(GraphError::VertexOutOfRange { v, n });
            }
            set.insert((u, v));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, edges, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Normalized (`u < v`), sorted, duplicate-free edge list.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted open neighbourhood of `v`.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && u != v && self.adj[u].binary_search(&v).is_ok()
    }

    /// Maximum degree over all vertices.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Breadth-first connectivity check; single-vertex graphs are connected.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbours(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// The square graph: same vertices, an edge wherever the original
    /// distance is 1 or 2.
    pub fn square(&self) -> Graph {
        let mut edges = BTreeSet::new();
        edges.extend(self.edges.iter().copied());
        for v in 0..self.n {
            for &u in self.neighbours(v) {
                for &w in self.neighbours(u) {
                    if w != v {
                        edges.insert((v.min(w), v.max(w)));
                    }
                }
            }
        }
        Graph::new(self.n, edges).expect("square of a valid graph is valid")
    }

    pub fn metrics(&self) -> GraphMetrics {
        let degrees: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        GraphMetrics {
            n: self.n,
            max_degree: self.max_degree(),
            degrees,
        }
    }

    /// Cycle on `n >= 3` vertices: `i — (i+1) mod n`.
    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::Descriptor {
                desc: format!("ring:{n}"),
                reason: "a ring needs at least 3 vertices".into(),
            });
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Path on `n >= 1` vertices: `i — i+1`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Descriptor {
                desc: "path:0".into(),
                reason: "a path needs at least 1 vertex".into(),
            });
        }
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Complete graph on `n >= 1` vertices.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    /// Star on `n >= 2` vertices: hub `0` joined to every other vertex.
    pub fn star(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::Descriptor {
                desc: format!("star:{n}"),
                reason: "a star needs at least 2 vertices".into(),
            });
        }
        Graph::new(n, (1..n).map(|v| (0, v)))
    }

    /// Erdős–Rényi `G(n, p)`, resampled with fresh randomness until the
    /// sample is connected (at most [`GNP_MAX_ATTEMPTS`] attempts).
    /// Deterministic in `(n, p, seed)`.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::Descriptor {
                desc: format!("gnp:{n}:{p}:{seed}"),
                reason: "edge probability must lie in [0, 1]".into(),
            });
        }
        for attempt in 0..GNP_MAX_ATTEMPTS {
            let mut rng = gnp_stream(seed, attempt);
            let edges = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.unit_f64() < p)
                .collect::<Vec<_>>();
            let g = Graph::new(n, edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GnpDisconnected {
            n,
            p,
            attempts: GNP_MAX_ATTEMPTS,
        })
    }

    /// Parse the plain-text edge-list format: a `n m` header line, then
    /// exactly `m` lines `u v` with `0 <= u < v < n`. Lines starting with
    /// `#` and blank lines are ignored. Duplicate edges are rejected so a
    /// file is a canonical description of its graph.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut data_lines = text
            .lines()
            .enumerate()
            .map(|(i, line)| (i + 1, line.trim()))
            .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'));

        let (header_no, header) = data_lines.next().ok_or(GraphError::EdgeList {
            line: 0,
            reason: "missing `n m` header".into(),
        })?;
        let mut parts = header.split_whitespace();
        let parse = |tok: Option<&str>, what: &str, line: usize| {
            tok.ok_or_else(|| GraphError::EdgeList {
                line,
                reason: format!("missing {what}"),
            })?
            .parse::<usize>()
            .map_err(|_| GraphError::EdgeList {
                line,
                reason: format!("{what} is not a non-negative integer"),
            })
        };
        let n = parse(parts.next(), "vertex count", header_no)?;
        let m = parse(parts.next(), "edge count", header_no)?;
        if parts.next().is_some() {
            return Err(GraphError::EdgeList {
                line: header_no,
                reason: "header must be exactly `n m`".into(),
            });
        }
        if n == 0 {
            return Err(GraphError::Empty);
        }

        let mut edges = BTreeSet::new();
        for _ in 0..m {
            let (line_no, line) = data_lines.next().ok_or(GraphError::EdgeList {
                line: 0,
                reason: format!("expected {m} edge lines, found fewer"),
            })?;
            let mut parts = line.split_whitespace();
            let u = parse(parts.next(), "edge endpoint", line_no)?;
            let v = parse(parts.next(), "edge endpoint", line_no)?;
            if parts.next().is_some() {
                return Err(GraphError::EdgeList {
                    line: line_no,
                    reason: "edge line must be exactly `u v`".into(),
                });
            }
            if u >= v {
                return Err(GraphError::EdgeList {
                    line: line_no,
                    reason: format!("endpoints must satisfy u < v, got {u} {v}"),
                });
            }
            if v >= n {
                return Err(GraphError::EdgeList {
                    line: line_no,
                    reason: format!("endpoint {v} out of range for n={n}"),
                });
            }
            if !edges.insert((u, v)) {
                return Err(GraphError::EdgeList {
                    line: line_no,
                    reason: format!("duplicate edge {u} {v}"),
                });
            }
        }
        if let Some((line_no, _)) = data_lines.next() {
            return Err(GraphError::EdgeList {
                line: line_no,
                reason: "trailing data after the declared edge count".into(),
            });
        }
        Graph::new(n, edges)
    }

    /// Read the edge-list format from a file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_edge_list(&text)
    }

    /// Build a graph from a string descriptor:
    ///
    /// - `ring:n` (n ≥ 3), `path:n` (n ≥ 1), `complete:n` (n ≥ 1),
    ///   `star:n` (n ≥ 2)
    /// - `gnp:n:p:seed` — connected Erdős–Rényi sample
    /// - `file:path` — edge-list file
    pub fn from_descriptor(desc: &str) -> Result<Self, GraphError> {
        let bad = |reason: &str| GraphError::Descriptor {
            desc: desc.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = desc.split_once(':').ok_or_else(|| {
            bad("expected `kind:params`, e.g. `ring:64` or `gnp:64:0.1:7`")
        })?;
        if kind == "file" {
            return Self::from_file(rest);
        }
        let parts: Vec<&str> = rest.split(':').collect();
        let count = |tok: &str| -> Result<usize, GraphError> {
            tok.parse::<usize>()
                .map_err(|_| bad(&format!("`{tok}` is not a vertex count")))
        };
        match (kind, parts.as_slice()) {
            ("ring", [n]) => Self::ring(count(n)?),
            ("path", [n]) => Self::path(count(n)?),
            ("complete", [n]) => Self::complete(count(n)?),
            ("star", [n]) => Self::star(count(n)?),
            ("gnp", [n, p, seed]) => {
                let n = count(n)?;
                let p = p
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("`{p}` is not an edge probability")))?;
                let seed = seed
                    .parse::<u64>()
                    .map_err(|_| bad(&format!("`{seed}` is not a seed")))?;
                Self::gnp(n, p, seed)
            }
            ("gnp", _) => Err(bad("gnp takes exactly `gnp:n:p:seed`")),
            ("ring" | "path" | "complete" | "star", _) => {
                Err(bad("family takes exactly one parameter, e.g. `ring:64`"))
            }
            _ => Err(bad(
                "unknown kind; expected ring, path, complete, star, gnp, or file",
            )),
        }
    }
}

/// Summary statistics used for envelopes and report headers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMetrics {
    pub n: usize,
    pub max_degree: usize,
    pub degrees: Vec<usize>,
}

/// Descriptor-driven construction (`ring:64`, `gnp:64:0.1:7`, `file:p`).
pub fn build_graph(descriptor: &str) -> Result<Graph, GraphError> {
    Graph::from_descriptor(descriptor)
}

/// Same vertices, edges wherever the original distance is 1 or 2.
pub fn square_graph(g: &Graph) -> Graph {
    g.square()
}

/// Vertex count, maximum degree, and the full degree sequence.
pub fn metrics(g: &Graph) -> GraphMetrics {
    g.metrics()
}

//! Undirected multigraph model shared by every other module.
//!
//! Parallel edges are allowed, self-loops are not. A [`Graph`] is immutable once
//! built; perturbation works on a private copy of the edge list and rebuilds.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::BufRead;

use log::warn;

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Undirected multigraph in compressed adjacency form.
///
/// Edges are stored with the smaller endpoint first. The neighbor list of a
/// vertex holds one entry per incident edge, so a vertex joined by two parallel
/// edges appears twice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Result<Self> {
        if n > VertexId::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} vertices exceed the 32-bit id space")));
        }
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        Ok(Self::build(n, normalized))
    }

    /// Builds without validation; callers guarantee the edge invariants.
    pub(crate) fn build(n: usize, edges: Vec<(VertexId, VertexId)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in &edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0; offsets[n]];
        for &(u, v) in &edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Incident edge endpoints of `v`, one entry per edge.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n as VertexId).map(|v| self.degree(v)).collect()
    }

    /// Edge multiset in canonical (sorted) order.
    pub fn sorted_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut edges = self.edges.clone();
        edges.sort_unstable();
        edges
    }

    /// Same vertex count and same edge multiset, regardless of edge order.
    pub fn same_edge_multiset(&self, other: &Graph) -> bool {
        self.n == other.n && self.sorted_edges() == other.sorted_edges()
    }

    pub fn has_parallel_edges(&self) -> bool {
        self.sorted_edges().windows(2).any(|w| w[0] == w[1])
    }

    /// Degree multiset as a sorted vector.
    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d = self.degrees();
        d.sort_unstable();
        d
    }
}

/// Options for [`parse_edge_list`].
#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Collapse duplicate undirected pairs to one edge.
    pub dedupe: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { dedupe: true }
    }
}

/// Result of edge-list ingestion.
#[derive(Clone, Debug)]
pub struct ParsedGraph {
    pub graph: Graph,
    /// Original token for each dense vertex id.
    pub labels: Vec<u64>,
    /// Number of edge lines before self-loop removal and deduplication.
    pub raw_edge_count: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    /// Pairs listed in both directions, which marks a directed listing.
    pub reciprocal_pairs: usize,
}

/// Parses a whitespace-separated edge list; lines starting with `#` are comments.
///
/// Vertices are renumbered densely in order of first appearance. Self-loops are
/// dropped with a warning. Directed listings are symmetrized.
pub fn parse_edge_list(reader: impl BufRead, opts: ParseOptions) -> Result<ParsedGraph> {
    let mut ids: HashMap<u64, VertexId> = HashMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    let mut self_loops = 0usize;

    let mut intern = |token: u64, labels: &mut Vec<u64>| -> Result<VertexId> {
        if let Some(&id) = ids.get(&token) {
            return Ok(id);
        }
        let id = VertexId::try_from(labels.len()).map_err(|_| Error::InvalidGraph("too many vertices".into()))?;
        ids.insert(token, id);
        labels.push(token);
        Ok(id)
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 vertex tokens, found {}", tokens.len()),
            });
        }
        let mut parsed = [0u64; 2];
        for (slot, tok) in parsed.iter_mut().zip(&tokens) {
            *slot = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("vertex token {tok:?} is not a non-negative integer"),
            })?;
        }
        let u = intern(parsed[0], &mut labels)?;
        let v = intern(parsed[1], &mut labels)?;
        if u == v {
            self_loops += 1;
            continue;
        }
        raw.push((u, v));
    }

    let raw_edge_count = raw.len() + self_loops;
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    if self_loops > 0 {
        warn!("dropped {self_loops} self-loop line(s)");
    }

    let mut directed: HashMap<(VertexId, VertexId), u32> = HashMap::new();
    for &(u, v) in &raw {
        *directed.entry((u, v)).or_default() += 1;
    }
    let reciprocal_pairs = directed
        .keys()
        .filter(|&&(u, v)| u < v && directed.contains_key(&(v, u)))
        .count();
    if reciprocal_pairs > 0 {
        warn!("{reciprocal_pairs} pair(s) listed in both directions; treating input as undirected");
    }

    let mut edges: Vec<(VertexId, VertexId)> = raw.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut duplicates = 0;
    if opts.dedupe {
        let before = edges.len();
        let mut seen = std::collections::HashSet::with_capacity(before);
        edges.retain(|e| seen.insert(*e));
        duplicates = before - edges.len();
    }

    Ok(ParsedGraph {
        graph: Graph::build(labels.len(), edges),
        labels,
        raw_edge_count,
        self_loops_dropped: self_loops,
        duplicates_collapsed: duplicates,
        reciprocal_pairs,
    })
}

/// Parses an edge list held in memory.
pub fn parse_edge_list_str(text: &str, opts: ParseOptions) -> Result<ParsedGraph> {
    parse_edge_list(text.as_bytes(), opts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeStats {
    pub n: usize,
    pub m: usize,
    pub avg_degree: f64,
    pub avg_sq_degree: f64,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let n = g.vertex_count();
    let mut histogram = BTreeMap::new();
    let mut sq = 0.0;
    for d in g.degrees() {
        *histogram.entry(d).or_insert(0) += 1;
        sq += (d * d) as f64;
    }
    let denom = n.max(1) as f64;
    DegreeStats {
        n,
        m: g.edge_count(),
        avg_degree: 2.0 * g.edge_count() as f64 / denom,
        avg_sq_degree: sq / denom,
        degree_histogram: histogram,
    }
}

/// BFS distances from `source`; unreachable vertices are `None`.
pub fn bfs_distances(g: &Graph, source: VertexId) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.vertex_count()];
    let mut queue = VecDeque::new();
    dist[source as usize] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize].unwrap_or_default();
        for &w in g.neighbors(u) {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn is_connected(g: &Graph) -> bool {
    if g.vertex_count() == 0 {
        return true;
    }
    bfs_distances(g, 0).iter().all(Option::is_some)
}

/// Component label per vertex and the number of components.
pub fn connected_components(g: &Graph) -> (Vec<usize>, usize) {
    let n = g.vertex_count();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        stack.push(s as VertexId);
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if comp[w as usize] == usize::MAX {
                    comp[w as usize] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Largest connected component, with the original id of each of its vertices.
pub fn largest_component(g: &Graph) -> (Graph, Vec<VertexId>) {
    let (comp, count) = connected_components(g);
    let mut sizes = vec![0usize; count];
    for &c in &comp {
        sizes[c] += 1;
    }
    // ties go to the component containing the smallest vertex id
    let best = (0..count)
        .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
        .unwrap_or(0);
    let members: Vec<VertexId> = (0..g.vertex_count() as VertexId)
        .filter(|&v| comp[v as usize] == best)
        .collect();
    let sub = induced_subgraph(g, &members).expect("component members are distinct and in range");
    (sub, members)
}

/// Subgraph induced by `vertices`, renumbered by position in the sequence.
///
/// Every edge with both endpoints in the set is kept with its multiplicity.
pub fn induced_subgraph(g: &Graph, vertices: &[VertexId]) -> Result<Graph> {
    let mut position: HashMap<VertexId, VertexId> = HashMap::with_capacity(vertices.len());
    for (i, &v) in vertices.iter().enumerate() {
        if v as usize >= g.vertex_count() {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        if position.insert(v, i as VertexId).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate vertex {v}")));
        }
    }
    Ok(induced_with_positions(g, vertices, &position))
}

pub(crate) fn induced_with_positions(
    g: &Graph,
    vertices: &[VertexId],
    position: &HashMap<VertexId, VertexId>,
) -> Graph {
    let mut edges = Vec::new();
    for (i, &v) in vertices.iter().enumerate() {
        let i = i as VertexId;
        for w in g.neighbors(v) {
            if let Some(&j) = position.get(w) {
                if j > i {
                    edges.push((i, j));
                }
            }
        }
    }
    Graph::build(vertices.len(), edges)
}

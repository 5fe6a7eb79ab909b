//! Deterministic and random graph families used in tests, benches and demos.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::seed;

pub fn path(n: usize) -> Graph {
    Graph::build(n, (1..n as VertexId).map(|v| (v - 1, v)).collect())
}

pub fn cycle(n: usize) -> Graph {
    let mut edges: Vec<_> = (1..n as VertexId).map(|v| (v - 1, v)).collect();
    if n >= 3 {
        edges.push((0, n as VertexId - 1));
    }
    Graph::build(n, edges)
}

/// `K_{1,leaves}` with the center at vertex 0.
pub fn star(leaves: usize) -> Graph {
    Graph::build(leaves + 1, (1..=leaves as VertexId).map(|v| (0, v)).collect())
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n as VertexId {
        for v in u + 1..n as VertexId {
            edges.push((u, v));
        }
    }
    Graph::build(n, edges)
}

/// `rows × cols` lattice, vertex `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| (r * cols + c) as VertexId;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::build(rows * cols, edges)
}

/// Erdős–Rényi `G(n, p)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for u in 0..n as VertexId {
        for v in u + 1..n as VertexId {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::build(n, edges)
}

/// Watts–Strogatz ring lattice (each vertex joined to `k/2` neighbors per side)
/// with each edge's far endpoint rewired with probability `beta`.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    if !k.is_multiple_of(2) || k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "watts_strogatz needs even 0 < k < n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut present: HashSet<(VertexId, VertexId)> = HashSet::new();
    let mut edges = Vec::new();
    let key = |a: VertexId, b: VertexId| (a.min(b), a.max(b));
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            let e = key(u as VertexId, v as VertexId);
            present.insert(e);
            edges.push(e);
        }
    }
    for e in edges.iter_mut() {
        if !rng.gen_bool(beta) {
            continue;
        }
        let u = e.0;
        // saturated vertices keep their lattice edge
        for _ in 0..n {
            let w = rng.gen_range(0..n as VertexId);
            let cand = key(u, w);
            if w != u && !present.contains(&cand) {
                present.remove(e);
                present.insert(cand);
                *e = cand;
                break;
            }
        }
    }
    Ok(Graph::build(n, edges))
}

/// Uniform simple `d`-regular graph by the pairing model with rejection.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if !(n * d).is_multiple_of(2) || d >= n {
        return Err(Error::InvalidArgument(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut stubs: Vec<VertexId> = (0..n as VertexId).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..10_000 {
        stubs.shuffle(&mut rng);
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return Ok(Graph::build(n, edges));
    }
    Err(Error::InvalidArgument(format!(
        "pairing model failed for n = {n}, d = {d}"
    )))
}

/// Decodes a Prüfer sequence over `0..t` into the edges of a labeled tree on `t` vertices.
pub fn prufer_decode(sequence: &[VertexId], t: usize) -> Result<Vec<(VertexId, VertexId)>> {
    if t < 2 || sequence.len() != t - 2 {
        return Err(Error::InvalidArgument(format!(
            "Prüfer sequence for {t} vertices must have length {}",
            t.saturating_sub(2)
        )));
    }
    let mut degree = vec![1usize; t];
    for &s in sequence {
        if s as usize >= t {
            return Err(Error::InvalidArgument(format!("label {s} out of range")));
        }
        degree[s as usize] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<VertexId>> = (0..t as VertexId)
        .filter(|&v| degree[v as usize] == 1)
        .map(Reverse)
        .collect();
    let mut edges = Vec::with_capacity(t - 1);
    for &s in sequence {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[s as usize] -= 1;
        if degree[s as usize] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a.min(b), a.max(b)));
    Ok(edges)
}

/// Uniform random labeled tree on `t ≥ 2` vertices.
pub fn prufer_tree<R: Rng + ?Sized>(t: usize, rng: &mut R) -> Result<Graph> {
    let seq: Vec<VertexId> = (0..t.saturating_sub(2))
        .map(|_| rng.gen_range(0..t as VertexId))
        .collect();
    Ok(Graph::build(t, prufer_decode(&seq, t)?))
}

//! Subgraph descriptors: the canonical-order signature image and the classical
//! feature vector.
//!
//! Both work on the simple projection of a sample (parallel edges collapsed).
//! Multiplicity only matters to the walk that produced the sample.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::graph::{connected_components, Graph};
use crate::sampler::SubgraphSample;

/// Graphs above this size use sorted neighbor lists instead of bitset rows.
const BITSET_LIMIT: usize = 4096;

/// Bitset adjacency of the simple projection of a small graph.
#[derive(Clone, Debug)]
pub struct SimpleAdjacency {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl SimpleAdjacency {
    pub fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let words = n.div_ceil(64).max(1);
        let mut rows = vec![0u64; n * words];
        for &(u, v) in g.edges() {
            let (u, v) = (u as usize, v as usize);
            rows[u * words + v / 64] |= 1 << (v % 64);
            rows[v * words + u / 64] |= 1 << (u % 64);
        }
        Self { n, words, rows }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Triangles through `i`.
    pub fn triangles_at(&self, i: usize) -> usize {
        self.neighbors(i).map(|j| self.common_neighbors(i, j)).sum::<usize>() / 2
    }
}

fn simple_neighbor_lists(g: &Graph) -> Vec<Vec<u32>> {
    (0..g.vertex_count() as u32)
        .map(|v| {
            let mut nb = g.neighbors(v).to_vec();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect()
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn local_clustering(triangles: usize, degree: usize) -> f64 {
    if degree < 2 {
        0.0
    } else {
        triangles as f64 / (degree * (degree - 1) / 2) as f64
    }
}

/// Mean over vertices of closed-triangle fraction, zero for degree < 2.
pub fn clustering_coefficient(g: &Graph) -> f64 {
    let n = g.vertex_count();
    if n == 0 {
        return 0.0;
    }
    if n <= BITSET_LIMIT {
        return clustering_of(&SimpleAdjacency::new(g));
    }
    let lists = simple_neighbor_lists(g);
    let total: f64 = lists
        .iter()
        .map(|nb| {
            let t: usize = nb.iter().map(|&w| sorted_intersection(nb, &lists[w as usize])).sum();
            local_clustering(t / 2, nb.len())
        })
        .sum();
    total / n as f64
}

fn clustering_of(adj: &SimpleAdjacency) -> f64 {
    if adj.n == 0 {
        return 0.0;
    }
    let total: f64 = (0..adj.n)
        .map(|i| local_clustering(adj.triangles_at(i), adj.degree(i)))
        .sum();
    total / adj.n as f64
}

/// Vertex-averaged mean neighbor degree; isolated vertices are skipped and an
/// edgeless graph gives 0.
pub fn avg_neighbor_degree(g: &Graph) -> f64 {
    let lists = simple_neighbor_lists(g);
    let mut sum = 0.0;
    let mut counted = 0usize;
    for nb in &lists {
        if nb.is_empty() {
            continue;
        }
        let s: usize = nb.iter().map(|&w| lists[w as usize].len()).sum();
        sum += s as f64 / nb.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    }
}

fn neighbor_degree_of(adj: &SimpleAdjacency, degrees: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for i in 0..adj.n {
        if degrees[i] == 0 {
            continue;
        }
        let s: usize = adj.neighbors(i).map(|j| degrees[j]).sum();
        sum += s as f64 / degrees[i] as f64;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    }
}

/// A degree-prioritized BFS ordering of a subgraph's vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalOrder {
    /// `order[k]` is the subgraph vertex placed at canonical position `k`.
    pub order: Vec<usize>,
    /// How many adjacent placements were decided only by visit index.
    pub index_ties: usize,
}

/// Degree-prioritized BFS over the simple projection.
///
/// The root is the vertex of largest degree (smallest visit index on ties).
/// Each BFS level is placed in order of descending degree, then by the queue
/// position of the parent that discovered it, then by visit index.
pub fn canonical_order(sample: &SubgraphSample) -> Result<CanonicalOrder> {
    canonical_order_of(&SimpleAdjacency::new(&sample.subgraph))
}

pub fn canonical_order_of(adj: &SimpleAdjacency) -> Result<CanonicalOrder> {
    let n = adj.n;
    if n == 0 {
        return Ok(CanonicalOrder {
            order: Vec::new(),
            index_ties: 0,
        });
    }
    let deg = adj.degrees();
    let max_deg = *deg.iter().max().unwrap_or(&0);
    let root = deg.iter().position(|&d| d == max_deg).unwrap_or(0);
    let mut index_ties = deg.iter().filter(|&&d| d == max_deg).count() - 1;

    let mut placed = vec![false; n];
    placed[root] = true;
    let mut order = Vec::with_capacity(n);
    order.push(root);
    let mut level_start = 0;
    while level_start < order.len() {
        let level_end = order.len();
        let mut next: Vec<(usize, usize)> = Vec::new();
        for (parent_pos, &parent) in order.iter().enumerate().take(level_end).skip(level_start) {
            for w in adj.neighbors(parent) {
                if !placed[w] {
                    placed[w] = true;
                    next.push((w, parent_pos));
                }
            }
        }
        next.sort_by(|a, b| deg[b.0].cmp(&deg[a.0]).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
        index_ties += next
            .windows(2)
            .filter(|p| deg[p[0].0] == deg[p[1].0] && p[0].1 == p[1].1)
            .count();
        order.extend(next.into_iter().map(|(w, _)| w));
        level_start = level_end;
    }
    if order.len() < n {
        return Err(Error::Disconnected);
    }
    Ok(CanonicalOrder { order, index_ties })
}

/// `κ × κ` binary adjacency picture under the canonical ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignatureImage {
    pub kappa: usize,
    /// Row-major 0/1 pixels; 1 marks an edge (a black pixel).
    pub pixels: Vec<u8>,
}

impl SignatureImage {
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.pixels[i * self.kappa + j]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.pixels
            .chunks(self.kappa.max(1))
            .map(|r| r.iter().map(|&p| p as usize).sum())
            .collect()
    }

    /// Indices of set pixels.
    pub fn active_pixels(&self) -> Vec<u32> {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 1)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Compact key: `κ` followed by the upper triangle packed into bits.
    pub fn key_bytes(&self) -> Vec<u8> {
        let k = self.kappa;
        let mut out = (k as u32).to_le_bytes().to_vec();
        let mut byte = 0u8;
        let mut bit = 0;
        for i in 0..k {
            for j in i + 1..k {
                byte |= self.get(i, j) << bit;
                bit += 1;
                if bit == 8 {
                    out.push(byte);
                    byte = 0;
                    bit = 0;
                }
            }
        }
        if bit > 0 {
            out.push(byte);
        }
        out
    }
}

pub fn signature_image(sample: &SubgraphSample) -> Result<SignatureImage> {
    let adj = SimpleAdjacency::new(&sample.subgraph);
    let canon = canonical_order_of(&adj)?;
    Ok(image_from_order(&adj, &canon.order))
}

fn image_from_order(adj: &SimpleAdjacency, order: &[usize]) -> SignatureImage {
    let k = order.len();
    let mut pixels = vec![0u8; k * k];
    for (a, &u) in order.iter().enumerate() {
        for (b, &v) in order.iter().enumerate() {
            if a != b && adj.has_edge(u, v) {
                pixels[a * k + b] = 1;
            }
        }
    }
    SignatureImage { kappa: k, pixels }
}

/// Classical descriptors of a subgraph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub clustering_c: f64,
    pub neighbor_degree_r: f64,
    pub connected: f64,
    pub edge_density: f64,
    pub max_degree_norm: f64,
    pub component_count_norm: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 6] = ["C", "r", "connected", "density", "maxdeg", "comps"];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.clustering_c,
            self.neighbor_degree_r,
            self.connected,
            self.edge_density,
            self.max_degree_norm,
            self.component_count_norm,
        ]
    }
}

pub fn feature_vector(sample: &SubgraphSample) -> FeatureVector {
    features_of_graph(&sample.subgraph)
}

pub fn features_of_graph(g: &Graph) -> FeatureVector {
    let k = g.vertex_count();
    let adj = SimpleAdjacency::new(g);
    let deg = adj.degrees();
    let edges = deg.iter().sum::<usize>() / 2;
    let pairs = k * k.saturating_sub(1) / 2;
    let (_, comps) = connected_components(g);
    FeatureVector {
        clustering_c: clustering_of(&adj),
        neighbor_degree_r: neighbor_degree_of(&adj, &deg),
        connected: if comps <= 1 { 1.0 } else { 0.0 },
        edge_density: if pairs == 0 { 0.0 } else { edges as f64 / pairs as f64 },
        max_degree_norm: if k < 2 {
            0.0
        } else {
            *deg.iter().max().unwrap_or(&0) as f64 / (k - 1) as f64
        },
        component_count_norm: if k == 0 { 1.0 } else { comps as f64 / k as f64 },
    }
}

/// Per-pixel mean of a set of signature images.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanSignature {
    pub kappa: usize,
    pub pixels: Vec<f64>,
}

impl MeanSignature {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.kappa + j]
    }

    /// Mean absolute per-pixel difference.
    pub fn l1_distance(&self, other: &MeanSignature) -> Result<f64> {
        if self.kappa != other.kappa {
            return Err(Error::KappaMismatch {
                expected: self.kappa,
                found: other.kappa,
            });
        }
        let s: f64 = self.pixels.iter().zip(&other.pixels).map(|(a, b)| (a - b).abs()).sum();
        Ok(s / self.pixels.len().max(1) as f64)
    }

    /// Binary PGM; darker pixels mark edges that are present more often.
    /// Each comment becomes a `#` line in the header.
    pub fn write_pgm(&self, comments: &[String], mut w: impl Write) -> io::Result<()> {
        writeln!(w, "P5")?;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        write!(w, "{} {}\n255\n", self.kappa, self.kappa)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| (255.0 * (1.0 - p)).round().clamp(0.0, 255.0) as u8)
            .collect();
        w.write_all(&bytes)
    }
}

pub fn mean_signature(images: &[SignatureImage]) -> Result<MeanSignature> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("mean signature of an empty set".into()))?;
    let k = first.kappa;
    let mut sum = vec![0.0; k * k];
    for img in images {
        if img.kappa != k {
            return Err(Error::KappaMismatch {
                expected: k,
                found: img.kappa,
            });
        }
        for (s, &p) in sum.iter_mut().zip(&img.pixels) {
            *s += f64::from(p);
        }
    }
    let count = images.len() as f64;
    Ok(MeanSignature {
        kappa: k,
        pixels: sum.into_iter().map(|s| s / count).collect(),
    })
}

/// CSV with one row per feature vector: `C,r,connected,density,maxdeg,comps`.
pub fn write_features_csv(features: &[FeatureVector], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{}", FeatureVector::NAMES.join(","))?;
    for f in features {
        let row: Vec<String> = f.to_array().iter().map(|x| format!("{x}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::sampler::Label;

    fn sample_of(g: Graph) -> SubgraphSample {
        SubgraphSample {
            vertices: (0..g.vertex_count() as u32).collect(),
            subgraph: g,
            label: Label::Original,
            walk_steps: 0,
        }
    }

    #[test]
    fn star_orders_center_first() {
        // center placed last in visit order
        let g = Graph::from_edges(5, [(4, 0), (4, 1), (4, 2), (4, 3)]).unwrap();
        let c = canonical_order(&sample_of(g)).unwrap();
        assert_eq!(c.order, vec![4, 0, 1, 2, 3]);
    }

    #[test]
    fn path_orders_middle_first() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = canonical_order(&sample_of(g)).unwrap();
        assert_eq!(c.order, vec![1, 0, 2]);
        assert_eq!(c.index_ties, 1);
    }

    #[test]
    fn disconnected_subgraph_is_rejected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            canonical_order(&sample_of(g.clone())),
            Err(Error::Disconnected)
        ));
        assert!(signature_image(&sample_of(g)).is_err());
    }

    #[test]
    fn image_examples() {
        let tri = signature_image(&sample_of(generators::complete(3))).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(tri.get(i, j), u8::from(i != j));
            }
        }

        let k = 7;
        let path = signature_image(&sample_of(generators::path(k))).unwrap();
        let mut sums = path.row_sums();
        sums.sort_unstable();
        assert_eq!(sums, vec![1, 1, 2, 2, 2, 2, 2]);

        let single = signature_image(&sample_of(Graph::from_edges(2, [(0, 1)]).unwrap())).unwrap();
        let double = signature_image(&sample_of(Graph::from_edges(2, [(0, 1), (0, 1)]).unwrap())).unwrap();
        assert_eq!(single, double);
    }

    /// Triangles through each vertex by checking every vertex pair.
    fn brute_clustering(g: &Graph) -> f64 {
        let n = g.vertex_count();
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in g.edges() {
            adj[u as usize][v as usize] = true;
            adj[v as usize][u as usize] = true;
        }
        let mut total = 0.0;
        for v in 0..n {
            let nb: Vec<usize> = (0..n).filter(|&w| adj[v][w]).collect();
            if nb.len() < 2 {
                continue;
            }
            let mut closed = 0;
            for a in 0..nb.len() {
                for b in a + 1..nb.len() {
                    if adj[nb[a]][nb[b]] {
                        closed += 1;
                    }
                }
            }
            total += closed as f64 / (nb.len() * (nb.len() - 1) / 2) as f64;
        }
        total / n as f64
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(clustering_coefficient(&generators::complete(3)), 1.0);
        assert_eq!(clustering_coefficient(&generators::star(3)), 0.0);
        let k4_minus = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let oracle = brute_clustering(&k4_minus);
        // two degree-3 vertices close 2 of 3 pairs, two degree-2 vertices close 1 of 1
        assert!((oracle - 5.0 / 6.0).abs() < 1e-12);
        assert!((clustering_coefficient(&k4_minus) - oracle).abs() < 1e-12);
    }

    #[test]
    fn neighbor_degree_examples() {
        assert_eq!(avg_neighbor_degree(&generators::cycle(5)), 2.0);
        assert_eq!(avg_neighbor_degree(&generators::star(3)), 2.5);
        assert!((avg_neighbor_degree(&generators::path(3)) - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(avg_neighbor_degree(&Graph::from_edges(3, []).unwrap()), 0.0);
    }

    #[test]
    fn feature_vector_examples() {
        let k = 6;
        let clique = feature_vector(&sample_of(generators::complete(k)));
        assert_eq!(clique.clustering_c, 1.0);
        assert_eq!(clique.edge_density, 1.0);
        assert_eq!(clique.max_degree_norm, 1.0);
        assert_eq!(clique.connected, 1.0);

        let path = feature_vector(&sample_of(generators::path(k)));
        assert_eq!(path.clustering_c, 0.0);
        assert!((path.edge_density - 2.0 / k as f64).abs() < 1e-12);
        assert!((path.component_count_norm - 1.0 / k as f64).abs() < 1e-12);
    }

    #[test]
    fn mean_signature_examples() {
        let img = signature_image(&sample_of(generators::path(4))).unwrap();
        let m = mean_signature(std::slice::from_ref(&img)).unwrap();
        assert!(m.pixels.iter().zip(&img.pixels).all(|(a, &b)| *a == f64::from(b)));

        let mut complement = img.clone();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    complement.pixels[i * 4 + j] = 1 - img.get(i, j);
                }
            }
        }
        let half = mean_signature(&[img.clone(), complement]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(half.get(i, j), if i == j { 0.0 } else { 0.5 });
            }
        }

        let other = signature_image(&sample_of(generators::path(5))).unwrap();
        assert!(matches!(
            mean_signature(&[img, other]),
            Err(Error::KappaMismatch { .. })
        ));
        assert!(mean_signature(&[]).is_err());
    }

    #[test]
    fn pgm_encoding() {
        let m = MeanSignature {
            kappa: 2,
            pixels: vec![0.0, 1.0, 0.5, 0.0],
        };
        let mut buf = Vec::new();
        m.write_pgm(&[], &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        let mut commented = Vec::new();
        m.write_pgm(&["seed=1".into()], &mut commented).unwrap();
        assert!(commented.starts_with(b"P5\n# seed=1\n2 2\n255\n"));
        assert_eq!(&buf[buf.len() - 4..], &[255, 0, 128, 255]);
    }

    #[test]
    fn large_graph_path_matches_bitset_path() {
        let g = generators::erdos_renyi(60, 0.2, 4);
        let adj = SimpleAdjacency::new(&g);
        let lists = simple_neighbor_lists(&g);
        let via_lists: f64 = lists
            .iter()
            .map(|nb| {
                let t: usize = nb.iter().map(|&w| sorted_intersection(nb, &lists[w as usize])).sum();
                local_clustering(t / 2, nb.len())
            })
            .sum::<f64>()
            / 60.0;
        assert!((clustering_of(&adj) - via_lists).abs() < 1e-12);
    }
}

//! Binary formats for cached graphs and sample sets, and content hashing.
//!
//! Graph file: `ISGR`, version `u32`, `n` and `m` as `u64`, then `m` edge pairs
//! of `u32`. Sample file: `ISDS`, version `u32`, count `u64`, then per sample
//! the label sign, `κ`, walk steps, visited vertices and subgraph edges. All
//! integers are little-endian.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::sampler::{Label, SubgraphSample};

const GRAPH_MAGIC: &[u8; 4] = b"ISGR";
const SAMPLES_MAGIC: &[u8; 4] = b"ISDS";
const VERSION: u32 = 1;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn expect_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn write_edges(w: &mut impl Write, edges: &[(VertexId, VertexId)]) -> io::Result<()> {
    for &(u, v) in edges {
        w.write_all(&u.to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_edges(r: &mut impl Read, m: u64) -> Result<Vec<(VertexId, VertexId)>> {
    let mut edges = Vec::with_capacity(m.min(1 << 24) as usize);
    for _ in 0..m {
        edges.push((read_u32(r)?, read_u32(r)?));
    }
    Ok(edges)
}

pub fn write_graph(g: &Graph, mut w: impl Write) -> io::Result<()> {
    w.write_all(GRAPH_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.vertex_count() as u64).to_le_bytes())?;
    w.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    write_edges(&mut w, g.edges())
}

pub fn read_graph(mut r: impl Read) -> Result<Graph> {
    expect_header(&mut r, GRAPH_MAGIC)?;
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)?;
    Graph::from_edges(n, read_edges(&mut r, m)?)
}

pub fn graph_bytes(g: &Graph) -> Vec<u8> {
    let mut buf = Vec::with_capacity(24 + 8 * g.edge_count());
    write_graph(g, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the serialized graph; equal graphs (same edge order) hash equal.
pub fn graph_hash(g: &Graph) -> String {
    content_hash(&graph_bytes(g))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

pub fn save_graph(path: &Path, g: &Graph) -> io::Result<()> {
    write_atomic(path, &graph_bytes(g))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(io::BufReader::new(fs::File::open(path)?))
}

pub fn write_samples(samples: &[SubgraphSample], mut w: impl Write) -> io::Result<()> {
    w.write_all(SAMPLES_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        w.write_all(&[s.label.sign() as u8])?;
        w.write_all(&(s.kappa() as u32).to_le_bytes())?;
        w.write_all(&s.walk_steps.to_le_bytes())?;
        for &v in &s.vertices {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(s.subgraph.edge_count() as u64).to_le_bytes())?;
        write_edges(&mut w, s.subgraph.edges())?;
    }
    Ok(())
}

pub fn read_samples(mut r: impl Read) -> Result<Vec<SubgraphSample>> {
    expect_header(&mut r, SAMPLES_MAGIC)?;
    let count = read_u64(&mut r)?;
    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let mut sign = [0u8; 1];
        r.read_exact(&mut sign)?;
        let label = Label::from_sign(sign[0] as i8)?;
        let kappa = read_u32(&mut r)? as usize;
        let walk_steps = read_u64(&mut r)?;
        let vertices = (0..kappa).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        let m = read_u64(&mut r)?;
        let subgraph = Graph::from_edges(kappa, read_edges(&mut r, m)?)?;
        out.push(SubgraphSample {
            vertices,
            subgraph,
            label,
            walk_steps,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::sampler::build_dataset;

    #[test]
    fn graph_round_trip() {
        let g = Graph::from_edges(5, [(0, 1), (0, 1), (2, 4), (3, 4)]).unwrap();
        let bytes = graph_bytes(&g);
        assert_eq!(&bytes[..4], b"ISGR");
        assert_eq!(bytes.len(), 24 + 8 * 4);
        assert_eq!(read_graph(&bytes[..]).unwrap(), g);
    }

    #[test]
    fn hash_tracks_content() {
        let a = generators::cycle(6);
        assert_eq!(graph_hash(&a), graph_hash(&generators::cycle(6)));
        assert_ne!(graph_hash(&a), graph_hash(&generators::path(6)));
        assert_eq!(graph_hash(&a).len(), 64);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(matches!(read_graph(&b"XXXX\x01\0\0\0"[..]), Err(Error::Format(_))));
        let mut bytes = graph_bytes(&generators::path(3));
        bytes.truncate(bytes.len() - 2);
        assert!(matches!(read_graph(&bytes[..]), Err(Error::Io(_))));
        // edge endpoint out of range
        let mut bytes = graph_bytes(&generators::path(3));
        let last = bytes.len() - 4;
        bytes[last..].copy_from_slice(&9u32.to_le_bytes());
        assert!(read_graph(&bytes[..]).is_err());
    }

    #[test]
    fn samples_round_trip() {
        let g = generators::erdos_renyi(40, 0.15, 2);
        let d = build_dataset(&g, &g, 5, 6, 0.5, 1).unwrap();
        let mut buf = Vec::new();
        write_samples(&d.train, &mut buf).unwrap();
        assert_eq!(read_samples(&buf[..]).unwrap(), d.train);
    }

    #[test]
    fn atomic_save_and_load() {
        let dir = std::env::temp_dir().join(format!("iscale-cache-{}", std::process::id()));
        let path = dir.join("g.bin");
        let g = generators::grid(3, 4);
        save_graph(&path, &g).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);
        fs::remove_dir_all(dir).unwrap();
    }
}

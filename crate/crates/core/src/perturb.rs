//! Degree-preserving randomization by edge swaps.
//!
//! A swap takes edges `(u,v)` and `(x,y)` on four distinct vertices and rewires
//! them to `(u,x)` and `(v,y)`. Before the rule is applied each edge's endpoint
//! order is flipped by an independent fair coin, so both re-pairings of the four
//! endpoints are equally likely. Parallel edges may appear and take part in later
//! swaps; self-loops never can.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::seed;

/// Default swaps per edge used to realize `δ = ∞`.
pub const DEFAULT_INFINITY_MULTIPLIER: u32 = 20;

/// Attempts allowed per requested swap before giving up.
pub const ATTEMPTS_PER_SWAP: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Delta {
    /// Fraction of the edge count, e.g. `0.1` for 10%.
    Fraction(f64),
    Infinity,
}

impl Delta {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Delta::Infinity)
    }

    /// `inf` or the fraction in shortest decimal form.
    pub fn code(&self) -> String {
        match self {
            Delta::Infinity => "inf".to_string(),
            Delta::Fraction(f) => format!("{f}"),
        }
    }

    pub fn parse(text: &str) -> Result<Delta> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Delta::Infinity);
        }
        let (body, scale) = match t.strip_suffix('%') {
            Some(b) => (b, 100.0),
            None => (t, 1.0),
        };
        let value: f64 = body
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad perturbation level {text:?}")))?;
        let f = value / scale;
        if !f.is_finite() || f < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "perturbation level must be ≥ 0, got {text:?}"
            )));
        }
        Ok(Delta::Fraction(f))
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Infinity => write!(f, "∞"),
            Delta::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub delta: Delta,
    /// Number of successful swaps to perform.
    pub swap_count: u64,
    /// Swaps per edge used when `delta` is infinite.
    pub infinity_multiplier: u32,
}

impl PerturbationSpec {
    pub fn new(delta: Delta, m: usize, infinity_multiplier: u32) -> Result<Self> {
        if infinity_multiplier < 1 {
            return Err(Error::InvalidArgument("infinity multiplier must be ≥ 1".into()));
        }
        let swap_count = match delta {
            Delta::Fraction(f) => {
                if !f.is_finite() || f < 0.0 {
                    return Err(Error::InvalidArgument(format!("negative perturbation fraction {f}")));
                }
                (f * m as f64).ceil() as u64
            }
            Delta::Infinity => u64::from(infinity_multiplier) * m as u64,
        };
        Ok(Self {
            delta,
            swap_count,
            infinity_multiplier,
        })
    }

    pub fn fraction(m: usize, f: f64) -> Result<Self> {
        Self::new(Delta::Fraction(f), m, DEFAULT_INFINITY_MULTIPLIER)
    }

    pub fn infinity(m: usize, q: u32) -> Result<Self> {
        Self::new(Delta::Infinity, m, q)
    }

    pub fn none() -> Self {
        Self {
            delta: Delta::Fraction(0.0),
            swap_count: 0,
            infinity_multiplier: DEFAULT_INFINITY_MULTIPLIER,
        }
    }

    /// Stable integer key used in seed derivation.
    pub fn seed_key(&self) -> u64 {
        match self.delta {
            Delta::Infinity => u64::MAX - u64::from(self.infinity_multiplier),
            Delta::Fraction(_) => self.swap_count,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwapOutcome {
    pub attempted: u64,
    pub succeeded: u64,
    pub rejected_shared_vertex: u64,
}

/// Result of a single swap attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SwapResult {
    Swapped(Graph),
    /// The four endpoints were not distinct.
    Rejected,
}

/// Applies one swap to edges `e1`, `e2` of `g`.
///
/// `orientation` flips the endpoint order of `e1` and `e2` respectively before
/// the `(u,v)(x,y) → (u,x)(v,y)` rule.
pub fn edge_swap(g: &Graph, e1: usize, e2: usize, orientation: (bool, bool)) -> Result<SwapResult> {
    let m = g.edge_count();
    if e1 == e2 || e1 >= m || e2 >= m {
        return Err(Error::InvalidArgument(format!(
            "swap needs two distinct edge indices below {m}, got {e1} and {e2}"
        )));
    }
    let mut edges = g.edges().to_vec();
    if try_swap(&mut edges, e1, e2, orientation) {
        Ok(SwapResult::Swapped(Graph::build(g.vertex_count(), edges)))
    } else {
        Ok(SwapResult::Rejected)
    }
}

#[inline]
fn try_swap(edges: &mut [(VertexId, VertexId)], i: usize, j: usize, (flip_i, flip_j): (bool, bool)) -> bool {
    let (mut u, mut v) = edges[i];
    let (mut x, mut y) = edges[j];
    if flip_i {
        std::mem::swap(&mut u, &mut v);
    }
    if flip_j {
        std::mem::swap(&mut x, &mut y);
    }
    if u == x || u == y || v == x || v == y {
        return false;
    }
    edges[i] = (u.min(x), u.max(x));
    edges[j] = (v.min(y), v.max(y));
    true
}

/// True when no pair of edges has four distinct endpoints, so no swap can ever
/// succeed (stars, triangles and their multigraph variants).
pub fn is_frozen(g: &Graph) -> bool {
    let edges = g.edges();
    for i in 0..edges.len() {
        let (u, v) = edges[i];
        for &(x, y) in &edges[i + 1..] {
            if u != x && u != y && v != x && v != y {
                return false;
            }
        }
    }
    true
}

/// Produces `N_δ`: exactly `spec.swap_count` successful swaps on a copy of `g`.
///
/// Each attempt draws an ordered pair of distinct edges uniformly and two
/// orientation coins. Rejected attempts are resampled.
pub fn perturb(g: &Graph, spec: &PerturbationSpec, seed: u64) -> Result<(Graph, SwapOutcome)> {
    let mut edges = g.edges().to_vec();
    let outcome = perturb_edges(&mut edges, spec.swap_count, seed)?;
    Ok((Graph::build(g.vertex_count(), edges), outcome))
}

/// In-place variant of [`perturb`] over an edge list.
pub fn perturb_edges(edges: &mut [(VertexId, VertexId)], swap_count: u64, seed: u64) -> Result<SwapOutcome> {
    let mut outcome = SwapOutcome::default();
    if swap_count == 0 {
        return Ok(outcome);
    }
    let m = edges.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "edge swaps need at least 2 edges, graph has {m}"
        )));
    }
    let mut rng = seed::rng(seed);
    let budget = swap_count.saturating_mul(ATTEMPTS_PER_SWAP);
    while outcome.succeeded < swap_count {
        if outcome.attempted >= budget {
            return Err(Error::MixingFailure {
                requested: swap_count,
                succeeded: outcome.succeeded,
                attempted: outcome.attempted,
            });
        }
        outcome.attempted += 1;
        let i = rng.gen_range(0..m);
        let mut j = rng.gen_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let flips = (rng.gen::<bool>(), rng.gen::<bool>());
        if try_swap(edges, i, j, flips) {
            outcome.succeeded += 1;
        } else {
            outcome.rejected_shared_vertex += 1;
        }
    }
    Ok(outcome)
}

/// One spec per fraction, plus the infinite level when requested.
pub fn delta_grid(m: usize, fractions: &[f64], include_infinity: bool, q: u32) -> Result<Vec<PerturbationSpec>> {
    let mut grid = Vec::with_capacity(fractions.len() + 1);
    for &f in fractions {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!(
                "perturbation fraction {f} outside [0, 1]"
            )));
        }
        grid.push(PerturbationSpec::new(Delta::Fraction(f), m, q)?);
    }
    if include_infinity {
        grid.push(PerturbationSpec::infinity(m, q)?);
    }
    Ok(grid)
}

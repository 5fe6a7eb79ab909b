//! The subgraph-generating random walk and labeled train/test datasets.
//!
//! The walk starts at a uniformly random vertex of nonzero degree and moves
//! along a uniformly chosen incident edge (parallel edges count separately)
//! until it has visited `κ` distinct vertices. The induced subgraph on the
//! visited vertices, numbered in first-visit order, is the sample.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{induced_with_positions, Graph, VertexId};
use crate::seed;

/// Walk steps allowed per target vertex before the walk restarts.
pub const STEPS_PER_VERTEX: usize = 100;

/// Consecutive restarts tolerated before giving up.
pub const MAX_RESTARTS: usize = 1_000;

/// Class of a sample: `+1` for the original network, `−1` for its perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Original,
    Perturbed,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Original => 1,
            Label::Perturbed => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(Label::Original),
            -1 => Ok(Label::Perturbed),
            other => Err(Error::Format(format!("label sign {other}"))),
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Label::Original => 0,
            Label::Perturbed => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphSample {
    /// Source vertex ids in first-visit order.
    pub vertices: Vec<VertexId>,
    /// Induced subgraph; vertex `i` is `vertices[i]`.
    pub subgraph: Graph,
    pub label: Label,
    /// Total walk steps, including restarted walks.
    pub walk_steps: u64,
}

impl SubgraphSample {
    pub fn kappa(&self) -> usize {
        self.vertices.len()
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// Random walker bound to one graph.
///
/// Precomputes the start-vertex support so repeated sampling costs only the walk.
pub struct Walker<'g> {
    graph: &'g Graph,
    starts: Vec<VertexId>,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let starts = (0..graph.vertex_count() as VertexId)
            .filter(|&v| graph.degree(v) > 0)
            .collect();
        Self { graph, starts }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    fn check_kappa(&self, kappa: usize) -> Result<()> {
        if kappa < 2 || kappa > self.graph.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "kappa must satisfy 2 ≤ κ ≤ n = {}, got {kappa}",
                self.graph.vertex_count()
            )));
        }
        if self.starts.is_empty() {
            return Err(Error::NoComponent { kappa, restarts: 0 });
        }
        Ok(())
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, kappa: usize, rng: &mut R) -> Result<SubgraphSample> {
        self.check_kappa(kappa)?;
        let g = self.graph;
        let step_cap = STEPS_PER_VERTEX * kappa;
        let mut total_steps = 0u64;
        let mut visited: Vec<VertexId> = Vec::with_capacity(kappa);
        let mut position: HashMap<VertexId, VertexId> = HashMap::with_capacity(kappa * 2);

        for _ in 0..MAX_RESTARTS {
            visited.clear();
            position.clear();
            let mut current = self.starts[rng.gen_range(0..self.starts.len())];
            visited.push(current);
            position.insert(current, 0);
            let mut steps = 0;
            while visited.len() < kappa && steps < step_cap {
                let nbrs = g.neighbors(current);
                current = nbrs[rng.gen_range(0..nbrs.len())];
                steps += 1;
                if let std::collections::hash_map::Entry::Vacant(e) = position.entry(current) {
                    e.insert(visited.len() as VertexId);
                    visited.push(current);
                }
            }
            total_steps += steps as u64;
            if visited.len() == kappa {
                let subgraph = induced_with_positions(g, &visited, &position);
                return Ok(SubgraphSample {
                    vertices: visited,
                    subgraph,
                    label: Label::Original,
                    walk_steps: total_steps,
                });
            }
        }
        Err(Error::NoComponent {
            kappa,
            restarts: MAX_RESTARTS,
        })
    }

    pub fn sample(&self, kappa: usize, seed: u64) -> Result<SubgraphSample> {
        self.sample_with(kappa, &mut seed::rng(seed))
    }
}

/// Draws one `κ`-vertex walk-induced subgraph of `g`.
pub fn sample_subgraph(g: &Graph, kappa: usize, seed: u64) -> Result<SubgraphSample> {
    Walker::new(g).sample(kappa, seed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub original: usize,
    pub perturbed: usize,
}

impl ClassCounts {
    pub fn of(samples: &[SubgraphSample]) -> Self {
        let original = samples.iter().filter(|s| s.label == Label::Original).count();
        Self {
            original,
            perturbed: samples.len() - original,
        }
    }

    pub fn total(&self) -> usize {
        self.original + self.perturbed
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    pub train: Vec<SubgraphSample>,
    pub test: Vec<SubgraphSample>,
    pub kappa: usize,
    pub train_counts: ClassCounts,
    pub test_counts: ClassCounts,
}

/// Seed of sample `index` of class `label`.
pub fn sample_seed(seed: u64, label: Label, index: usize) -> u64 {
    seed::derive_seed(seed, "sample", &[label.index() as u64, index as u64])
}

fn draw_class(
    walker: &Walker<'_>,
    kappa: usize,
    count: usize,
    label: Label,
    seed: u64,
    name: &'static str,
) -> Result<Vec<SubgraphSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            walker
                .sample(kappa, sample_seed(seed, label, i))
                .map(|s| s.with_label(label))
                .map_err(|e| Error::Sampling {
                    graph: name,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Draws `samples_per_class` subgraphs from each graph and splits each class
/// into train (first `⌊train_fraction · count⌋`) and test.
///
/// Samples are drawn in parallel, each from its own derived seed, so the result
/// is identical to a sequential run.
pub fn build_dataset(
    g0: &Graph,
    gd: &Graph,
    kappa: usize,
    samples_per_class: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside [0, 1]"
        )));
    }
    let original = draw_class(
        &Walker::new(g0),
        kappa,
        samples_per_class,
        Label::Original,
        seed,
        "original",
    )?;
    let perturbed = draw_class(
        &Walker::new(gd),
        kappa,
        samples_per_class,
        Label::Perturbed,
        seed,
        "perturbed",
    )?;
    let cut = (train_fraction * samples_per_class as f64).floor() as usize;
    let cut = cut.min(samples_per_class);

    let mut train = Vec::with_capacity(2 * cut);
    let mut test = Vec::with_capacity(2 * (samples_per_class - cut));
    for class in [original, perturbed] {
        let mut class = class;
        let rest = class.split_off(cut);
        train.extend(class);
        test.extend(rest);
    }
    Ok(LabeledDataset {
        train_counts: ClassCounts::of(&train),
        test_counts: ClassCounts::of(&test),
        train,
        test,
        kappa,
    })
}

//! Histogram Bayes classifier over clustering `C` and neighbor degree `r`.

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::sampler::Label;

/// A scalar feature usable by the histogram classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    /// Clustering coefficient, binned uniformly on `[0, 1]`.
    Clustering,
    /// Mean neighbor degree, binned at training quantiles.
    NeighborDegree,
}

impl Feature {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Feature::Clustering => 0,
            Feature::NeighborDegree => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Feature::Clustering),
            1 => Ok(Feature::NeighborDegree),
            t => Err(Error::Format(format!("feature tag {t}"))),
        }
    }

    fn value(self, f: &FeatureVector) -> f64 {
        match self {
            Feature::Clustering => f.clustering_c,
            Feature::NeighborDegree => f.neighbor_degree_r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramBayes {
    pub features: Vec<Feature>,
    /// Interior bin boundaries per feature; a value `x` falls in bin
    /// `#{e : e ≤ x}`.
    pub edges: Vec<Vec<f64>>,
    /// `[original, perturbed]` training counts per cell, row-major over features.
    pub counts: Vec<[u64; 2]>,
    pub class_totals: [u64; 2],
}

fn uniform_edges(bins: usize) -> Vec<f64> {
    (1..bins).map(|k| k as f64 / bins as f64).collect()
}

fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins).map(|k| sorted[k * sorted.len() / bins]).collect();
    edges.dedup();
    edges
}

impl HistogramBayes {
    pub fn train(features: &[Feature], data: &[(FeatureVector, Label)], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
        }
        if features.is_empty() {
            return Err(Error::InvalidArgument("histogram classifier needs a feature".into()));
        }
        let mut class_totals = [0u64; 2];
        for (_, l) in data {
            class_totals[l.index()] += 1;
        }
        if class_totals[0] == 0 {
            return Err(Error::EmptyClass("original"));
        }
        if class_totals[1] == 0 {
            return Err(Error::EmptyClass("perturbed"));
        }
        let edges: Vec<Vec<f64>> = features
            .iter()
            .map(|&feat| match feat {
                Feature::Clustering => uniform_edges(bins),
                Feature::NeighborDegree => {
                    let vals: Vec<f64> = data.iter().map(|(f, _)| feat.value(f)).collect();
                    quantile_edges(&vals, bins)
                }
            })
            .collect();
        let cells: usize = edges.iter().map(|e| e.len() + 1).product();
        let mut model = Self {
            features: features.to_vec(),
            edges,
            counts: vec![[0; 2]; cells],
            class_totals,
        };
        for (f, l) in data {
            let c = model.cell(f);
            model.counts[c][l.index()] += 1;
        }
        Ok(model)
    }

    fn cell(&self, f: &FeatureVector) -> usize {
        self.features.iter().zip(&self.edges).fold(0, |acc, (feat, edges)| {
            let x = feat.value(f);
            acc * (edges.len() + 1) + edges.partition_point(|&e| e <= x)
        })
    }

    /// Majority class of the cell after normalizing by class size; empty or
    /// tied cells answer [`Label::Original`].
    pub fn predict(&self, f: &FeatureVector) -> Label {
        let [a, b] = self.counts[self.cell(f)];
        // compare a / n0 against b / n1 exactly
        let lhs = u128::from(a) * u128::from(self.class_totals[1]);
        let rhs = u128::from(b) * u128::from(self.class_totals[0]);
        if rhs > lhs {
            Label::Perturbed
        } else {
            Label::Original
        }
    }
}

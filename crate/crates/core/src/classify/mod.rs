//! Classifiers that tell original subgraphs (`+1`) from perturbed ones (`−1`),
//! and the repeated train/test accuracy estimate `Δ̂(κ, δ)`.
//!
//! Any trained classifier's test accuracy lower-bounds the Bayes-optimal
//! accuracy of the two subgraph distributions.

mod bayes;
mod logistic;
mod mlp;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use bayes::{Feature, HistogramBayes};
pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{ImageMlp, MlpParams};

use crate::error::{Error, Result};
use crate::features::{feature_vector, signature_image, FeatureVector};
use crate::graph::{is_connected, Graph};
use crate::perturb::{perturb, PerturbationSpec};
use crate::sampler::{build_dataset, Label, SubgraphSample};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    /// Histogram Bayes on the clustering coefficient alone.
    BayesC,
    /// Histogram Bayes on mean neighbor degree alone.
    BayesR,
    /// Histogram Bayes on the joint `(C, r)` cells.
    JointBayes,
    Logistic,
    ImageMlp,
    Connectivity,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::BayesC,
        ClassifierKind::BayesR,
        ClassifierKind::JointBayes,
        ClassifierKind::Logistic,
        ClassifierKind::ImageMlp,
        ClassifierKind::Connectivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::BayesC => "bayes_c",
            ClassifierKind::BayesR => "bayes_r",
            ClassifierKind::JointBayes => "joint_feature_bayes",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::ImageMlp => "image_mlp",
            ClassifierKind::Connectivity => "connectivity",
        }
    }

    fn tag(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u8
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bayes_c" | "single_feature_bayes" | "single_feature_bayes_c" => ClassifierKind::BayesC,
            "bayes_r" | "single_feature_bayes_r" => ClassifierKind::BayesR,
            "joint_feature_bayes" | "joint_bayes" => ClassifierKind::JointBayes,
            "logistic" => ClassifierKind::Logistic,
            "image_mlp" | "mlp" => ClassifierKind::ImageMlp,
            "connectivity" => ClassifierKind::Connectivity,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown classifier {other:?}; expected one of {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                )))
            }
        })
    }
}

/// Hyperparameters for every trainable kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub bins: usize,
    pub logistic: LogisticParams,
    pub mlp: MlpParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bins: 20,
            logistic: LogisticParams::default(),
            mlp: MlpParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Histogram(HistogramBayes),
    Logistic(LogisticModel),
    ImageMlp(ImageMlp),
    Connectivity,
}

fn feature_rows(samples: &[SubgraphSample]) -> Vec<(FeatureVector, Label)> {
    samples.par_iter().map(|s| (feature_vector(s), s.label)).collect()
}

impl Classifier {
    pub fn train(kind: ClassifierKind, train: &[SubgraphSample], cfg: &TrainConfig, seed: u64) -> Result<Self> {
        let histogram = |features: &[Feature]| -> Result<Classifier> {
            Ok(Classifier::Histogram(HistogramBayes::train(
                features,
                &feature_rows(train),
                cfg.bins,
            )?))
        };
        match kind {
            ClassifierKind::BayesC => histogram(&[Feature::Clustering]),
            ClassifierKind::BayesR => histogram(&[Feature::NeighborDegree]),
            ClassifierKind::JointBayes => histogram(&[Feature::Clustering, Feature::NeighborDegree]),
            ClassifierKind::Logistic => {
                let rows: Vec<(Vec<f64>, Label)> = feature_rows(train)
                    .into_iter()
                    .map(|(f, l)| (f.to_array().to_vec(), l))
                    .collect();
                Ok(Classifier::Logistic(LogisticModel::train(&rows, &cfg.logistic)?))
            }
            ClassifierKind::ImageMlp => {
                let rows = train
                    .par_iter()
                    .map(|s| Ok((signature_image(s)?, s.label)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Classifier::ImageMlp(ImageMlp::train(&rows, &cfg.mlp, seed)?))
            }
            ClassifierKind::Connectivity => Ok(Classifier::Connectivity),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Histogram(h) => match h.features.as_slice() {
                [Feature::Clustering] => ClassifierKind::BayesC,
                [Feature::NeighborDegree] => ClassifierKind::BayesR,
                _ => ClassifierKind::JointBayes,
            },
            Classifier::Logistic(_) => ClassifierKind::Logistic,
            Classifier::ImageMlp(_) => ClassifierKind::ImageMlp,
            Classifier::Connectivity => ClassifierKind::Connectivity,
        }
    }

    pub fn predict(&self, sample: &SubgraphSample) -> Result<Label> {
        Ok(match self {
            Classifier::Histogram(h) => h.predict(&feature_vector(sample)),
            Classifier::Logistic(m) => m.predict(&feature_vector(sample).to_array()),
            Classifier::ImageMlp(m) => m.predict(&signature_image(sample)?)?,
            Classifier::Connectivity => {
                if is_connected(&sample.subgraph) {
                    Label::Original
                } else {
                    Label::Perturbed
                }
            }
        })
    }

    /// Versioned binary record: `ISCL`, version, kind tag, parameter arrays.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(b"ISCL");
        w.u64(u64::from(CLASSIFIER_VERSION));
        w.0.push(self.kind().tag());
        match self {
            Classifier::Histogram(h) => {
                w.u64(h.features.len() as u64);
                for (f, e) in h.features.iter().zip(&h.edges) {
                    w.0.push(f.tag());
                    w.f64s(e);
                }
                w.u64(h.counts.len() as u64);
                for c in &h.counts {
                    w.u64(c[0]);
                    w.u64(c[1]);
                }
                w.u64(h.class_totals[0]);
                w.u64(h.class_totals[1]);
            }
            Classifier::Logistic(m) => {
                w.u64(m.kept.len() as u64);
                for &k in &m.kept {
                    w.u64(k as u64);
                }
                w.f64s(&m.mean);
                w.f64s(&m.std);
                w.f64s(&m.weights);
                w.f64s(&[m.bias]);
            }
            Classifier::ImageMlp(m) => {
                w.u64(m.kappa as u64);
                w.u64(m.hidden as u64);
                w.f64s(&m.w1);
                w.f64s(&m.b1);
                w.f64s(&m.w2);
                w.f64s(&[m.b2]);
            }
            Classifier::Connectivity => {}
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(bytes);
        if r.take(4)? != b"ISCL" {
            return Err(Error::Format("not a classifier record".into()));
        }
        let version = r.u64()?;
        if version != u64::from(CLASSIFIER_VERSION) {
            return Err(Error::Format(format!("unsupported classifier version {version}")));
        }
        let tag = r.take(1)?[0];
        let kind = *ClassifierKind::ALL
            .get(tag as usize)
            .ok_or_else(|| Error::Format(format!("classifier tag {tag}")))?;
        let c = match kind {
            ClassifierKind::BayesC | ClassifierKind::BayesR | ClassifierKind::JointBayes => {
                let nf = r.u64()?;
                let mut features = Vec::new();
                let mut edges = Vec::new();
                for _ in 0..nf {
                    features.push(Feature::from_tag(r.take(1)?[0])?);
                    edges.push(r.f64s()?);
                }
                let nc = r.u64()?;
                let counts = (0..nc).map(|_| Ok([r.u64()?, r.u64()?])).collect::<Result<Vec<_>>>()?;
                let class_totals = [r.u64()?, r.u64()?];
                Classifier::Histogram(HistogramBayes {
                    features,
                    edges,
                    counts,
                    class_totals,
                })
            }
            ClassifierKind::Logistic => {
                let nk = r.u64()?;
                let kept = (0..nk).map(|_| Ok(r.u64()? as usize)).collect::<Result<Vec<_>>>()?;
                Classifier::Logistic(LogisticModel {
                    kept,
                    mean: r.f64s()?,
                    std: r.f64s()?,
                    weights: r.f64s()?,
                    bias: r.scalar()?,
                })
            }
            ClassifierKind::ImageMlp => Classifier::ImageMlp(ImageMlp {
                kappa: r.u64()? as usize,
                hidden: r.u64()? as usize,
                w1: r.f64s()?,
                b1: r.f64s()?,
                w2: r.f64s()?,
                b2: r.scalar()?,
            }),
            ClassifierKind::Connectivity => Classifier::Connectivity,
        };
        if !r.0.is_empty() {
            return Err(Error::Format("trailing bytes after classifier record".into()));
        }
        Ok(c)
    }
}

const CLASSIFIER_VERSION: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }

    fn f64s(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        for x in xs {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Format("truncated classifier record".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > self.0.len() / 8 {
            return Err(Error::Format("truncated classifier record".into()));
        }
        (0..n)
            .map(|_| Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap())))
            .collect()
    }

    fn scalar(&mut self) -> Result<f64> {
        match self.f64s()?.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Format("expected a scalar".into())),
        }
    }
}

/// Fraction of `test` the classifier labels correctly.
pub fn evaluate(c: &Classifier, test: &[SubgraphSample]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let correct = test
        .par_iter()
        .map(|s| Ok(usize::from(c.predict(s)? == s.label)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / test.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConfig {
    pub classifier: ClassifierKind,
    pub samples_per_class: usize,
    pub train_fraction: f64,
    pub repeats: usize,
    pub train: TrainConfig,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::JointBayes,
            samples_per_class: 10_000,
            train_fraction: 0.5,
            repeats: 10,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyEstimate {
    pub kappa: usize,
    pub delta: PerturbationSpec,
    pub accuracy_mean: f64,
    /// Sample standard deviation across repeats (0 for a single repeat).
    pub accuracy_std: f64,
    pub repeats: usize,
    /// Test samples per repeat.
    pub test_size: usize,
    pub classifier: ClassifierKind,
    pub per_repeat: Vec<f64>,
}

impl AccuracyEstimate {
    pub fn from_repeats(
        kappa: usize,
        delta: PerturbationSpec,
        classifier: ClassifierKind,
        test_size: usize,
        per_repeat: Vec<f64>,
    ) -> Self {
        let n = per_repeat.len() as f64;
        let mean = per_repeat.iter().sum::<f64>() / n;
        let std = if per_repeat.len() > 1 {
            (per_repeat.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            kappa,
            delta,
            accuracy_mean: mean,
            accuracy_std: std,
            repeats: per_repeat.len(),
            test_size,
            classifier,
            per_repeat,
        }
    }
}

/// The perturbed copy `N_δ` used by `repeat`; independent of `κ` so every
/// scale in a repeat is measured against the same randomized network.
pub fn perturbed_copy(g: &Graph, spec: &PerturbationSpec, seed: u64, repeat: usize) -> Result<Graph> {
    Ok(perturb(g, spec, perturbation_seed(seed, spec, repeat))?.0)
}

/// Seed of the swap sequence behind [`perturbed_copy`].
pub fn perturbation_seed(seed: u64, spec: &PerturbationSpec, repeat: usize) -> u64 {
    derive_seed(seed, "perturb", &[spec.seed_key(), repeat as u64])
}

/// Runs the full estimate: per repeat, perturb, sample, train, test.
pub fn estimate_delta(
    g: &Graph,
    kappa: usize,
    spec: &PerturbationSpec,
    config: &EstimateConfig,
    seed: u64,
) -> Result<AccuracyEstimate> {
    let copies = (0..config.repeats)
        .into_par_iter()
        .map(|r| perturbed_copy(g, spec, seed, r))
        .collect::<Result<Vec<_>>>()?;
    estimate_with_copies(g, &copies, kappa, spec, config, seed)
}

/// [`estimate_delta`] with the perturbed copies supplied, one per repeat.
pub fn estimate_with_copies(
    g: &Graph,
    copies: &[Graph],
    kappa: usize,
    spec: &PerturbationSpec,
    config: &EstimateConfig,
    seed: u64,
) -> Result<AccuracyEstimate> {
    if config.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if copies.len() != config.repeats {
        return Err(Error::InvalidArgument(format!(
            "{} perturbed copies for {} repeats",
            copies.len(),
            config.repeats
        )));
    }
    let runs = copies
        .par_iter()
        .enumerate()
        .map(|(r, gd)| {
            let parts = [kappa as u64, spec.seed_key(), r as u64];
            let data = build_dataset(
                g,
                gd,
                kappa,
                config.samples_per_class,
                config.train_fraction,
                derive_seed(seed, "dataset", &parts),
            )?;
            let c = Classifier::train(
                config.classifier,
                &data.train,
                &config.train,
                derive_seed(seed, "train", &parts),
            )?;
            Ok((evaluate(&c, &data.test)?, data.test.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let test_size = runs[0].1;
    Ok(AccuracyEstimate::from_repeats(
        kappa,
        *spec,
        config.classifier,
        test_size,
        runs.into_iter().map(|(a, _)| a).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::sampler::build_dataset;

    fn labeled(g: Graph, label: Label) -> SubgraphSample {
        SubgraphSample {
            vertices: (0..g.vertex_count() as u32).collect(),
            subgraph: g,
            label,
            walk_steps: 0,
        }
    }

    fn clique_vs_path(k: usize, each: usize) -> Vec<SubgraphSample> {
        (0..each)
            .map(|_| labeled(generators::complete(k), Label::Original))
            .chain((0..each).map(|_| labeled(generators::path(k), Label::Perturbed)))
            .collect()
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert_eq!(
            "single_feature_bayes".parse::<ClassifierKind>().unwrap(),
            ClassifierKind::BayesC
        );
        assert!("forest".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn separable_classes_are_learned_by_every_kind() {
        let data = clique_vs_path(6, 40);
        for kind in ClassifierKind::ALL {
            let c = Classifier::train(kind, &data, &TrainConfig::default(), 1).unwrap();
            let acc = evaluate(&c, &data).unwrap();
            if kind == ClassifierKind::Connectivity {
                // both shapes are connected
                assert_eq!(acc, 0.5);
            } else {
                assert!(acc >= 0.99, "{kind}: {acc}");
            }
        }
    }

    #[test]
    fn connectivity_classifier_examples() {
        let c = Classifier::Connectivity;
        assert_eq!(
            c.predict(&labeled(generators::path(4), Label::Original)).unwrap(),
            Label::Original
        );
        let two_edges = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(
            c.predict(&labeled(two_edges, Label::Original)).unwrap(),
            Label::Perturbed
        );
    }

    #[test]
    fn evaluate_examples_and_errors() {
        let data = clique_vs_path(5, 10);
        assert_eq!(evaluate(&Classifier::Connectivity, &data).unwrap(), 0.5);
        assert!(evaluate(&Classifier::Connectivity, &[]).is_err());
        let mlp = Classifier::train(ClassifierKind::ImageMlp, &data, &TrainConfig::default(), 0).unwrap();
        let wrong = clique_vs_path(6, 1);
        assert!(matches!(evaluate(&mlp, &wrong), Err(Error::KappaMismatch { .. })));
    }

    #[test]
    fn identical_distributions_give_chance() {
        let g = generators::erdos_renyi(200, 0.03, 8);
        let d = build_dataset(&g, &g, 6, 2000, 0.5, 5).unwrap();
        for kind in [ClassifierKind::JointBayes, ClassifierKind::Logistic] {
            let c = Classifier::train(kind, &d.train, &TrainConfig::default(), 0).unwrap();
            let acc = evaluate(&c, &d.test).unwrap();
            assert!((acc - 0.5).abs() < 0.04, "{kind}: {acc}");
        }
    }

    #[test]
    fn serialization_round_trips() {
        let data = clique_vs_path(5, 20);
        for kind in ClassifierKind::ALL {
            let c = Classifier::train(kind, &data, &TrainConfig::default(), 3).unwrap();
            let bytes = c.to_bytes();
            assert_eq!(Classifier::from_bytes(&bytes).unwrap(), c);
            assert!(Classifier::from_bytes(&bytes[..bytes.len() - 1]).is_err() || kind == ClassifierKind::Connectivity);
        }
        assert!(Classifier::from_bytes(b"nope").is_err());
    }

    #[test]
    fn training_ignores_the_test_split() {
        let g = generators::watts_strogatz(60, 4, 0.1, 1).unwrap();
        let gd = perturbed_copy(&g, &PerturbationSpec::infinity(g.edge_count(), 20).unwrap(), 1, 0).unwrap();
        let d = build_dataset(&g, &gd, 5, 200, 0.5, 2).unwrap();
        for kind in ClassifierKind::ALL {
            let before = Classifier::train(kind, &d.train, &TrainConfig::default(), 4)
                .unwrap()
                .to_bytes();
            let mut corrupted = d.clone();
            for s in &mut corrupted.test {
                s.label = match s.label {
                    Label::Original => Label::Perturbed,
                    Label::Perturbed => Label::Original,
                };
                s.subgraph = generators::complete(5);
            }
            let after = Classifier::train(kind, &corrupted.train, &TrainConfig::default(), 4)
                .unwrap()
                .to_bytes();
            assert_eq!(before, after, "{kind}");
        }
    }

    #[test]
    fn estimate_is_deterministic_and_chance_at_zero_swaps() {
        let g = generators::erdos_renyi(150, 0.05, 3);
        let cfg = EstimateConfig {
            samples_per_class: 1000,
            repeats: 3,
            ..EstimateConfig::default()
        };
        let spec = PerturbationSpec::none();
        let a = estimate_delta(&g, 5, &spec, &cfg, 9).unwrap();
        let b = estimate_delta(&g, 5, &spec, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.repeats, 3);
        assert_eq!(a.test_size, 1000);
        assert!((a.accuracy_mean - 0.5).abs() < 0.03, "{}", a.accuracy_mean);
    }

    #[test]
    fn sample_std_over_repeats() {
        let e = AccuracyEstimate::from_repeats(4, PerturbationSpec::none(), ClassifierKind::BayesC, 10, vec![0.5, 0.7]);
        assert!((e.accuracy_mean - 0.6).abs() < 1e-12);
        assert!((e.accuracy_std - 0.02f64.sqrt()).abs() < 1e-12);
        let one = AccuracyEstimate::from_repeats(4, PerturbationSpec::none(), ClassifierKind::BayesC, 10, vec![0.5]);
        assert_eq!(one.accuracy_std, 0.0);
    }
}

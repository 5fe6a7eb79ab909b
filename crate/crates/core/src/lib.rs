//! Intrinsic scale of networks.
//!
//! A network has structure at scale `κ` when `κ`-vertex subgraphs collected by a
//! random walk on it can be told apart from the subgraphs of a degree-preserving
//! randomized copy. This crate provides every piece of that measurement:
//!
//! * [`graph`]: the multigraph model, edge-list ingestion and traversal helpers.
//! * [`perturb`]: degree-preserving edge swaps producing `N_δ`.
//! * [`sampler`]: the random walker and labeled train/test datasets.
//! * [`features`]: signature images and classical subgraph features.
//! * [`classify`]: classifiers and the accuracy estimator `Δ̂(κ, δ)`.
//! * [`scale`]: grid scans, intrinsic scale `κ*`, robustness, resilience and
//!   auxiliary scale measures.
//! * [`oracle`]: independent ground truth (empirical Bayes accuracy, the tree
//!   connectivity experiment).

pub mod cache;
pub mod classify;
pub mod error;
pub mod features;
pub mod generators;
pub mod graph;
pub mod oracle;
pub mod perturb;
pub mod sampler;
pub mod scale;
pub mod seed;

pub use classify::{estimate_delta, evaluate, AccuracyEstimate, Classifier, ClassifierKind, EstimateConfig};
pub use error::{Error, Result};
pub use features::{FeatureVector, MeanSignature, SignatureImage};
pub use graph::{DegreeStats, Graph};
pub use perturb::{Delta, PerturbationSpec, SwapOutcome};
pub use sampler::{Label, LabeledDataset, SubgraphSample};
pub use scale::{KappaStar, ScaleReport, ScanResult};

//! On-disk caches: parsed input graphs, perturbed copies and scan cells, all
//! keyed by content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use iscale_core::cache::{content_hash, graph_hash, load_graph, save_graph, write_atomic};
use iscale_core::classify::{AccuracyEstimate, EstimateConfig};
use iscale_core::graph::{parse_edge_list, ParseOptions, ParsedGraph};
use iscale_core::perturb::PerturbationSpec;
use iscale_core::scale::CellStore;
use iscale_core::{Error, Graph, Result};

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Parses the edge list once and reuses the binary copy afterwards.
    pub fn input_graph(&self, path: &Path, dedupe: bool) -> anyhow::Result<Graph> {
        let bytes = fs::read(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let key = content_hash(&[&bytes[..], &[u8::from(dedupe)]].concat());
        let cached = self.root.join("graphs").join(format!("{key}.isgr"));
        if let Ok(g) = load_graph(&cached) {
            log::info!("input graph cache hit {}", cached.display());
            return Ok(g);
        }
        let ParsedGraph {
            graph,
            raw_edge_count,
            self_loops_dropped,
            duplicates_collapsed,
            ..
        } = parse_edge_list(&bytes[..], ParseOptions { dedupe })
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        log::info!(
            "parsed {}: n = {}, m = {} ({raw_edge_count} lines, {self_loops_dropped} self-loops dropped, {duplicates_collapsed} duplicates collapsed)",
            path.display(),
            graph.vertex_count(),
            graph.edge_count()
        );
        save_graph(&cached, &graph)?;
        Ok(graph)
    }

    pub fn perturbed_path(&self, g: &Graph, spec: &PerturbationSpec, seed: u64, repeat: usize) -> PathBuf {
        let key = content_hash(
            format!(
                "{}|{}|{}|{}|{seed}|{repeat}",
                graph_hash(g),
                spec.delta.code(),
                spec.swap_count,
                spec.infinity_multiplier
            )
            .as_bytes(),
        );
        self.root.join("perturbed").join(format!("{key}.isgr"))
    }

    pub fn cell_store(&self, g: &Graph, config: &EstimateConfig, seed: u64) -> FileCellStore {
        let key = content_hash(format!("{}|{}|{seed}", graph_hash(g), config_key(config)).as_bytes());
        FileCellStore {
            dir: self.root.join("cells").join(key),
        }
    }
}

fn config_key(c: &EstimateConfig) -> String {
    format!(
        "{}|{}|{}|{}|{:?}",
        c.classifier, c.samples_per_class, c.train_fraction, c.repeats, c.train
    )
}

/// One small text file per finished cell.
pub struct FileCellStore {
    dir: PathBuf,
}

impl FileCellStore {
    fn path(&self, kappa: usize, spec: &PerturbationSpec) -> PathBuf {
        self.dir.join(format!(
            "k{kappa}_d{}_s{}_q{}.cell",
            spec.delta.code(),
            spec.swap_count,
            spec.infinity_multiplier
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl CellStore for FileCellStore {
    fn load(&self, kappa: usize, spec: &PerturbationSpec) -> Option<AccuracyEstimate> {
        let text = fs::read_to_string(self.path(kappa, spec)).ok()?;
        let mut classifier = None;
        let mut test_size = None;
        let mut per_repeat = None;
        for line in text.lines() {
            let (k, v) = line.split_once('=')?;
            match k {
                "classifier" => classifier = v.parse().ok(),
                "test_size" => test_size = v.parse().ok(),
                "per_repeat" => {
                    per_repeat = v.split(',').map(|x| x.parse::<f64>().ok()).collect::<Option<Vec<_>>>();
                }
                _ => {}
            }
        }
        let per_repeat = per_repeat.filter(|p| !p.is_empty())?;
        Some(AccuracyEstimate::from_repeats(
            kappa,
            *spec,
            classifier?,
            test_size?,
            per_repeat,
        ))
    }

    fn store(&self, e: &AccuracyEstimate) -> Result<()> {
        let values: Vec<String> = e.per_repeat.iter().map(|a| a.to_string()).collect();
        let text = format!(
            "classifier={}\ntest_size={}\nper_repeat={}\n",
            e.classifier,
            e.test_size,
            values.join(",")
        );
        write_atomic(&self.path(e.kappa, &e.delta), text.as_bytes()).map_err(Error::from)
    }
}

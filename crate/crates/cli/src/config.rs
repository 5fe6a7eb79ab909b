//! Run configuration: defaults, a flat `key = value` file format, and the
//! snapshot written into every output header.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use iscale_core::classify::{EstimateConfig, TrainConfig};
use iscale_core::perturb::{delta_grid, Delta, PerturbationSpec};
use iscale_core::ClassifierKind;

/// An error in the user's invocation or configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub network: Option<String>,
    pub kappa_grid: Vec<usize>,
    pub delta_grid: Vec<Delta>,
    pub taus: Vec<f64>,
    pub classifier: ClassifierKind,
    pub samples: usize,
    pub train_fraction: f64,
    pub repeats: usize,
    pub infinity_multiplier: u32,
    pub bins: usize,
    pub seed: u64,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
    pub pair_fraction: f64,
    pub bfs_sources: usize,
    pub cluster_size: Option<f64>,
    pub dedupe: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            network: None,
            kappa_grid: (4..=64).collect(),
            delta_grid: [0.1, 0.2, 0.3, 0.4, 0.5]
                .into_iter()
                .map(Delta::Fraction)
                .chain([Delta::Infinity])
                .collect(),
            taus: vec![0.7, 0.9, 0.95],
            classifier: ClassifierKind::JointBayes,
            samples: 10_000,
            train_fraction: 0.5,
            repeats: 10,
            infinity_multiplier: 20,
            bins: 20,
            seed: 0,
            cache_dir: PathBuf::from("cache"),
            out_dir: PathBuf::from("out"),
            jobs: None,
            pair_fraction: 0.1,
            bfs_sources: 10,
            cluster_size: None,
            dedupe: true,
        }
    }
}

/// `a..b` (inclusive), `a..b:step`, or a comma list.
pub fn parse_kappa_grid(text: &str) -> anyhow::Result<Vec<usize>> {
    let text = text.trim();
    let grid: Vec<usize> = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let lo: usize = parse_num(lo)?;
        let hi: usize = parse_num(hi)?;
        let step: usize = parse_num(step)?;
        if step == 0 {
            return Err(usage("κ grid step must be positive"));
        }
        (lo..=hi).step_by(step).collect()
    } else {
        text.split(',').map(parse_num).collect::<anyhow::Result<_>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!(
            "κ grid {text:?} must be nonempty and strictly increasing"
        )));
    }
    if grid[0] < 2 {
        return Err(usage("κ values must be at least 2"));
    }
    Ok(grid)
}

/// Comma list of `δ` codes such as `10%`, `0.3` or `inf`.
pub fn parse_delta_grid(text: &str) -> anyhow::Result<Vec<Delta>> {
    let grid = text
        .split(',')
        .map(|t| Delta::parse(t.trim()).map_err(|e| usage(e.to_string())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(usage("δ grid must be nonempty"));
    }
    Ok(grid)
}

pub fn parse_taus(text: &str) -> anyhow::Result<Vec<f64>> {
    let taus = text.split(',').map(parse_num).collect::<anyhow::Result<Vec<f64>>>()?;
    if let Some(t) = taus.iter().find(|&&t| !(t > 0.5 && t <= 1.0)) {
        return Err(usage(format!("threshold τ = {t} must lie in (0.5, 1]")));
    }
    Ok(taus)
}

fn parse_num<T: std::str::FromStr>(s: &str) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| usage(format!("cannot parse {:?}: {e}", s.trim())))
}

fn parse_bool(s: &str) -> anyhow::Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(usage(format!("expected a boolean, got {other:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = Some(PathBuf::from(v)),
            "network" => self.network = Some(v.to_string()),
            "kappa_grid" => self.kappa_grid = parse_kappa_grid(v)?,
            "delta_grid" => self.delta_grid = parse_delta_grid(v)?,
            "taus" => self.taus = parse_taus(v)?,
            "classifier" => self.classifier = v.parse().map_err(|e: iscale_core::Error| usage(e.to_string()))?,
            "samples" => self.samples = parse_num(v)?,
            "train_fraction" => self.train_fraction = parse_num(v)?,
            "repeats" => self.repeats = parse_num(v)?,
            "infinity_multiplier" => self.infinity_multiplier = parse_num(v)?,
            "bins" => self.bins = parse_num(v)?,
            "seed" => self.seed = parse_num(v)?,
            "cache_dir" => self.cache_dir = PathBuf::from(v),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "jobs" => self.jobs = Some(parse_num(v)?),
            "pair_fraction" => self.pair_fraction = parse_num(v)?,
            "bfs_sources" => self.bfs_sources = parse_num(v)?,
            "cluster_size" => self.cluster_size = Some(parse_num(v)?),
            "dedupe" => self.dedupe = parse_bool(v)?,
            other => return Err(usage(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text =
            fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
            .map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn apply_text(&mut self, text: &str) -> anyhow::Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| usage(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.samples == 0 {
            return Err(usage("samples per class must be positive"));
        }
        if self.repeats == 0 {
            return Err(usage("repeats must be positive"));
        }
        if !(0.0 < self.train_fraction && self.train_fraction < 1.0) {
            return Err(usage("train fraction must lie in (0, 1)"));
        }
        if self.infinity_multiplier == 0 {
            return Err(usage("infinity multiplier must be positive"));
        }
        if self.bins < 2 {
            return Err(usage("bins must be at least 2"));
        }
        if !(self.pair_fraction > 0.0 && self.pair_fraction <= 1.0) {
            return Err(usage("pair fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn estimate_config(&self) -> EstimateConfig {
        EstimateConfig {
            classifier: self.classifier,
            samples_per_class: self.samples,
            train_fraction: self.train_fraction,
            repeats: self.repeats,
            train: TrainConfig {
                bins: self.bins,
                ..TrainConfig::default()
            },
        }
    }

    pub fn specs(&self, m: usize) -> anyhow::Result<Vec<PerturbationSpec>> {
        let fractions: Vec<f64> = self
            .delta_grid
            .iter()
            .filter_map(|d| match d {
                Delta::Fraction(f) => Some(*f),
                Delta::Infinity => None,
            })
            .collect();
        let with_inf = self.delta_grid.contains(&Delta::Infinity);
        let mut specs = delta_grid(m, &fractions, with_inf, self.infinity_multiplier)?;
        // keep the user's order
        specs.sort_by_key(|s| self.delta_grid.iter().position(|d| *d == s.delta));
        Ok(specs)
    }

    pub fn network_name(&self) -> String {
        self.network.clone().unwrap_or_else(|| {
            self.input
                .as_deref()
                .and_then(Path::file_stem)
                .map_or_else(|| "network".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }

    /// `key=value` pairs describing the run, in a fixed order.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let join = |xs: Vec<String>| xs.join(",");
        let mut out = vec![
            (
                "input".to_string(),
                self.input.as_ref().map_or(String::new(), |p| p.display().to_string()),
            ),
            ("network".to_string(), self.network_name()),
            (
                "kappa_grid".to_string(),
                join(self.kappa_grid.iter().map(|k| k.to_string()).collect()),
            ),
            (
                "delta_grid".to_string(),
                join(self.delta_grid.iter().map(|d| d.code()).collect()),
            ),
            (
                "taus".to_string(),
                join(self.taus.iter().map(|t| t.to_string()).collect()),
            ),
            ("classifier".to_string(), self.classifier.to_string()),
            ("samples".to_string(), self.samples.to_string()),
            ("train_fraction".to_string(), self.train_fraction.to_string()),
            ("repeats".to_string(), self.repeats.to_string()),
            ("infinity_multiplier".to_string(), self.infinity_multiplier.to_string()),
            ("bins".to_string(), self.bins.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("pair_fraction".to_string(), self.pair_fraction.to_string()),
            ("bfs_sources".to_string(), self.bfs_sources.to_string()),
            ("dedupe".to_string(), self.dedupe.to_string()),
        ];
        if let Some(c) = self.cluster_size {
            out.push(("cluster_size".to_string(), c.to_string()));
        }
        out
    }

    pub fn snapshot_lines(&self) -> Vec<String> {
        self.snapshot().into_iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

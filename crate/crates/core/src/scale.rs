//! Grid scans over `(κ, δ)` and the scale measures read off them: intrinsic
//! scale, robustness, accuracy gap, plus resilience, path-length and diameter
//! estimates and correlations between measures.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classify::{estimate_with_copies, perturbed_copy, AccuracyEstimate, ClassifierKind, EstimateConfig};
use crate::error::{Error, Result};
use crate::graph::{bfs_distances, largest_component, Graph, VertexId};
use crate::perturb::{Delta, PerturbationSpec};
use crate::seed::{self, derive_seed};

/// Outcome of one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub enum CellOutcome {
    Done(AccuracyEstimate),
    Failed(String),
}

/// Persistent cell results, consulted before computing a cell.
pub trait CellStore: Sync {
    fn load(&self, kappa: usize, delta: &PerturbationSpec) -> Option<AccuracyEstimate>;
    fn store(&self, estimate: &AccuracyEstimate) -> Result<()>;
}

/// Store that keeps nothing between runs.
pub struct NoStore;

impl CellStore for NoStore {
    fn load(&self, _: usize, _: &PerturbationSpec) -> Option<AccuracyEstimate> {
        None
    }

    fn store(&self, _: &AccuracyEstimate) -> Result<()> {
        Ok(())
    }
}

#[derive(Default)]
pub struct MemoryStore {
    cells: Mutex<HashMap<(usize, u64), AccuracyEstimate>>,
}

impl MemoryStore {
    pub fn len(&self) -> usize {
        self.cells.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl CellStore for MemoryStore {
    fn load(&self, kappa: usize, delta: &PerturbationSpec) -> Option<AccuracyEstimate> {
        self.cells.lock().unwrap().get(&(kappa, delta.seed_key())).cloned()
    }

    fn store(&self, e: &AccuracyEstimate) -> Result<()> {
        self.cells
            .lock()
            .unwrap()
            .insert((e.kappa, e.delta.seed_key()), e.clone());
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub network: String,
    pub kappa_grid: Vec<usize>,
    pub delta_grid: Vec<PerturbationSpec>,
    pub config: EstimateConfig,
    pub seed: u64,
    /// Edge count of the scanned network.
    pub edge_count: usize,
    /// Row-major over `(κ index, δ index)`.
    pub cells: Vec<CellOutcome>,
}

impl ScanResult {
    pub fn cell(&self, kappa: usize, delta: Delta) -> Option<&CellOutcome> {
        let ki = self.kappa_grid.iter().position(|&k| k == kappa)?;
        let di = self.delta_index(delta)?;
        Some(&self.cells[ki * self.delta_grid.len() + di])
    }

    pub fn estimate(&self, kappa: usize, delta: Delta) -> Option<&AccuracyEstimate> {
        match self.cell(kappa, delta)? {
            CellOutcome::Done(e) => Some(e),
            CellOutcome::Failed(_) => None,
        }
    }

    fn delta_index(&self, delta: Delta) -> Option<usize> {
        self.delta_grid.iter().position(|s| s.delta == delta)
    }

    /// Mean accuracy per grid `κ` for one `δ`; failed cells are `None`.
    pub fn column(&self, delta: Delta) -> Result<Vec<(usize, Option<f64>)>> {
        let di = self
            .delta_index(delta)
            .ok_or_else(|| Error::InvalidArgument(format!("scan has no δ = {delta} column")))?;
        Ok(self
            .kappa_grid
            .iter()
            .enumerate()
            .map(|(ki, &k)| match &self.cells[ki * self.delta_grid.len() + di] {
                CellOutcome::Done(e) => (k, Some(e.accuracy_mean)),
                CellOutcome::Failed(_) => (k, None),
            })
            .collect())
    }

    pub fn failed_cells(&self) -> Vec<(usize, Delta, String)> {
        let nd = self.delta_grid.len();
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c {
                CellOutcome::Failed(msg) => Some((self.kappa_grid[i / nd], self.delta_grid[i % nd].delta, msg.clone())),
                CellOutcome::Done(_) => None,
            })
            .collect()
    }

    pub fn success_fraction(&self) -> f64 {
        let ok = self.cells.iter().filter(|c| matches!(c, CellOutcome::Done(_))).count();
        ok as f64 / self.cells.len().max(1) as f64
    }
}

fn check_grids(kappa_grid: &[usize], delta_grid: &[PerturbationSpec]) -> Result<()> {
    if kappa_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::InvalidArgument("scan grids must be nonempty".into()));
    }
    if kappa_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("κ grid must be strictly increasing".into()));
    }
    Ok(())
}

/// One accuracy estimate per `(κ, δ)` cell.
///
/// Cells found in `store` are reused; computed cells are written back. A cell
/// that fails is recorded and the scan moves on.
pub fn run_scan(
    g: &Graph,
    network: &str,
    kappa_grid: &[usize],
    delta_grid: &[PerturbationSpec],
    config: &EstimateConfig,
    seed: u64,
    store: &dyn CellStore,
) -> Result<ScanResult> {
    check_grids(kappa_grid, delta_grid)?;
    let nd = delta_grid.len();
    let mut cells = vec![CellOutcome::Failed("not run".into()); kappa_grid.len() * nd];
    for (di, spec) in delta_grid.iter().enumerate() {
        let cached: Vec<Option<AccuracyEstimate>> = kappa_grid.iter().map(|&k| store.load(k, spec)).collect();
        let copies = if cached.iter().all(Option::is_some) {
            Ok(Vec::new())
        } else {
            (0..config.repeats)
                .into_par_iter()
                .map(|r| perturbed_copy(g, spec, seed, r))
                .collect::<Result<Vec<_>>>()
        };
        let column: Vec<CellOutcome> = kappa_grid
            .par_iter()
            .zip(cached)
            .map(|(&kappa, hit)| {
                if let Some(e) = hit {
                    return CellOutcome::Done(e);
                }
                let copies = match &copies {
                    Ok(c) => c,
                    Err(e) => return CellOutcome::Failed(e.to_string()),
                };
                match estimate_with_copies(g, copies, kappa, spec, config, seed) {
                    Ok(e) => match store.store(&e) {
                        Ok(()) => CellOutcome::Done(e),
                        Err(err) => CellOutcome::Failed(format!("cache write: {err}")),
                    },
                    Err(err) => {
                        log::warn!("cell κ = {kappa}, δ = {} failed: {err}", spec.delta);
                        CellOutcome::Failed(err.to_string())
                    }
                }
            })
            .collect();
        for (ki, c) in column.into_iter().enumerate() {
            cells[ki * nd + di] = c;
        }
    }
    Ok(ScanResult {
        network: network.to_string(),
        kappa_grid: kappa_grid.to_vec(),
        delta_grid: delta_grid.to_vec(),
        config: *config,
        seed,
        edge_count: g.edge_count(),
        cells,
    })
}

/// `κ*` on a finite grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KappaStar {
    At(usize),
    /// No grid `κ` reaches the threshold.
    BeyondGrid,
}

impl fmt::Display for KappaStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaStar::At(k) => write!(f, "{k}"),
            KappaStar::BeyondGrid => f.write_str("*"),
        }
    }
}

/// Smallest `κ` whose accuracy reaches `tau` in a `(κ, accuracy)` column.
pub fn first_crossing(column: &[(usize, Option<f64>)], tau: f64) -> Result<KappaStar> {
    if !(tau > 0.5 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold τ must lie in (0.5, 1], got {tau}"
        )));
    }
    Ok(column
        .iter()
        .find(|(_, a)| a.is_some_and(|a| a >= tau))
        .map_or(KappaStar::BeyondGrid, |&(k, _)| KappaStar::At(k)))
}

pub fn intrinsic_scale(scan: &ScanResult, tau: f64, delta: Delta) -> Result<KappaStar> {
    first_crossing(&scan.column(delta)?, tau)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Robustness {
    Gamma(f64),
    AtOrBelowChance,
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robustness::Gamma(g) => write!(f, "{g}"),
            Robustness::AtOrBelowChance => f.write_str("at-or-below-chance"),
        }
    }
}

/// `γ = −ln(accuracy − ½)` for the accuracy at a 10% perturbation.
pub fn gamma(accuracy: f64) -> Robustness {
    if accuracy > 0.5 {
        Robustness::Gamma(-(accuracy - 0.5).ln())
    } else {
        Robustness::AtOrBelowChance
    }
}

pub const ROBUSTNESS_DELTA: Delta = Delta::Fraction(0.1);

pub fn robustness(scan: &ScanResult, kappa: usize) -> Result<Robustness> {
    let column = scan.column(ROBUSTNESS_DELTA)?;
    let (_, acc) = column
        .iter()
        .find(|(k, _)| *k == kappa)
        .ok_or_else(|| Error::InvalidArgument(format!("κ = {kappa} is not on the scan grid")))?;
    let acc = acc.ok_or_else(|| Error::Undefined(format!("cell κ = {kappa}, δ = 10% failed")))?;
    Ok(gamma(acc))
}

/// `β = ⟨d²⟩ / ⟨d⟩`.
pub fn resilience(g: &Graph) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::InvalidGraph(
            "resilience is undefined on an edgeless graph".into(),
        ));
    }
    let degrees = g.degrees();
    let sum: f64 = degrees.iter().map(|&d| d as f64).sum();
    let sq: f64 = degrees.iter().map(|&d| (d * d) as f64).sum();
    Ok(sq / sum)
}

/// `1 − max_κ Δ̂(κ, ∞)`.
pub fn accuracy_gap(scan: &ScanResult) -> Result<f64> {
    let best = scan
        .column(Delta::Infinity)?
        .iter()
        .filter_map(|&(_, a)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::Undefined("every δ = ∞ cell failed".into()));
    }
    Ok(1.0 - best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxMeasures {
    /// `2m / n` over the whole graph.
    pub avg_degree: f64,
    /// Mean shortest-path length over sampled pairs of the largest component.
    pub avg_path_length: f64,
    /// Largest eccentricity found; a lower bound on the diameter.
    pub diameter_est: u32,
    pub cluster_size: Option<f64>,
    pub pairs_sampled: u64,
    pub component_size: usize,
}

/// Path-length and diameter estimates on the largest component.
///
/// Pairs are sampled by source: `⌈pair_fraction · n⌉` distinct BFS sources,
/// each contributing its distances to every other vertex, so `pair_fraction = 1`
/// is the exact all-pairs mean. The diameter is the largest eccentricity met
/// during those searches and `bfs_sources` double-sweep runs.
pub fn aux_measures(g: &Graph, pair_fraction: f64, bfs_sources: usize, seed: u64) -> Result<AuxMeasures> {
    if !(pair_fraction > 0.0 && pair_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pair fraction must lie in (0, 1], got {pair_fraction}"
        )));
    }
    let (comp, _) = largest_component(g);
    let n = comp.vertex_count();
    if n < 2 {
        return Err(Error::Undefined("largest component has fewer than two vertices".into()));
    }
    let mut rng = seed::rng(derive_seed(seed, "aux", &[]));
    let mut vertices: Vec<VertexId> = (0..n as VertexId).collect();
    vertices.shuffle(&mut rng);
    let sources = ((pair_fraction * n as f64).ceil() as usize).clamp(1, n);

    let (dist_sum, pairs, mut diameter) = vertices[..sources]
        .par_iter()
        .map(|&s| {
            let d = bfs_distances(&comp, s);
            let (mut sum, mut max) = (0u64, 0u32);
            for x in d.into_iter().flatten() {
                sum += u64::from(x);
                max = max.max(x);
            }
            (sum, (n - 1) as u64, max)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)));

    for &start in vertices.iter().take(bfs_sources) {
        let (far, _) = farthest(&comp, start);
        let (_, ecc) = farthest(&comp, far);
        diameter = diameter.max(ecc);
    }

    Ok(AuxMeasures {
        avg_degree: 2.0 * g.edge_count() as f64 / g.vertex_count() as f64,
        avg_path_length: dist_sum as f64 / pairs as f64,
        diameter_est: diameter,
        cluster_size: None,
        pairs_sampled: pairs,
        component_size: n,
    })
}

fn farthest(g: &Graph, source: VertexId) -> (VertexId, u32) {
    bfs_distances(g, source)
        .into_iter()
        .enumerate()
        .filter_map(|(v, d)| d.map(|d| (v as VertexId, d)))
        .max_by_key(|&(v, d)| (d, std::cmp::Reverse(v)))
        .unwrap_or((source, 0))
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs two equal-length sequences of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant sequence".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Everything derived from one scan, plus optional graph-level measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub network: String,
    pub classifier: ClassifierKind,
    pub kappa_grid: Vec<usize>,
    pub deltas: Vec<Delta>,
    pub taus: Vec<f64>,
    /// `(τ, δ, κ*)` for every threshold and scanned `δ`.
    pub kappa_star: Vec<(f64, Delta, KappaStar)>,
    /// `γ(κ)` per grid `κ`, present when the scan has a 10% column.
    pub robustness_gamma: Vec<(usize, Robustness)>,
    pub resilience_beta: Option<f64>,
    pub accuracy_gap: Option<f64>,
    pub aux: Option<AuxMeasures>,
    pub correlations: Vec<(String, f64)>,
    pub failed_cells: Vec<(usize, Delta, String)>,
}

impl ScaleReport {
    pub fn from_scan(scan: &ScanResult, taus: &[f64]) -> Result<Self> {
        let deltas: Vec<Delta> = scan.delta_grid.iter().map(|s| s.delta).collect();
        let mut kappa_star = Vec::new();
        for &tau in taus {
            for &d in &deltas {
                kappa_star.push((tau, d, intrinsic_scale(scan, tau, d)?));
            }
        }
        let robustness_gamma = if deltas.contains(&ROBUSTNESS_DELTA) {
            scan.kappa_grid
                .iter()
                .filter_map(|&k| robustness(scan, k).ok().map(|r| (k, r)))
                .collect()
        } else {
            Vec::new()
        };
        let accuracy_gap = if deltas.contains(&Delta::Infinity) {
            accuracy_gap(scan).ok()
        } else {
            None
        };
        Ok(Self {
            network: scan.network.clone(),
            classifier: scan.config.classifier,
            kappa_grid: scan.kappa_grid.clone(),
            deltas,
            taus: taus.to_vec(),
            kappa_star,
            robustness_gamma,
            resilience_beta: None,
            accuracy_gap,
            aux: None,
            correlations: Vec::new(),
            failed_cells: scan.failed_cells(),
        })
    }

    /// `key=value` lines in a fixed order.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let join = |xs: Vec<String>| xs.join(",");
        let _ = writeln!(s, "network={}", self.network);
        let _ = writeln!(s, "classifier={}", self.classifier);
        let _ = writeln!(
            s,
            "kappa_grid={}",
            join(self.kappa_grid.iter().map(|k| k.to_string()).collect())
        );
        let _ = writeln!(s, "delta_grid={}", join(self.deltas.iter().map(|d| d.code()).collect()));
        let _ = writeln!(s, "taus={}", join(self.taus.iter().map(|t| t.to_string()).collect()));
        for (tau, d, k) in &self.kappa_star {
            let _ = writeln!(s, "kappa_star[tau={tau},delta={}]={k}", d.code());
        }
        for (k, r) in &self.robustness_gamma {
            let _ = writeln!(s, "robustness_gamma[kappa={k}]={r}");
        }
        let opt = |x: Option<f64>| x.map_or("na".to_string(), |v| v.to_string());
        let _ = writeln!(s, "resilience_beta={}", opt(self.resilience_beta));
        let _ = writeln!(s, "accuracy_gap={}", opt(self.accuracy_gap));
        if let Some(a) = &self.aux {
            let _ = writeln!(s, "aux.avg_degree={}", a.avg_degree);
            let _ = writeln!(s, "aux.avg_path_length={}", a.avg_path_length);
            let _ = writeln!(s, "aux.diameter_est={}", a.diameter_est);
            let _ = writeln!(s, "aux.cluster_size={}", opt(a.cluster_size));
            let _ = writeln!(s, "aux.pairs_sampled={}", a.pairs_sampled);
            let _ = writeln!(s, "aux.component_size={}", a.component_size);
        }
        for (name, r) in &self.correlations {
            let _ = writeln!(s, "correlation[{name}]={r}");
        }
        let _ = writeln!(s, "failed_cells={}", self.failed_cells.len());
        for (k, d, msg) in &self.failed_cells {
            let _ = writeln!(s, "failed[kappa={k},delta={}]={msg}", d.code());
        }
        s
    }
}

/// Intrinsic-scale table: one row per report, `τ` groups split by `δ`.
pub fn render_kappa_table(reports: &[ScaleReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut s = String::new();
    let name_w = reports.iter().map(|r| r.network.len()).max().unwrap_or(0).max(8);
    let _ = write!(s, "{:name_w$}", "κ*(τ)");
    for tau in &first.taus {
        let _ = write!(s, " ||{:^w$}", format!("τ={tau}"), w = 6 * first.deltas.len());
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:name_w$}", "");
    for _ in &first.taus {
        let _ = write!(s, " ||");
        for d in &first.deltas {
            let label = match d {
                Delta::Infinity => "∞".to_string(),
                Delta::Fraction(f) => format!("{}", f * 100.0),
            };
            let _ = write!(s, "{label:>6}");
        }
    }
    let _ = writeln!(s);
    for r in reports {
        let _ = write!(s, "{:name_w$}", r.network);
        for &tau in &first.taus {
            let _ = write!(s, " ||");
            for &d in &first.deltas {
                let cell = r
                    .kappa_star
                    .iter()
                    .find(|(t, dd, _)| *t == tau && *dd == d)
                    .map_or("-".to_string(), |(_, _, k)| k.to_string());
                let _ = write!(s, "{cell:>6}");
            }
        }
        let _ = writeln!(s);
    }
    s
}

pub const SCAN_CSV_HEADER: &str = "network,kappa,delta,repeat_count,accuracy_mean,accuracy_std,classifier,seed";

/// Scan CSV: `# key=value` config lines, the header, one row per finished
/// cell. Failed cells appear as `# failed` comment lines.
pub fn write_scan_csv(scan: &ScanResult, extra: &[(String, String)], mut w: impl Write) -> io::Result<()> {
    let c = &scan.config;
    writeln!(w, "# network={}", scan.network)?;
    writeln!(w, "# edges={}", scan.edge_count)?;
    writeln!(w, "# classifier={}", c.classifier)?;
    writeln!(w, "# samples_per_class={}", c.samples_per_class)?;
    writeln!(w, "# train_fraction={}", c.train_fraction)?;
    writeln!(w, "# repeats={}", c.repeats)?;
    writeln!(w, "# bins={}", c.train.bins)?;
    let q = scan.delta_grid.first().map_or(20, |s| s.infinity_multiplier);
    writeln!(w, "# infinity_multiplier={q}")?;
    writeln!(w, "# seed={}", scan.seed)?;
    for (k, v) in extra {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{SCAN_CSV_HEADER}")?;
    let nd = scan.delta_grid.len();
    for (i, cell) in scan.cells.iter().enumerate() {
        let kappa = scan.kappa_grid[i / nd];
        let delta = scan.delta_grid[i % nd].delta;
        match cell {
            CellOutcome::Done(e) => writeln!(
                w,
                "{},{kappa},{},{},{},{},{},{}",
                scan.network,
                delta.code(),
                e.repeats,
                e.accuracy_mean,
                e.accuracy_std,
                e.classifier,
                scan.seed
            )?,
            CellOutcome::Failed(msg) => writeln!(w, "# failed kappa={kappa} delta={} error={msg}", delta.code())?,
        }
    }
    Ok(())
}

/// Parses a scan CSV back into a [`ScanResult`]. Per-repeat values and test
/// sizes are not stored, so those fields come back empty.
pub fn read_scan_csv(r: impl BufRead) -> Result<ScanResult> {
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut rows: Vec<(usize, Delta, usize, f64, f64, ClassifierKind)> = Vec::new();
    let mut failed: Vec<(usize, Delta, String)> = Vec::new();
    let mut network = String::new();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        if let Some(rest) = line.strip_prefix("# failed ") {
            let mut kappa = None;
            let mut delta = None;
            let mut msg = String::new();
            for part in rest.splitn(3, ' ') {
                if let Some(v) = part.strip_prefix("kappa=") {
                    kappa = v.parse().ok();
                } else if let Some(v) = part.strip_prefix("delta=") {
                    delta = Delta::parse(v).ok();
                } else if let Some(v) = part.strip_prefix("error=") {
                    msg = v.to_string();
                }
            }
            match (kappa, delta) {
                (Some(k), Some(d)) => failed.push((k, d, msg)),
                _ => return Err(parse_err("malformed failed-cell line".into())),
            }
        } else if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        } else if line == SCAN_CSV_HEADER {
            seen_header = true;
        } else if !line.trim().is_empty() {
            if !seen_header {
                return Err(parse_err("row before header".into()));
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(parse_err(format!("expected 8 fields, found {}", f.len())));
            }
            network = f[0].to_string();
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}")));
            rows.push((
                f[1].parse().map_err(|e| parse_err(format!("kappa {:?}: {e}", f[1])))?,
                Delta::parse(f[2]).map_err(|e| parse_err(e.to_string()))?,
                f[3].parse()
                    .map_err(|e| parse_err(format!("repeat_count {:?}: {e}", f[3])))?,
                num(f[4])?,
                num(f[5])?,
                f[6].parse().map_err(|e: Error| parse_err(e.to_string()))?,
            ));
        }
    }
    if !seen_header {
        return Err(Error::Format("missing scan CSV header".into()));
    }
    let get = |k: &str| meta.get(k).and_then(|v| v.parse::<f64>().ok());
    let edge_count = get("edges").unwrap_or(0.0) as usize;
    let q = get("infinity_multiplier").unwrap_or(20.0) as u32;
    let seed = meta.get("seed").and_then(|v| v.parse().ok()).unwrap_or(0);
    if network.is_empty() {
        network = meta.get("network").cloned().unwrap_or_default();
    }

    let mut kappas: Vec<usize> = rows.iter().map(|r| r.0).chain(failed.iter().map(|f| f.0)).collect();
    kappas.sort_unstable();
    kappas.dedup();
    let mut deltas: Vec<Delta> = Vec::new();
    for d in rows.iter().map(|r| r.1).chain(failed.iter().map(|f| f.1)) {
        if !deltas.contains(&d) {
            deltas.push(d);
        }
    }
    deltas.sort_by(|a, b| match (a, b) {
        (Delta::Infinity, Delta::Infinity) => std::cmp::Ordering::Equal,
        (Delta::Infinity, _) => std::cmp::Ordering::Greater,
        (_, Delta::Infinity) => std::cmp::Ordering::Less,
        (Delta::Fraction(x), Delta::Fraction(y)) => x.total_cmp(y),
    });
    let specs = deltas
        .iter()
        .map(|&d| PerturbationSpec::new(d, edge_count, q))
        .collect::<Result<Vec<_>>>()?;
    let mut classifier = meta
        .get("classifier")
        .and_then(|c| c.parse().ok())
        .unwrap_or(ClassifierKind::JointBayes);
    let nd = specs.len();
    let mut cells = vec![CellOutcome::Failed("missing from CSV".into()); kappas.len() * nd];
    for (k, d, reps, mean, std, kind) in rows {
        let ki = kappas.iter().position(|&x| x == k).unwrap();
        let di = deltas.iter().position(|&x| x == d).unwrap();
        classifier = kind;
        cells[ki * nd + di] = CellOutcome::Done(AccuracyEstimate {
            kappa: k,
            delta: specs[di],
            accuracy_mean: mean,
            accuracy_std: std,
            repeats: reps,
            test_size: 0,
            classifier: kind,
            per_repeat: Vec::new(),
        });
    }
    for (k, d, msg) in failed {
        let ki = kappas.iter().position(|&x| x == k).unwrap();
        let di = deltas.iter().position(|&x| x == d).unwrap();
        cells[ki * nd + di] = CellOutcome::Failed(msg);
    }
    let mut config = EstimateConfig {
        classifier,
        ..EstimateConfig::default()
    };
    if let Some(v) = get("samples_per_class") {
        config.samples_per_class = v as usize;
    }
    if let Some(v) = get("train_fraction") {
        config.train_fraction = v;
    }
    if let Some(v) = get("repeats") {
        config.repeats = v as usize;
    }
    if let Some(v) = get("bins") {
        config.train.bins = v as usize;
    }
    Ok(ScanResult {
        network,
        kappa_grid: kappas,
        delta_grid: specs,
        config,
        seed,
        edge_count,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn synthetic(kappas: &[usize], deltas: &[Delta], acc: impl Fn(usize, Delta) -> f64) -> ScanResult {
        let specs: Vec<_> = deltas
            .iter()
            .map(|&d| PerturbationSpec::new(d, 100, 20).unwrap())
            .collect();
        let mut cells = Vec::new();
        for &k in kappas {
            for s in &specs {
                cells.push(CellOutcome::Done(AccuracyEstimate::from_repeats(
                    k,
                    *s,
                    ClassifierKind::JointBayes,
                    100,
                    vec![acc(k, s.delta)],
                )));
            }
        }
        ScanResult {
            network: "toy".into(),
            kappa_grid: kappas.to_vec(),
            delta_grid: specs,
            config: EstimateConfig::default(),
            seed: 1,
            edge_count: 100,
            cells,
        }
    }

    #[test]
    fn intrinsic_scale_examples() {
        let vals = [0.6, 0.8, 0.96];
        let scan = synthetic(&[4, 8, 12], &[Delta::Infinity], |k, _| vals[k / 4 - 1]);
        assert_eq!(
            intrinsic_scale(&scan, 0.95, Delta::Infinity).unwrap(),
            KappaStar::At(12)
        );
        assert_eq!(intrinsic_scale(&scan, 0.7, Delta::Infinity).unwrap(), KappaStar::At(8));
        let flat = synthetic(&[4, 8, 12], &[Delta::Infinity], |_, _| 0.5);
        assert_eq!(
            intrinsic_scale(&flat, 0.7, Delta::Infinity).unwrap(),
            KappaStar::BeyondGrid
        );
        assert!(intrinsic_scale(&scan, 0.5, Delta::Infinity).is_err());
        assert!(intrinsic_scale(&scan, 0.9, Delta::Fraction(0.1)).is_err());
        assert_eq!(KappaStar::BeyondGrid.to_string(), "*");
        assert!(KappaStar::At(64) < KappaStar::BeyondGrid);
    }

    #[test]
    fn robustness_examples() {
        match gamma(0.6) {
            Robustness::Gamma(g) => assert!((g - 10f64.ln()).abs() < 1e-12),
            r => panic!("{r:?}"),
        }
        assert_eq!(gamma(1.0), Robustness::Gamma(2f64.ln()));
        assert_eq!(gamma(0.5), Robustness::AtOrBelowChance);
        let scan = synthetic(&[4], &[Delta::Fraction(0.1)], |_, _| 0.6);
        assert!(matches!(robustness(&scan, 4).unwrap(), Robustness::Gamma(_)));
        assert!(robustness(&scan, 5).is_err());
    }

    #[test]
    fn resilience_examples() {
        assert!((resilience(&generators::random_regular(50, 4, 2).unwrap()).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(resilience(&generators::star(3)).unwrap(), 2.0);
        assert!(resilience(&Graph::from_edges(3, []).unwrap()).is_err());
    }

    #[test]
    fn accuracy_gap_examples() {
        let scan = synthetic(&[4, 8], &[Delta::Infinity], |k, _| if k == 8 { 0.9983 } else { 0.9 });
        assert!((accuracy_gap(&scan).unwrap() - 0.0017).abs() < 1e-12);
        let perfect = synthetic(&[4], &[Delta::Infinity], |_, _| 1.0);
        assert_eq!(accuracy_gap(&perfect).unwrap(), 0.0);
    }

    #[test]
    fn aux_examples() {
        let p = aux_measures(&generators::path(3), 1.0, 3, 0).unwrap();
        assert!((p.avg_degree - 4.0 / 3.0).abs() < 1e-12);
        assert!((p.avg_path_length - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.diameter_est, 2);
        let k = aux_measures(&generators::complete(5), 1.0, 2, 0).unwrap();
        assert_eq!(k.avg_path_length, 1.0);
        assert_eq!(k.diameter_est, 1);
        // measured on the larger piece only
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (2, 3), (5, 6)]).unwrap();
        let a = aux_measures(&g, 1.0, 2, 0).unwrap();
        assert_eq!(a.component_size, 4);
        assert_eq!(a.diameter_est, 3);
        assert!(aux_measures(&Graph::from_edges(2, []).unwrap(), 1.0, 1, 0).is_err());
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&xs, &[1.0; 4]).is_err());
        assert!(pearson(&xs, &ys[..3]).is_err());
    }

    #[test]
    fn scan_resumes_from_store() {
        let g = generators::erdos_renyi(120, 0.05, 1);
        let cfg = EstimateConfig {
            samples_per_class: 200,
            repeats: 2,
            ..EstimateConfig::default()
        };
        let deltas = vec![
            PerturbationSpec::none(),
            PerturbationSpec::infinity(g.edge_count(), 20).unwrap(),
        ];
        let store = MemoryStore::default();
        let a = run_scan(&g, "er", &[4, 6], &deltas, &cfg, 5, &store).unwrap();
        assert_eq!(store.len(), 4);
        let b = run_scan(&g, "er", &[4, 6], &deltas, &cfg, 5, &store).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.success_fraction(), 1.0);
        assert!(run_scan(&g, "er", &[6, 4], &deltas, &cfg, 5, &store).is_err());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let g = generators::path(6);
        let cfg = EstimateConfig {
            samples_per_class: 20,
            repeats: 1,
            ..EstimateConfig::default()
        };
        let scan = run_scan(&g, "p", &[3, 7], &[PerturbationSpec::none()], &cfg, 0, &NoStore).unwrap();
        assert_eq!(scan.failed_cells().len(), 1);
        assert_eq!(scan.failed_cells()[0].0, 7);
        assert_eq!(scan.success_fraction(), 0.5);
    }

    #[test]
    fn csv_round_trip_and_report() {
        let scan = synthetic(&[4, 8], &[Delta::Fraction(0.1), Delta::Infinity], |k, d| match d {
            Delta::Infinity => 0.5 + k as f64 / 20.0,
            _ => 0.6,
        });
        let mut buf = Vec::new();
        write_scan_csv(&scan, &[("input".into(), "x.txt".into())], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(SCAN_CSV_HEADER));
        assert!(text.contains("toy,8,inf,1,0.9,0,joint_feature_bayes,1"));
        let back = read_scan_csv(&buf[..]).unwrap();
        assert_eq!(back.kappa_grid, scan.kappa_grid);
        assert_eq!(
            back.column(Delta::Infinity).unwrap(),
            scan.column(Delta::Infinity).unwrap()
        );

        let r1 = ScaleReport::from_scan(&scan, &[0.7, 0.9]).unwrap();
        let r2 = ScaleReport::from_scan(&back, &[0.7, 0.9]).unwrap();
        assert_eq!(r1.render_text(), r2.render_text());
        assert!(r1.render_text().contains("kappa_star[tau=0.9,delta=inf]=8"));
        assert!(r1.render_text().contains("kappa_star[tau=0.7,delta=0.1]=*"));
        let table = render_kappa_table(&[r1]);
        assert!(table.contains("toy"));
        assert!(table.lines().count() == 3);
    }
}

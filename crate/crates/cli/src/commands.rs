//! The six subcommands, callable as library functions.

use std::fs::{self, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use iscale_core::cache::{load_graph, save_graph};
use iscale_core::classify::{estimate_delta, perturbation_seed, perturbed_copy, AccuracyEstimate};
use iscale_core::features::{mean_signature, signature_image};
use iscale_core::oracle::{
    bayes_accuracy, empirical_distribution, total_variation, tree_demo, write_tree_curve, TreeDemoResult,
};
use iscale_core::perturb::{perturb, Delta, PerturbationSpec, SwapOutcome};
use iscale_core::sampler::Walker;
use iscale_core::scale::{
    aux_measures, pearson, read_scan_csv, render_kappa_table, resilience, run_scan, write_scan_csv, KappaStar,
    ScaleReport, ScanResult, SCAN_CSV_HEADER,
};
use iscale_core::seed::derive_seed;
use iscale_core::Graph;
use rayon::prelude::*;

use crate::config::{usage, RunConfig};
use crate::store::Cache;

fn input_graph(config: &RunConfig) -> anyhow::Result<(Graph, Cache)> {
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| usage("an input edge list is required (--input)"))?;
    let cache = Cache::new(&config.cache_dir);
    let g = cache.input_graph(input, config.dedupe)?;
    Ok((g, cache))
}

fn spec_for(config: &RunConfig, g: &Graph, delta: Delta) -> anyhow::Result<PerturbationSpec> {
    Ok(PerturbationSpec::new(
        delta,
        g.edge_count(),
        config.infinity_multiplier,
    )?)
}

fn create_out(config: &RunConfig, name: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&config.out_dir).with_context(|| format!("creating {}", config.out_dir.display()))?;
    Ok(config.out_dir.join(name))
}

fn write_header(w: &mut impl Write, config: &RunConfig) -> std::io::Result<()> {
    for line in config.snapshot_lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PerturbOutput {
    pub delta: Delta,
    pub path: PathBuf,
    pub cache_hit: bool,
    /// Present when the copy was computed in this run.
    pub outcome: Option<SwapOutcome>,
}

/// Builds and caches one perturbed copy per `δ` of the configured grid.
pub fn cmd_perturb(config: &RunConfig) -> anyhow::Result<Vec<PerturbOutput>> {
    let (g, cache) = input_graph(config)?;
    let mut out = Vec::new();
    for spec in config.specs(g.edge_count())? {
        let path = cache.perturbed_path(&g, &spec, config.seed, 0);
        if load_graph(&path).is_ok() {
            log::info!("δ = {}: cache hit {}", spec.delta, path.display());
            println!("delta={} cache_hit path={}", spec.delta.code(), path.display());
            out.push(PerturbOutput {
                delta: spec.delta,
                path,
                cache_hit: true,
                outcome: None,
            });
            continue;
        }
        let (gd, outcome) = perturb(&g, &spec, perturbation_seed(config.seed, &spec, 0))?;
        save_graph(&path, &gd)?;
        println!(
            "delta={} swaps_requested={} attempted={} succeeded={} rejected_shared_vertex={} path={}",
            spec.delta.code(),
            spec.swap_count,
            outcome.attempted,
            outcome.succeeded,
            outcome.rejected_shared_vertex,
            path.display()
        );
        out.push(PerturbOutput {
            delta: spec.delta,
            path,
            cache_hit: false,
            outcome: Some(outcome),
        });
    }
    Ok(out)
}

fn csv_row(network: &str, e: &AccuracyEstimate, seed: u64) -> String {
    format!(
        "{network},{},{},{},{},{},{},{seed}",
        e.kappa,
        e.delta.delta.code(),
        e.repeats,
        e.accuracy_mean,
        e.accuracy_std,
        e.classifier
    )
}

/// One estimate of `Δ̂(κ, δ)`, printed and appended to `eval.csv`.
pub fn cmd_eval(config: &RunConfig, kappa: usize, delta: Delta) -> anyhow::Result<AccuracyEstimate> {
    let (g, _) = input_graph(config)?;
    let spec = spec_for(config, &g, delta)?;
    let e = estimate_delta(&g, kappa, &spec, &config.estimate_config(), config.seed)?;
    println!(
        "kappa={kappa} delta={} classifier={} accuracy_mean={} accuracy_std={} repeats={} test_size={}",
        delta.code(),
        e.classifier,
        e.accuracy_mean,
        e.accuracy_std,
        e.repeats,
        e.test_size
    );
    let path = create_out(config, "eval.csv")?;
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        write_header(&mut f, config)?;
        writeln!(f, "{SCAN_CSV_HEADER}")?;
    }
    writeln!(f, "{}", csv_row(&config.network_name(), &e, config.seed))?;
    Ok(e)
}

pub struct ScanOutput {
    pub scan: ScanResult,
    pub report: ScaleReport,
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
}

impl ScanOutput {
    /// Success when at least 90% of cells finished.
    pub fn exit_code(&self) -> i32 {
        if self.scan.success_fraction() >= 0.9 {
            0
        } else {
            1
        }
    }
}

/// Full `(κ, δ)` scan with resumable cells, CSV and report.
pub fn cmd_scan(config: &RunConfig) -> anyhow::Result<ScanOutput> {
    let (g, cache) = input_graph(config)?;
    let specs = config.specs(g.edge_count())?;
    let est = config.estimate_config();
    let store = cache.cell_store(&g, &est, config.seed);
    let network = config.network_name();
    let scan = run_scan(&g, &network, &config.kappa_grid, &specs, &est, config.seed, &store)?;

    let csv_path = create_out(config, &format!("{network}_scan.csv"))?;
    let mut w = BufWriter::new(fs::File::create(&csv_path)?);
    write_scan_csv(&scan, &config.snapshot(), &mut w)?;
    w.flush()?;

    let mut report = ScaleReport::from_scan(&scan, &config.taus)?;
    add_graph_measures(&mut report, &g, config)?;
    let report_path = create_out(config, &format!("{network}_report.txt"))?;
    write_report(&report_path, config, &[report.clone()])?;
    for (k, d, msg) in &report.failed_cells {
        eprintln!("failed cell kappa={k} delta={}: {msg}", d.code());
    }
    println!("{}", render_kappa_table(std::slice::from_ref(&report)));
    println!(
        "cells={} failed={} csv={} report={}",
        scan.cells.len(),
        report.failed_cells.len(),
        csv_path.display(),
        report_path.display()
    );
    Ok(ScanOutput {
        scan,
        report,
        csv_path,
        report_path,
    })
}

fn add_graph_measures(report: &mut ScaleReport, g: &Graph, config: &RunConfig) -> anyhow::Result<()> {
    report.resilience_beta = resilience(g).ok();
    match aux_measures(g, config.pair_fraction, config.bfs_sources, config.seed) {
        Ok(mut aux) => {
            aux.cluster_size = config.cluster_size;
            report.aux = Some(aux);
        }
        Err(e) => log::warn!("auxiliary measures unavailable: {e}"),
    }
    Ok(())
}

fn write_report(path: &Path, config: &RunConfig, reports: &[ScaleReport]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_header(&mut w, config)?;
    for r in reports {
        write!(w, "{}", r.render_text())?;
        writeln!(w)?;
    }
    write!(w, "{}", render_kappa_table(reports))?;
    w.flush()?;
    Ok(())
}

/// Reports from existing scan CSVs, with graph measures when the matching
/// inputs are given and correlations across networks when there are several.
pub fn cmd_report(config: &RunConfig, scans: &[PathBuf], inputs: &[PathBuf]) -> anyhow::Result<Vec<ScaleReport>> {
    if scans.is_empty() {
        return Err(usage("report needs at least one --scan file"));
    }
    if !inputs.is_empty() && inputs.len() != scans.len() {
        return Err(usage("give either no --input or one per --scan"));
    }
    let cache = Cache::new(&config.cache_dir);
    let mut reports = Vec::new();
    for (i, path) in scans.iter().enumerate() {
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let scan = read_scan_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
        let mut report = ScaleReport::from_scan(&scan, &config.taus)?;
        if let Some(input) = inputs.get(i) {
            let g = cache.input_graph(input, config.dedupe)?;
            add_graph_measures(&mut report, &g, config)?;
        }
        reports.push(report);
    }
    add_correlations(&mut reports);
    let path = create_out(config, "report.txt")?;
    write_report(&path, config, &reports)?;
    for r in &reports {
        print!("{}", r.render_text());
        println!();
    }
    print!("{}", render_kappa_table(&reports));
    Ok(reports)
}

/// Correlates `κ*(τ_max, ∞)` with each auxiliary measure across networks.
fn add_correlations(reports: &mut [ScaleReport]) {
    let points: Vec<(f64, f64, f64, f64, Option<f64>)> = reports
        .iter()
        .filter_map(|r| {
            let tau = r.taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let k = r
                .kappa_star
                .iter()
                .find(|(t, d, _)| *t == tau && *d == Delta::Infinity)?;
            let KappaStar::At(k) = k.2 else { return None };
            let aux = r.aux?;
            Some((
                k as f64,
                aux.avg_path_length,
                f64::from(aux.diameter_est),
                aux.avg_degree,
                aux.cluster_size,
            ))
        })
        .collect();
    if points.len() < 2 {
        return;
    }
    let ks: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut corr = Vec::new();
    let columns: [(&str, Vec<f64>); 3] = [
        ("avg_path_length", points.iter().map(|p| p.1).collect()),
        ("diameter_est", points.iter().map(|p| p.2).collect()),
        ("avg_degree", points.iter().map(|p| p.3).collect()),
    ];
    for (name, ys) in columns {
        if let Ok(r) = pearson(&ks, &ys) {
            corr.push((name.to_string(), r));
        }
    }
    if let Some(cs) = points.iter().map(|p| p.4).collect::<Option<Vec<f64>>>() {
        if let Ok(r) = pearson(&ks, &cs) {
            corr.push(("cluster_size".to_string(), r));
        }
    }
    for r in reports.iter_mut() {
        r.correlations = corr.clone();
    }
}

/// Tree connectivity curve over `sizes`, written to `tree_curve.csv`.
pub fn cmd_tree_demo(config: &RunConfig, sizes: &[usize], trials: usize) -> anyhow::Result<Vec<TreeDemoResult>> {
    if let Some(t) = sizes.iter().find(|&&t| t < 3) {
        return Err(usage(format!("tree size {t} is below 3")));
    }
    if trials == 0 {
        return Err(usage("trials must be positive"));
    }
    let results = sizes
        .iter()
        .map(|&t| tree_demo(t, trials, config.infinity_multiplier, config.seed))
        .collect::<iscale_core::Result<Vec<_>>>()?;
    let path = create_out(config, "tree_curve.csv")?;
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write_header(&mut w, config)?;
    writeln!(w, "# trials={trials}")?;
    write_tree_curve(&results, &mut w)?;
    w.flush()?;
    for r in &results {
        println!(
            "t={} accuracy={:.4} stderr={:.4} connected_fraction={:.4}",
            r.t, r.accuracy, r.stderr, r.connected_fraction_randomized
        );
    }
    println!("curve={}", path.display());
    Ok(results)
}

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub bayes_accuracy: f64,
    pub total_variation: f64,
    pub classes_original: usize,
    pub classes_perturbed: usize,
    pub mean_signature_l1: f64,
}

/// Empirical Bayes accuracy of `κ`-subgraphs of the input against its
/// perturbed copy, plus distribution CSVs and mean-signature images.
pub fn cmd_oracle(
    config: &RunConfig,
    kappa: usize,
    delta: Delta,
    oracle_samples: usize,
    images: usize,
) -> anyhow::Result<OracleOutput> {
    let (g, _) = input_graph(config)?;
    let spec = spec_for(config, &g, delta)?;
    let gd = perturbed_copy(&g, &spec, config.seed, 0)?;
    let p0 = empirical_distribution(
        &g,
        kappa,
        oracle_samples,
        derive_seed(config.seed, "oracle-original", &[kappa as u64]),
    )?;
    let p1 = empirical_distribution(
        &gd,
        kappa,
        oracle_samples,
        derive_seed(config.seed, "oracle-perturbed", &[kappa as u64]),
    )?;
    let bayes = bayes_accuracy(&p0, &p1)?;
    let tv = total_variation(&p0, &p1)?;

    let network = config.network_name();
    let code = delta.code();
    for (dist, tag) in [(&p0, "original".to_string()), (&p1, format!("delta{code}"))] {
        let path = create_out(config, &format!("{network}_k{kappa}_{tag}_distribution.csv"))?;
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write_header(&mut w, config)?;
        dist.write_csv(&mut w)?;
        w.flush()?;
    }

    let mut l1 = f64::NAN;
    if images > 0 {
        let mut means = Vec::new();
        for (graph, tag) in [(&g, "original".to_string()), (&gd, format!("delta{code}"))] {
            let walker = Walker::new(graph);
            let imgs = (0..images)
                .into_par_iter()
                .map(|i| {
                    let s = walker.sample(kappa, derive_seed(config.seed, "signature", &[kappa as u64, i as u64]))?;
                    signature_image(&s)
                })
                .collect::<iscale_core::Result<Vec<_>>>()?;
            let mean = mean_signature(&imgs)?;
            let path = create_out(config, &format!("{network}_k{kappa}_{tag}.pgm"))?;
            let mut w = BufWriter::new(fs::File::create(&path)?);
            mean.write_pgm(&config.snapshot_lines(), &mut w)?;
            w.flush()?;
            means.push(mean);
        }
        l1 = means[0].l1_distance(&means[1])?;
    }

    println!(
        "kappa={kappa} delta={code} bayes_accuracy={bayes} total_variation={tv} classes_original={} classes_perturbed={} mean_signature_l1={l1}",
        p0.mass.len(),
        p1.mass.len()
    );
    Ok(OracleOutput {
        bayes_accuracy: bayes,
        total_variation: tv,
        classes_original: p0.mass.len(),
        classes_perturbed: p1.mass.len(),
        mean_signature_l1: l1,
    })
}

//! Command-line driver for intrinsic-scale experiments.
//!
//! Settings come from defaults, then an optional `key = value` config file,
//! then command-line flags. Exit codes: 0 success, 1 compute failure or a scan
//! with fewer than 90% finished cells, 2 usage error.

pub mod commands;
pub mod config;
pub mod store;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use iscale_core::perturb::Delta;
use iscale_core::ClassifierKind;

pub use config::{RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(name = "iscale", version, about = "Measure the intrinsic scale of a network")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Base seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_classifier)]
    pub classifier: Option<ClassifierKind>,
    /// Samples per class.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    /// Swaps per edge for δ = ∞.
    #[arg(long, global = true)]
    pub infinity_multiplier: Option<u32>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct GraphArgs {
    /// Edge-list file, one `u v` pair per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Name used in outputs (default: input file stem).
    #[arg(long)]
    pub network: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and cache one perturbed copy per δ.
    Perturb {
        #[command(flatten)]
        graph: GraphArgs,
        /// δ grid, e.g. `0.1,0.5,inf`.
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Estimate accuracy for one (κ, δ).
    Eval {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        kappa: usize,
        #[arg(long, value_parser = parse_delta)]
        delta: Delta,
    },
    /// Resumable scan over the κ and δ grids, with report.
    Scan {
        #[command(flatten)]
        graph: GraphArgs,
        /// κ grid: `4..64`, `4..64:4` or a comma list.
        #[arg(long)]
        kappas: Option<String>,
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        taus: Option<String>,
    },
    /// Report from existing scan CSVs.
    Report {
        #[arg(long = "scan", required = true)]
        scans: Vec<PathBuf>,
        /// Edge lists matching each scan, for graph-level measures.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        taus: Option<String>,
    },
    /// Random-tree connectivity experiment.
    TreeDemo {
        /// Tree sizes: one size, `5..20` or a comma list.
        #[arg(long, default_value = "5..20")]
        sizes: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Empirical Bayes accuracy and mean signature images.
    Oracle {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        kappa: usize,
        #[arg(long, value_parser = parse_delta, default_value = "inf")]
        delta: Delta,
        /// Walk samples per distribution.
        #[arg(long, default_value_t = 1_000_000)]
        oracle_samples: usize,
        /// Samples averaged into each mean signature image (0 to skip).
        #[arg(long, default_value_t = 5_000)]
        images: usize,
    },
}

fn parse_classifier(s: &str) -> Result<ClassifierKind, String> {
    s.parse().map_err(|e: iscale_core::Error| e.to_string())
}

fn parse_delta(s: &str) -> Result<Delta, String> {
    Delta::parse(s).map_err(|e| e.to_string())
}

impl Cli {
    /// Resolves defaults, config file and flags into one configuration.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let g = &self.global;
        let mut c = RunConfig::default();
        if let Some(path) = &g.config {
            c.apply_file(path)?;
        }
        if let Some(v) = g.seed {
            c.seed = v;
        }
        if let Some(v) = &g.cache_dir {
            c.cache_dir = v.clone();
        }
        if let Some(v) = &g.out_dir {
            c.out_dir = v.clone();
        }
        if let Some(v) = g.classifier {
            c.classifier = v;
        }
        if let Some(v) = g.samples {
            c.samples = v;
        }
        if let Some(v) = g.repeats {
            c.repeats = v;
        }
        if let Some(v) = g.infinity_multiplier {
            c.infinity_multiplier = v;
        }
        if let Some(v) = g.jobs {
            c.jobs = Some(v);
        }
        let graph = match &self.command {
            Command::Perturb { graph, .. }
            | Command::Eval { graph, .. }
            | Command::Scan { graph, .. }
            | Command::Oracle { graph, .. } => Some(graph),
            _ => None,
        };
        if let Some(graph) = graph {
            if let Some(p) = &graph.input {
                c.input = Some(p.clone());
            }
            if let Some(n) = &graph.network {
                c.network = Some(n.clone());
            }
        }
        match &self.command {
            Command::Perturb { deltas: Some(d), .. } => c.delta_grid = config::parse_delta_grid(d)?,
            Command::Scan {
                kappas, deltas, taus, ..
            } => {
                if let Some(k) = kappas {
                    c.kappa_grid = config::parse_kappa_grid(k)?;
                }
                if let Some(d) = deltas {
                    c.delta_grid = config::parse_delta_grid(d)?;
                }
                if let Some(t) = taus {
                    c.taus = config::parse_taus(t)?;
                }
            }
            Command::Report { taus: Some(t), .. } => c.taus = config::parse_taus(t)?,
            _ => {}
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let config = cli.resolve()?;
    if let Some(jobs) = config.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            log::warn!("thread pool already initialized; --jobs ignored");
        }
    }
    match &cli.command {
        Command::Perturb { .. } => commands::cmd_perturb(&config).map(|_| 0),
        Command::Eval { kappa, delta, .. } => commands::cmd_eval(&config, *kappa, *delta).map(|_| 0),
        Command::Scan { .. } => commands::cmd_scan(&config).map(|o| o.exit_code()),
        Command::Report { scans, inputs, .. } => commands::cmd_report(&config, scans, inputs).map(|_| 0),
        Command::TreeDemo { sizes, trials } => {
            let sizes = match sizes.trim().parse::<usize>() {
                Ok(t) => vec![t],
                Err(_) => config::parse_kappa_grid(sizes)?,
            };
            commands::cmd_tree_demo(&config, &sizes, *trials).map(|_| 0)
        }
        Command::Oracle {
            kappa,
            delta,
            oracle_samples,
            images,
            ..
        } => commands::cmd_oracle(&config, *kappa, *delta, *oracle_samples, *images).map(|_| 0),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

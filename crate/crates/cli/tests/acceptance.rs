//! Acceptance checks, one status line per criterion.
//!
//! Criteria that need the Facebook ego-network read it from
//! `ISCALE_FACEBOOK_EDGES` or `data/facebook_combined.txt` at the workspace
//! root. Without it they report BLOCKED, which fails the run only when
//! `ISCALE_REQUIRE_DATASETS=1`.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use iscale_cli::commands::cmd_tree_demo;
use iscale_cli::RunConfig;
use iscale_core::classify::{estimate_delta, estimate_with_copies, perturbed_copy, EstimateConfig};
use iscale_core::generators::{erdos_renyi, random_regular, watts_strogatz};
use iscale_core::graph::{parse_edge_list, ParseOptions};
use iscale_core::oracle::{bayes_accuracy, empirical_distribution};
use iscale_core::perturb::{is_frozen, perturb, Delta, PerturbationSpec};
use iscale_core::scale::{gamma, intrinsic_scale, pearson, resilience, run_scan, KappaStar, NoStore, Robustness};
use iscale_core::seed::derive_seed;
use iscale_core::{ClassifierKind, Error, Graph};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};

enum Status {
    Pass(String),
    Fail(String),
    Blocked(String),
}

type Outcome = anyhow::Result<Status>;

fn check(ok: bool, detail: String) -> Status {
    if ok {
        Status::Pass(detail)
    } else {
        Status::Fail(detail)
    }
}

fn facebook() -> Option<PathBuf> {
    let path = std::env::var_os("ISCALE_FACEBOOK_EDGES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/facebook_combined.txt"));
    path.is_file().then_some(path)
}

fn load_facebook() -> anyhow::Result<Option<Graph>> {
    let Some(path) = facebook() else { return Ok(None) };
    let parsed = parse_edge_list(BufReader::new(File::open(&path)?), ParseOptions::default())?;
    Ok(Some(parsed.graph))
}

fn estimate_config(classifier: ClassifierKind, samples: usize, repeats: usize) -> EstimateConfig {
    EstimateConfig {
        classifier,
        samples_per_class: samples,
        repeats,
        ..EstimateConfig::default()
    }
}

fn tree_curve() -> Outcome {
    let start = Instant::now();
    let out = tempfile::TempDir::new()?;
    let config = RunConfig {
        out_dir: out.path().to_path_buf(),
        seed: 1,
        ..RunConfig::default()
    };
    let sizes: Vec<usize> = (5..=20).collect();
    let curve = cmd_tree_demo(&config, &sizes, 100_000)?;
    let at18 = curve.iter().find(|r| r.t == 18).expect("t = 18 on the curve");
    let mut worst_drop = 0.0f64;
    let mut monotone = true;
    for w in curve.windows(2) {
        let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        worst_drop = worst_drop.max(w[0].accuracy - w[1].accuracy);
        monotone &= w[1].accuracy >= w[0].accuracy - slack;
    }
    let elapsed = start.elapsed();
    Ok(check(
        at18.accuracy >= 0.95 && monotone && elapsed < Duration::from_secs(120),
        format!(
            "t=18 accuracy {:.4} (≥ 0.95), t=5 {:.4}, t=20 {:.4}, largest drop {worst_drop:.4}, {:.1}s",
            at18.accuracy,
            curve[0].accuracy,
            curve[curve.len() - 1].accuracy,
            elapsed.as_secs_f64()
        ),
    ))
}

fn facebook_features() -> Outcome {
    let Some(g) = load_facebook()? else {
        return Ok(Status::Blocked("Facebook edge list not found".into()));
    };
    let start = Instant::now();
    let spec = PerturbationSpec::infinity(g.edge_count(), 20)?;
    let targets = [
        (ClassifierKind::BayesC, 0.905),
        (ClassifierKind::BayesR, 0.820),
        (ClassifierKind::JointBayes, 0.932),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, target) in targets {
        let e = estimate_delta(&g, 8, &spec, &estimate_config(kind, 10_000, 10), 0)?;
        ok &= (e.accuracy_mean - target).abs() <= 0.03;
        parts.push(format!("{kind} {:.3} (target {target})", e.accuracy_mean));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30 * 60);
    Ok(check(
        ok,
        format!("{}, {:.0}s", parts.join(", "), elapsed.as_secs_f64()),
    ))
}

fn facebook_scale() -> Outcome {
    let Some(g) = load_facebook()? else {
        return Ok(Status::Blocked("Facebook edge list not found".into()));
    };
    let start = Instant::now();
    let spec = PerturbationSpec::infinity(g.edge_count(), 20)?;
    let kappas: Vec<usize> = (4..=16).collect();
    let config = estimate_config(ClassifierKind::JointBayes, 2_000, 5);
    let scan = run_scan(&g, "facebook", &kappas, &[spec], &config, 0, &NoStore)?;
    let k90 = intrinsic_scale(&scan, 0.9, Delta::Infinity)?;
    let k95 = intrinsic_scale(&scan, 0.95, Delta::Infinity)?;
    let within = |k: KappaStar, bound: usize| matches!(k, KappaStar::At(v) if v <= bound);
    Ok(check(
        within(k90, 12) && within(k95, 16),
        format!(
            "κ*(0.9,∞) = {k90} (≤ 12), κ*(0.95,∞) = {k95} (≤ 16), {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn random_graph_null() -> Outcome {
    let start = Instant::now();
    let g = erdos_renyi(1000, 0.01, 11);
    let spec = PerturbationSpec::infinity(g.edge_count(), 20)?;
    let kappas = [4, 8, 16, 32, 64];
    let config = estimate_config(ClassifierKind::JointBayes, 2_000, 5);
    let scan = run_scan(&g, "er", &kappas, &[spec], &config, 0, &NoStore)?;
    let column = scan.column(Delta::Infinity)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, acc) in column {
        match acc {
            Some(a) => {
                ok &= (0.47..=0.53).contains(&a);
                parts.push(format!("κ={k} {a:.4}"));
            }
            None => {
                ok = false;
                parts.push(format!("κ={k} failed"));
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    Ok(check(
        ok,
        format!("{}, {:.0}s", parts.join(", "), elapsed.as_secs_f64()),
    ))
}

fn self_test() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for i in 0..20u64 {
        let seed = derive_seed(5, "self-test", &[i]);
        let g = match i % 4 {
            0 => erdos_renyi(200, 0.04, seed),
            1 => watts_strogatz(200, 6, 0.2, seed)?,
            2 => random_regular(200, 4, seed)?,
            _ => erdos_renyi(500, 0.01, seed),
        };
        let spec = PerturbationSpec::fraction(g.edge_count(), 0.0)?;
        let e = estimate_delta(&g, 6, &spec, &estimate_config(ClassifierKind::JointBayes, 500, 1), seed)?;
        let tol = 3.0 * (0.25 / e.test_size as f64).sqrt();
        let dev = (e.accuracy_mean - 0.5).abs();
        worst = worst.max(dev / tol);
        if dev > tol {
            failures += 1;
        }
    }
    Ok(check(
        failures == 0,
        format!("20 graphs, {failures} outside the band, worst deviation {worst:.2} of the allowed 3σ"),
    ))
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..30).prop_flat_map(|n| {
        proptest::collection::vec((0..n as u32, 0..n as u32), 1..60).prop_map(move |pairs| {
            let edges: Vec<_> = pairs.into_iter().filter(|(u, v)| u != v).collect();
            Graph::from_edges(n, edges).expect("valid edges")
        })
    })
}

fn delta_strategy() -> impl Strategy<Value = (Delta, u32)> {
    prop_oneof![
        (0.0f64..2.0).prop_map(|f| (Delta::Fraction(f), 20)),
        (1u32..8).prop_map(|q| (Delta::Infinity, q)),
    ]
}

fn degree_preservation() -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 10_000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let frozen = std::cell::Cell::new(0usize);
    let result = runner.run(
        &(graph_strategy(), delta_strategy(), any::<u64>()),
        |(g, (delta, q), seed)| {
            let spec =
                PerturbationSpec::new(delta, g.edge_count(), q).map_err(|e| TestCaseError::fail(e.to_string()))?;
            match perturb(&g, &spec, seed) {
                Ok((gd, _)) => {
                    prop_assert_eq!(gd.degree_multiset(), g.degree_multiset());
                    prop_assert_eq!(gd.degrees(), g.degrees());
                    prop_assert!(gd.edges().iter().all(|(u, v)| u != v));
                    prop_assert_eq!(gd.edge_count(), g.edge_count());
                }
                Err(Error::MixingFailure { .. } | Error::InvalidArgument(_)) if is_frozen(&g) => {
                    frozen.set(frozen.get() + 1)
                }
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
            }
            Ok(())
        },
    );
    Ok(match result {
        Ok(()) => Status::Pass(format!(
            "10000 cases, {} on graphs admitting no swap (rejected as expected)",
            frozen.get()
        )),
        Err(e) => Status::Fail(e.to_string()),
    })
}

fn oracle_sandwich() -> Outcome {
    let start = Instant::now();
    let g = watts_strogatz(50, 4, 0.1, 7)?;
    let spec = PerturbationSpec::infinity(g.edge_count(), 20)?;
    let seed = 3;
    let copy = perturbed_copy(&g, &spec, seed, 0)?;
    let p0 = empirical_distribution(&g, 4, 1_000_000, derive_seed(seed, "oracle-original", &[4]))?;
    let p1 = empirical_distribution(&copy, 4, 1_000_000, derive_seed(seed, "oracle-perturbed", &[4]))?;
    let bound = bayes_accuracy(&p0, &p1)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in ClassifierKind::ALL {
        let e = estimate_with_copies(
            &g,
            std::slice::from_ref(&copy),
            4,
            &spec,
            &estimate_config(kind, 10_000, 1),
            seed,
        )?;
        ok &= e.accuracy_mean <= bound + 0.02;
        parts.push(format!("{kind} {:.4}", e.accuracy_mean));
    }
    Ok(check(
        ok,
        format!(
            "oracle {bound:.4}; {}; {:.0}s",
            parts.join(", "),
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn formulas() -> Outcome {
    let g = match gamma(0.6) {
        Robustness::Gamma(v) => v,
        Robustness::AtOrBelowChance => f64::NAN,
    };
    let mut betas_exact = true;
    for (n, d) in [(100, 3), (200, 4), (60, 6)] {
        betas_exact &= resilience(&random_regular(n, d, 1)?)? == d as f64;
    }
    let ks = [7.0, 10.0, 10.0, 12.0, 12.0, 12.0, 13.0, 14.0, 17.0, 20.0, 20.0, 20.0];
    let path = [308.91, 3.83, 4.25, 11.97, 3.5, 4.36, 6.79, 6.34, 4.62, 4.86, 3.28, 2.55];
    let r = pearson(&ks, &path)?;
    Ok(check(
        (g - std::f64::consts::LN_10).abs() <= 1e-9 && betas_exact && (r + 0.5047).abs() <= 0.001,
        format!("γ(0.6) = {g:.10}, β exact on regular graphs: {betas_exact}, pearson = {r:.6}"),
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 tree connectivity curve", tree_curve),
        ("2 Facebook feature classifiers", facebook_features),
        ("3 Facebook intrinsic scale", facebook_scale),
        ("4 random-graph null", random_graph_null),
        ("5 unperturbed self-test", self_test),
        ("6 degree preservation", degree_preservation),
        ("7 oracle upper bound", oracle_sandwich),
        ("8 formula checks", formulas),
    ];
    let require = std::env::var("ISCALE_REQUIRE_DATASETS").is_ok_and(|v| v == "1");
    let mut failed = false;
    for (name, run) in criteria {
        match run() {
            Ok(Status::Pass(d)) => println!("[PASS] {name}: {d}"),
            Ok(Status::Fail(d)) => {
                failed = true;
                println!("[FAIL] {name}: {d}");
            }
            Ok(Status::Blocked(d)) => {
                failed |= require;
                println!("[BLOCKED] {name}: {d}");
            }
            Err(e) => {
                failed = true;
                println!("[FAIL] {name}: error: {e:#}");
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

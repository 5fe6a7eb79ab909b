//! Ground truth independent of any trained classifier: the Bayes-optimal
//! accuracy of two empirical subgraph distributions, and the random-tree
//! connectivity experiment.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::cache::content_hash;
use crate::error::{Error, Result};
use crate::features::signature_image;
use crate::generators::prufer_tree;
use crate::graph::{is_connected, Graph};
use crate::perturb::{is_frozen, perturb, PerturbationSpec};
use crate::sampler::Walker;
use crate::seed::{self, derive_seed};

/// Probability mass over signature-image keys.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    pub kappa: usize,
    pub mass: BTreeMap<Vec<u8>, f64>,
    pub sample_count: usize,
}

impl EmpiricalDistribution {
    pub fn from_counts(kappa: usize, counts: HashMap<Vec<u8>, u64>) -> Self {
        let total: u64 = counts.values().sum();
        Self {
            kappa,
            mass: counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect(),
            sample_count: total as usize,
        }
    }

    pub fn get(&self, key: &[u8]) -> f64 {
        self.mass.get(key).copied().unwrap_or(0.0)
    }

    /// CSV of `key_hash,probability`, keys in byte order.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "key_hash,probability")?;
        for (k, p) in &self.mass {
            writeln!(w, "{},{p}", &content_hash(k)[..16])?;
        }
        Ok(())
    }
}

/// Walk samples of `g` tallied by signature key.
pub fn empirical_distribution(g: &Graph, kappa: usize, samples: usize, seed: u64) -> Result<EmpiricalDistribution> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let walker = Walker::new(g);
    let counts = (0..samples)
        .into_par_iter()
        .try_fold(HashMap::new, |mut acc: HashMap<Vec<u8>, u64>, i| {
            let s = walker.sample(kappa, derive_seed(seed, "oracle", &[i as u64]))?;
            *acc.entry(signature_image(&s)?.key_bytes()).or_default() += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_default() += c;
            }
            Ok(a)
        })?;
    Ok(EmpiricalDistribution::from_counts(kappa, counts))
}

fn check_kappa(p0: &EmpiricalDistribution, p1: &EmpiricalDistribution) -> Result<()> {
    if p0.kappa != p1.kappa {
        return Err(Error::KappaMismatch {
            expected: p0.kappa,
            found: p1.kappa,
        });
    }
    Ok(())
}

/// `½ Σ max(p0, p1)` over the union of keys.
pub fn bayes_accuracy(p0: &EmpiricalDistribution, p1: &EmpiricalDistribution) -> Result<f64> {
    check_kappa(p0, p1)?;
    let mut sum: f64 = p0.mass.iter().map(|(k, &a)| a.max(p1.get(k))).sum();
    sum += p1
        .mass
        .iter()
        .filter(|(k, _)| !p0.mass.contains_key(*k))
        .map(|(_, &b)| b)
        .sum::<f64>();
    Ok(0.5 * sum)
}

/// `½ Σ |p0 − p1|`; equals `2·bayes − 1`.
pub fn total_variation(p0: &EmpiricalDistribution, p1: &EmpiricalDistribution) -> Result<f64> {
    check_kappa(p0, p1)?;
    let mut sum: f64 = p0.mass.iter().map(|(k, &a)| (a - p1.get(k)).abs()).sum();
    sum += p1
        .mass
        .iter()
        .filter(|(k, _)| !p0.mass.contains_key(*k))
        .map(|(_, &b)| b)
        .sum::<f64>();
    Ok(0.5 * sum)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeDemoResult {
    pub t: usize,
    pub trials: usize,
    pub accuracy: f64,
    pub connected_fraction_randomized: f64,
    /// Standard error of `accuracy`.
    pub stderr: f64,
}

/// Whether the fully randomized copy of one uniform random tree is connected.
///
/// A tree admitting no swap (a star) is its own randomization.
pub fn randomized_tree_connected(t: usize, q: u32, seed: u64) -> Result<bool> {
    let mut rng = seed::rng(seed);
    let tree = prufer_tree(t, &mut rng)?;
    if is_frozen(&tree) {
        return Ok(true);
    }
    let spec = PerturbationSpec::infinity(tree.edge_count(), q)?;
    let (randomized, _) = perturb(&tree, &spec, derive_seed(seed, "swap", &[]))?;
    Ok(is_connected(&randomized))
}

/// Connectivity-classifier accuracy on trees of size `t` versus their
/// randomized copies.
///
/// The classifier is right on every tree and every disconnected copy and
/// guesses on connected copies, so accuracy is `1 − f/2` for connected
/// fraction `f`.
pub fn tree_demo(t: usize, trials: usize, q: u32, seed: u64) -> Result<TreeDemoResult> {
    if t < 3 || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "tree demo needs t ≥ 3 and trials ≥ 1, got t = {t}, trials = {trials}"
        )));
    }
    let connected = (0..trials)
        .into_par_iter()
        .map(|i| randomized_tree_connected(t, q, derive_seed(seed, "tree", &[t as u64, i as u64])))
        .try_fold(|| 0usize, |acc, c| c.map(|c| acc + usize::from(c)))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let f = connected as f64 / trials as f64;
    Ok(TreeDemoResult {
        t,
        trials,
        accuracy: 1.0 - f / 2.0,
        connected_fraction_randomized: f,
        stderr: 0.5 * (f * (1.0 - f) / trials as f64).sqrt(),
    })
}

/// CSV curve `t,accuracy,stderr`.
pub fn write_tree_curve(results: &[TreeDemoResult], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "t,accuracy,stderr")?;
    for r in results {
        writeln!(w, "{},{},{}", r.t, r.accuracy, r.stderr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn dist(kappa: usize, pairs: &[(&[u8], f64)]) -> EmpiricalDistribution {
        EmpiricalDistribution {
            kappa,
            mass: pairs.iter().map(|(k, p)| (k.to_vec(), *p)).collect(),
            sample_count: 1,
        }
    }

    #[test]
    fn bayes_examples() {
        let a = dist(3, &[(b"A", 1.0)]);
        let ab = dist(3, &[(b"A", 0.5), (b"B", 0.5)]);
        let b = dist(3, &[(b"B", 1.0)]);
        assert_eq!(bayes_accuracy(&a, &a).unwrap(), 0.5);
        assert_eq!(bayes_accuracy(&a, &b).unwrap(), 1.0);
        assert_eq!(bayes_accuracy(&a, &ab).unwrap(), 0.75);
        assert_eq!(bayes_accuracy(&ab, &a).unwrap(), 0.75);
        assert_eq!(total_variation(&a, &ab).unwrap(), 0.5);
        assert!(bayes_accuracy(&a, &dist(4, &[])).is_err());
    }

    #[test]
    fn single_class_distributions() {
        let d = empirical_distribution(&generators::cycle(3), 2, 200, 1).unwrap();
        assert_eq!(d.mass.len(), 1);
        assert_eq!(d.sample_count, 200);
        let p = empirical_distribution(&generators::path(3), 3, 200, 1).unwrap();
        assert_eq!(p.mass.len(), 1);
        assert!((p.mass.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_is_schedule_independent() {
        let g = generators::erdos_renyi(60, 0.1, 5);
        let a = empirical_distribution(&g, 4, 3000, 2).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| empirical_distribution(&g, 4, 3000, 2).unwrap());
        assert_eq!(a.sample_count, b.sample_count);
        for (k, p) in &a.mass {
            assert!((p - b.get(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn tree_demo_formula_and_bounds() {
        let r = tree_demo(3, 500, 20, 0).unwrap();
        // every 3-vertex tree is a path, which no swap can change
        assert_eq!(r.accuracy, 0.5);
        let r = tree_demo(8, 2000, 20, 1).unwrap();
        assert!((r.accuracy - (1.0 - r.connected_fraction_randomized / 2.0)).abs() < 1e-12);
        assert!((0.5..=1.0).contains(&r.accuracy));
        assert!(tree_demo(2, 10, 20, 0).is_err());
        assert_eq!(tree_demo(8, 2000, 20, 1).unwrap(), r);
    }

    #[test]
    fn curve_csv() {
        let r = tree_demo(5, 100, 20, 0).unwrap();
        let mut buf = Vec::new();
        write_tree_curve(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,accuracy,stderr\n5,"));
    }
}

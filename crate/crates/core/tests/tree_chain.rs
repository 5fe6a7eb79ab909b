//! Exact law of the randomized 5-vertex tree, computed by propagating the
//! successful-swap Markov chain over edge multisets, against the Monte-Carlo
//! tree experiment.

use std::collections::{BTreeSet, HashMap};

use iscale_core::generators::prufer_decode;
use iscale_core::graph::{is_connected, Graph, VertexId};
use iscale_core::oracle::tree_demo;

type State = Vec<(VertexId, VertexId)>;

fn swap_moves(state: &State) -> Vec<State> {
    let mut out = Vec::new();
    for i in 0..state.len() {
        for j in i + 1..state.len() {
            for (fi, fj) in [(false, false), (false, true), (true, false), (true, true)] {
                let (mut u, mut v) = state[i];
                let (mut x, mut y) = state[j];
                if fi {
                    std::mem::swap(&mut u, &mut v);
                }
                if fj {
                    std::mem::swap(&mut x, &mut y);
                }
                if u == x || u == y || v == x || v == y {
                    continue;
                }
                let mut next = state.clone();
                next[i] = (u.min(x), u.max(x));
                next[j] = (v.min(y), v.max(y));
                next.sort_unstable();
                out.push(next);
            }
        }
    }
    out
}

fn connected(state: &State, n: usize) -> bool {
    is_connected(&Graph::from_edges(n, state.iter().copied()).unwrap())
}

/// Probability that the tree's copy after `steps` successful swaps is connected.
fn exact_connected_probability(tree: State, n: usize, steps: usize) -> f64 {
    if swap_moves(&tree).is_empty() {
        return 1.0;
    }
    let mut law: HashMap<State, f64> = HashMap::from([(tree, 1.0)]);
    let mut moves: HashMap<State, Vec<State>> = HashMap::new();
    for _ in 0..steps {
        let mut next: HashMap<State, f64> = HashMap::new();
        for (s, p) in law {
            let m = moves.entry(s.clone()).or_insert_with(|| swap_moves(&s));
            let w = p / m.len() as f64;
            for t in m.iter() {
                *next.entry(t.clone()).or_default() += w;
            }
        }
        law = next;
    }
    law.iter().filter(|(s, _)| connected(s, n)).map(|(_, p)| p).sum()
}

fn all_trees(t: usize) -> Vec<State> {
    let mut seqs: Vec<Vec<VertexId>> = vec![Vec::new()];
    for _ in 0..t - 2 {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                (0..t as VertexId).map(move |x| {
                    let mut s = s.clone();
                    s.push(x);
                    s
                })
            })
            .collect();
    }
    seqs.into_iter()
        .map(|s| {
            let mut e = prufer_decode(&s, t).unwrap();
            e.sort_unstable();
            e
        })
        .collect()
}

#[test]
fn prufer_enumeration_covers_every_labeled_tree() {
    let trees: BTreeSet<State> = all_trees(5).into_iter().collect();
    assert_eq!(trees.len(), 125);
}

#[test]
fn reachable_states_from_a_path() {
    let start: State = vec![(0, 1), (1, 2), (2, 3), (3, 4)];
    let mut seen: BTreeSet<State> = BTreeSet::from([start.clone()]);
    let mut frontier = vec![start];
    while let Some(s) = frontier.pop() {
        for t in swap_moves(&s) {
            if seen.insert(t.clone()) {
                frontier.push(t);
            }
        }
    }
    // labeled multigraphs with degrees (1, 2, 2, 2, 1), the path included
    assert_eq!(seen.len(), 10);
    assert!(seen.iter().all(|s| s.iter().all(|(u, v)| u != v)));
}

#[test]
fn five_vertex_demo_matches_exact_chain() {
    let t = 5;
    let q = 20;
    let trees = all_trees(t);
    let exact_f: f64 = trees
        .iter()
        .map(|tr| exact_connected_probability(tr.clone(), t, q * (t - 1)))
        .sum::<f64>()
        / trees.len() as f64;
    let exact_accuracy = 1.0 - exact_f / 2.0;

    let r = tree_demo(t, 200_000, q as u32, 17).unwrap();
    let se = r.stderr.max(1e-4);
    assert!(
        (r.accuracy - exact_accuracy).abs() < 4.0 * se,
        "simulated {} vs exact {exact_accuracy} (se {se})",
        r.accuracy
    );
}

#![allow(dead_code)]

use provision_core::similarity::CallGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph with up to `max_nodes` nodes over a small alphabet.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, alphabet: usize, density: f64) -> CallGraph {
    let n = rng.random_range(0..=max_nodes);
    let labels: Vec<String> = (0..n).map(|_| format!("f{}", rng.random_range(0..alphabet))).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    CallGraph::from_indexed(labels, edges).unwrap()
}

/// Tree-shaped call graph with extra cross calls; every node has a distinct
/// function name.
pub fn app_graph(rng: &mut ChaCha8Rng, prefix: &str, n: usize, extra: usize) -> CallGraph {
    let labels: Vec<String> = (0..n).map(|i| format!("{prefix}::fn{i}")).collect();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    while edges.len() < n - 1 + extra {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v && !edges.contains(&(u, v)) {
            edges.push((u, v));
        }
    }
    CallGraph::from_indexed(labels, edges).unwrap()
}

/// Copy of `g` with `k` edges removed at random.
pub fn drop_edges(g: &CallGraph, k: usize, rng: &mut ChaCha8Rng) -> CallGraph {
    let mut edges = g.edges().to_vec();
    edges.shuffle(rng);
    edges.truncate(edges.len().saturating_sub(k));
    let labels = g.nodes().iter().map(|n| n.label.clone()).collect();
    CallGraph::from_indexed(labels, edges).unwrap()
}

/// Copy of `g` with roughly `fraction` of its size perturbed: some edges
/// dropped, some added, one node relabeled.
pub fn distort(g: &CallGraph, fraction: f64, rng: &mut ChaCha8Rng) -> CallGraph {
    let budget = ((g.node_count() + g.edge_count()) as f64 * fraction).floor() as usize;
    let mut labels: Vec<String> = g.nodes().iter().map(|n| n.label.clone()).collect();
    let mut edges = g.edges().to_vec();
    let mut spent = 0;
    if budget > 0 && !labels.is_empty() {
        let i = rng.random_range(0..labels.len());
        labels[i] = format!("{}_v2", labels[i]);
        spent += 1;
    }
    let n = labels.len();
    while spent < budget {
        if rng.random_bool(0.5) && !edges.is_empty() {
            let i = rng.random_range(0..edges.len());
            edges.swap_remove(i);
            spent += 1;
        } else if n > 1 {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            if u != v && !edges.contains(&(u, v)) {
                edges.push((u, v));
                spent += 1;
            }
        }
    }
    CallGraph::from_indexed(labels, edges).unwrap()
}

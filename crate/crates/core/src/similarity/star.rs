use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::graph::CallGraph;

/// A node label with the multiset of its neighbors' labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarStructure {
    pub root_label: String,
    /// Sorted.
    pub neighbor_labels: Vec<String>,
}

impl StarStructure {
    pub fn new<S: Into<String>>(root: S, neighbors: Vec<S>) -> Self {
        let mut neighbor_labels: Vec<String> = neighbors.into_iter().map(Into::into).collect();
        neighbor_labels.sort();
        StarStructure {
            root_label: root.into(),
            neighbor_labels,
        }
    }
}

/// One star per node, in node order. Direction is ignored.
pub fn star_decomposition(g: &CallGraph) -> Vec<StarStructure> {
    g.undirected_neighbors()
        .iter()
        .enumerate()
        .map(|(i, adj)| StarStructure::new(g.label(i), adj.iter().map(|&j| g.label(j)).collect()))
        .collect()
}

/// Size of the intersection of two sorted multisets.
fn common<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn leaf_distance(l1: usize, l2: usize, shared: usize) -> u64 {
    (l1.abs_diff(l2) + l1.max(l2) - shared) as u64
}

pub fn star_edit_distance(s1: &StarStructure, s2: &StarStructure) -> u64 {
    let relabel = u64::from(s1.root_label != s2.root_label);
    let (l1, l2) = (&s1.neighbor_labels, &s2.neighbor_labels);
    relabel + leaf_distance(l1.len(), l2.len(), common(l1, l2))
}

/// Stars with labels interned to integers; `None` roots are padding.
pub(crate) struct InternedStar {
    root: Option<u32>,
    leaves: Vec<u32>,
}

pub(crate) fn intern_pair(g1: &CallGraph, g2: &CallGraph) -> (Vec<InternedStar>, Vec<InternedStar>) {
    let mut table: HashMap<String, u32> = HashMap::new();
    let mut intern = |g: &CallGraph| -> Vec<InternedStar> {
        let ids: Vec<u32> = g
            .nodes()
            .iter()
            .map(|n| {
                let next = table.len() as u32;
                *table.entry(n.label.clone()).or_insert(next)
            })
            .collect();
        g.undirected_neighbors()
            .iter()
            .enumerate()
            .map(|(i, adj)| {
                let mut leaves: Vec<u32> = adj.iter().map(|&j| ids[j]).collect();
                leaves.sort_unstable();
                InternedStar {
                    root: Some(ids[i]),
                    leaves,
                }
            })
            .collect()
    };
    let a = intern(g1);
    let b = intern(g2);
    (a, b)
}

impl InternedStar {
    pub(crate) fn dummy() -> Self {
        InternedStar {
            root: None,
            leaves: Vec::new(),
        }
    }

    /// Padding roots match nothing, not even each other; two paddings cost 0
    /// since neither stands for a node.
    pub(crate) fn distance(&self, other: &InternedStar) -> u64 {
        let relabel = match (self.root, other.root) {
            (None, None) => return 0,
            (Some(a), Some(b)) => u64::from(a != b),
            _ => 1,
        };
        relabel + leaf_distance(self.leaves.len(), other.leaves.len(), common(&self.leaves, &other.leaves))
    }
}

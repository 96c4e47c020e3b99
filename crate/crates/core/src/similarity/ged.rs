use serde::{Deserialize, Serialize};

use super::graph::CallGraph;
use super::hungarian::min_cost_assignment;
use super::star::{intern_pair, InternedStar};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest graph `exact_ged` accepts.
pub const EXACT_GED_NODE_LIMIT: usize = 8;

/// Node mapping from `g1` into `g2`; `None` deletes the node.
pub type NodeMapping = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq)]
pub struct GedBounds<T> {
    pub lower: T,
    pub upper: u64,
    /// Optimal star-matching cost.
    pub star_cost: u64,
    /// The mapping that achieves `upper`.
    pub mapping: NodeMapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityResult<T> {
    pub ged_lower: T,
    pub ged_upper: T,
    pub ds: T,
    /// Both graphs were empty and `ds` is 0 by convention.
    #[serde(default)]
    pub both_empty: bool,
}

/// Unit edit cost implied by `mapping`: deletions, insertions, relabels and
/// every directed edge not preserved in both directions.
pub fn mapping_cost(g1: &CallGraph, g2: &CallGraph, mapping: &[Option<usize>]) -> u64 {
    let mut inverse = vec![None; g2.node_count()];
    let mut cost = 0u64;
    for (u, &m) in mapping.iter().enumerate() {
        match m {
            Some(j) => {
                inverse[j] = Some(u);
                cost += u64::from(g1.label(u) != g2.label(j));
            }
            None => cost += 1,
        }
    }
    cost += inverse.iter().filter(|m| m.is_none()).count() as u64;
    for &(u, v) in g1.edges() {
        let kept = matches!((mapping[u], mapping[v]), (Some(a), Some(b)) if g2.has_edge(a, b));
        cost += u64::from(!kept);
    }
    for &(a, b) in g2.edges() {
        let kept = matches!((inverse[a], inverse[b]), (Some(u), Some(v)) if g1.has_edge(u, v));
        cost += u64::from(!kept);
    }
    cost
}

fn star_matching(s1: &[InternedStar], s2: &[InternedStar]) -> (u64, Vec<usize>) {
    let n = s1.len().max(s2.len());
    let dummy = InternedStar::dummy();
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let a = s1.get(i).unwrap_or(&dummy);
            (0..n).map(|j| a.distance(s2.get(j).unwrap_or(&dummy)) as i64).collect()
        })
        .collect();
    let a = min_cost_assignment(&cost).expect("square by construction");
    (a.total as u64, a.row_to_col)
}

/// Lower and upper GED bounds from an optimal assignment of star structures.
///
/// The upper bound is the cheapest of three concrete mappings: the one
/// induced by matching `g1` against `g2`, the inverse of the one from
/// matching `g2` against `g1`, and the one pairing nodes by id. Taking both
/// matchings makes the bound symmetric.
pub fn ged_bounds<T: Scalar>(g1: &CallGraph, g2: &CallGraph) -> GedBounds<T> {
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let (s1, s2) = intern_pair(g1, g2);
    let (star_cost, forward) = star_matching(&s1, &s2);
    let (_, backward) = star_matching(&s2, &s1);

    let mut candidates: Vec<NodeMapping> = Vec::with_capacity(3);
    candidates.push((0..n1).map(|i| Some(forward[i]).filter(|&j| j < n2)).collect());
    let mut transposed = vec![None; n1];
    for (j, &i) in backward.iter().enumerate().take(n2) {
        if i < n1 {
            transposed[i] = Some(j);
        }
    }
    candidates.push(transposed);
    candidates.push(g1.nodes().iter().map(|n| g2.node_index(&n.id)).collect());

    let (upper, mapping) = candidates
        .into_iter()
        .map(|m| (mapping_cost(g1, g2, &m), m))
        .min_by_key(|(c, _)| *c)
        .expect("three candidates");
    let degree = g1.max_degree().max(g2.max_degree());
    let denom = (1 + degree).max(4) as u64;
    GedBounds {
        lower: T::from_count(star_cost) / T::from_count(denom),
        upper,
        star_cost,
        mapping,
    }
}

/// Size-normalized upper bound in `[0, 1]`.
pub fn dissimilarity_score<T: Scalar>(g1: &CallGraph, g2: &CallGraph) -> DissimilarityResult<T> {
    let size = (g1.node_count() + g2.node_count() + g1.edge_count() + g2.edge_count()) as u64;
    if size == 0 {
        return DissimilarityResult {
            ged_lower: T::zero(),
            ged_upper: T::zero(),
            ds: T::zero(),
            both_empty: true,
        };
    }
    let b = ged_bounds::<T>(g1, g2);
    let upper = T::from_count(b.upper);
    let mut ds = upper / T::from_count(size);
    if ds > T::one() {
        ds = T::one();
    }
    DissimilarityResult {
        ged_lower: b.lower,
        ged_upper: upper,
        ds,
        both_empty: false,
    }
}

struct Search<'a> {
    adj1: Vec<Vec<bool>>,
    adj2: Vec<Vec<bool>>,
    g1: &'a CallGraph,
    g2: &'a CallGraph,
    mapping: NodeMapping,
    used: Vec<bool>,
    best: u64,
}

impl Search<'_> {
    fn edge_cost(&self, k: usize, target: Option<usize>) -> u64 {
        let mut cost = 0;
        let mut pair = |x: usize, y: usize, fx: Option<usize>, fy: Option<usize>| {
            let e1 = self.adj1[x][y];
            let e2 = matches!((fx, fy), (Some(a), Some(b)) if self.adj2[a][b]);
            let both_mapped = fx.is_some() && fy.is_some();
            cost += if both_mapped { u64::from(e1 != e2) } else { u64::from(e1) };
        };
        pair(k, k, target, target);
        for u in 0..k {
            let fu = self.mapping[u];
            pair(k, u, target, fu);
            pair(u, k, fu, target);
        }
        cost
    }

    fn leaf_cost(&self) -> u64 {
        let inserted = self.used.iter().filter(|u| !**u).count() as u64;
        let loose = self
            .g2
            .edges()
            .iter()
            .filter(|&&(a, b)| !self.used[a] || !self.used[b])
            .count() as u64;
        inserted + loose
    }

    fn run(&mut self, k: usize, cost: u64, free: usize) {
        let remaining = self.g1.node_count() - k;
        if cost + remaining.abs_diff(free) as u64 >= self.best {
            return;
        }
        if k == self.g1.node_count() {
            self.best = self.best.min(cost + self.leaf_cost());
            return;
        }
        for j in 0..self.g2.node_count() {
            if self.used[j] {
                continue;
            }
            let c = cost + u64::from(self.g1.label(k) != self.g2.label(j)) + self.edge_cost(k, Some(j));
            self.used[j] = true;
            self.mapping[k] = Some(j);
            self.run(k + 1, c, free - 1);
            self.used[j] = false;
        }
        let c = cost + 1 + self.edge_cost(k, None);
        self.mapping[k] = None;
        self.run(k + 1, c, free);
    }
}

fn adjacency(g: &CallGraph) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; g.node_count()]; g.node_count()];
    for &(u, v) in g.edges() {
        m[u][v] = true;
    }
    m
}

/// Exact unit-cost GED by branch and bound over node mappings.
pub fn exact_ged(g1: &CallGraph, g2: &CallGraph) -> Result<u64> {
    for g in [g1, g2] {
        if g.node_count() > EXACT_GED_NODE_LIMIT {
            return Err(Error::GraphTooLarge {
                nodes: g.node_count(),
                limit: EXACT_GED_NODE_LIMIT,
            });
        }
    }
    let seed = ged_bounds::<f64>(g1, g2).upper;
    let mut s = Search {
        adj1: adjacency(g1),
        adj2: adjacency(g2),
        g1,
        g2,
        mapping: vec![None; g1.node_count()],
        used: vec![false; g2.node_count()],
        // Strict pruning below needs one past the incumbent.
        best: seed + 1,
    };
    s.run(0, 0, g2.node_count());
    Ok(s.best.min(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn g(labels: Vec<&str>, edges: Vec<(usize, usize)>) -> CallGraph {
        CallGraph::from_indexed(labels, edges).unwrap()
    }

    /// Reference GED: every injection of g1's nodes into g2 plus deletions,
    /// scored by `mapping_cost`. Independent of the pruned search.
    fn brute_ged(g1: &CallGraph, g2: &CallGraph) -> u64 {
        fn go(g1: &CallGraph, g2: &CallGraph, k: usize, m: &mut NodeMapping, used: &mut Vec<bool>, best: &mut u64) {
            if k == g1.node_count() {
                *best = (*best).min(mapping_cost(g1, g2, m));
                return;
            }
            for j in 0..g2.node_count() {
                if !used[j] {
                    used[j] = true;
                    m[k] = Some(j);
                    go(g1, g2, k + 1, m, used, best);
                    used[j] = false;
                }
            }
            m[k] = None;
            go(g1, g2, k + 1, m, used, best);
        }
        let mut best = u64::MAX;
        go(g1, g2, 0, &mut vec![None; g1.node_count()], &mut vec![false; g2.node_count()], &mut best);
        best
    }

    #[test]
    fn hand_checked_examples() {
        let a = g(vec!["a"], vec![]);
        let b = g(vec!["b"], vec![]);
        assert_eq!(exact_ged(&a, &b).unwrap(), 1);
        assert_eq!(ged_bounds::<f64>(&a, &b).upper, 1);
        let tri = g(vec!["a", "b", "c"], vec![(0, 1), (1, 2), (2, 0)]);
        let path = g(vec!["a", "b", "c"], vec![(0, 1), (1, 2)]);
        assert_eq!(exact_ged(&tri, &path).unwrap(), 1);
        let b = ged_bounds::<f64>(&tri, &tri);
        assert_eq!((b.lower, b.upper), (0.0, 0));
    }

    #[test]
    fn distance_to_empty_is_size() {
        let p = g(vec!["a", "b", "c"], vec![(0, 1), (1, 2), (2, 2)]);
        let e = CallGraph::empty();
        assert_eq!(exact_ged(&p, &e).unwrap(), 6);
        assert_eq!(ged_bounds::<f64>(&p, &e).upper, 6);
        assert_eq!(ged_bounds::<f64>(&e, &p).upper, 6);
    }

    #[test]
    fn directed_reversal_costs_two() {
        let fwd = g(vec!["a", "a"], vec![(0, 1)]);
        let rev = g(vec!["a", "b"], vec![(1, 0)]);
        assert_eq!(exact_ged(&fwd, &rev).unwrap(), brute_ged(&fwd, &rev));
    }

    #[test]
    fn branch_and_bound_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let labels = ["a", "b", "c"];
        let random = |rng: &mut rand_chacha::ChaCha8Rng| {
            let n = rng.random_range(0..=5);
            let ls: Vec<&str> = (0..n).map(|_| labels[rng.random_range(0..3)]).collect();
            let mut es = vec![];
            for u in 0..n {
                for v in 0..n {
                    if rng.random_bool(0.3) {
                        es.push((u, v));
                    }
                }
            }
            g(ls, es)
        };
        for _ in 0..60 {
            let (x, y) = (random(&mut rng), random(&mut rng));
            assert_eq!(exact_ged(&x, &y).unwrap(), brute_ged(&x, &y));
        }
    }

    #[test]
    fn size_guard() {
        let big = g(vec!["a"; 9], vec![]);
        assert_eq!(
            exact_ged(&big, &CallGraph::empty()),
            Err(Error::GraphTooLarge { nodes: 9, limit: 8 })
        );
    }

    #[test]
    fn single_relabel_score_is_one_half() {
        let r = dissimilarity_score::<Ratio<i64>>(&g(vec!["a"], vec![]), &g(vec!["b"], vec![]));
        assert_eq!(r.ds, Ratio::new(1, 2));
        assert_eq!(r.ged_lower, Ratio::new(1, 4));
    }

    #[test]
    fn empty_pair_is_flagged() {
        let r = dissimilarity_score::<f64>(&CallGraph::empty(), &CallGraph::empty());
        assert!(r.both_empty);
        assert_eq!(r.ds, 0.0);
    }
}

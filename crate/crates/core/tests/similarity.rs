mod common;

use common::{app_graph, distort, drop_edges, random_graph, rng};
use num_rational::Ratio;
use provision_core::predictor::{layer_dims, FeatureScaling, LossKind, Network, ReplicaModel};
use provision_core::similarity::{
    dissimilarity_score, exact_ged, find_similar, ged_bounds, star_edit_distance, CallGraph, ModelRegistry,
    RegistryEntry, StarStructure,
};
use rand::Rng;

#[test]
fn bounds_bracket_exact_distance() {
    let mut r = rng(2024);
    for _ in 0..300 {
        let g1 = random_graph(&mut r, 6, 3, 0.25);
        let g2 = random_graph(&mut r, 6, 3, 0.25);
        let exact = exact_ged(&g1, &g2).unwrap();
        let b = ged_bounds::<Ratio<i64>>(&g1, &g2);
        assert!(b.lower <= Ratio::from_integer(exact as i64), "{b:?} vs {exact}");
        assert!(exact <= b.upper, "{b:?} vs {exact}");
    }
}

#[test]
fn score_is_symmetric_and_zero_on_self() {
    let mut r = rng(7);
    for _ in 0..100 {
        let g1 = random_graph(&mut r, 12, 4, 0.2);
        let g2 = random_graph(&mut r, 12, 4, 0.2);
        let a = dissimilarity_score::<Ratio<i64>>(&g1, &g2);
        let b = dissimilarity_score::<Ratio<i64>>(&g2, &g1);
        assert_eq!(a, b);
        assert!(a.ds >= Ratio::from_integer(0) && a.ds <= Ratio::from_integer(1));
        assert_eq!(dissimilarity_score::<f64>(&g1, &g1).ds, 0.0);
    }
}

fn random_star(r: &mut rand_chacha::ChaCha8Rng) -> StarStructure {
    let alphabet = ["a", "b", "c", "d"];
    let leaves = (0..r.random_range(0..5)).map(|_| alphabet[r.random_range(0..4)]).collect();
    StarStructure::new(alphabet[r.random_range(0..4)], leaves)
}

#[test]
fn star_distance_is_a_metric() {
    let mut r = rng(99);
    for _ in 0..2000 {
        let (a, b, c) = (random_star(&mut r), random_star(&mut r), random_star(&mut r));
        let (ab, bc, ac) = (star_edit_distance(&a, &b), star_edit_distance(&b, &c), star_edit_distance(&a, &c));
        assert!(ac <= ab + bc);
        assert_eq!(ab, star_edit_distance(&b, &a));
        assert_eq!(ab == 0, a == b);
    }
}

#[test]
fn score_grows_with_edge_deletions_on_average() {
    let mut r = rng(5);
    let base = app_graph(&mut r, "svc", 40, 30);
    let mut means = Vec::new();
    for k in [0, 4, 8, 16, 32] {
        let total: f64 = (0..20)
            .map(|_| dissimilarity_score::<f64>(&base, &drop_edges(&base, k, &mut r)).ds)
            .sum();
        means.push(total / 20.0);
    }
    assert_eq!(means[0], 0.0);
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
}

fn dummy_model() -> ReplicaModel<f64> {
    let net = Network::init(&layer_dims(&[4], 2), 0).unwrap();
    let scaling = FeatureScaling {
        min: [0.5, 512.0, 1.0],
        max: [4.0, 4096.0, 500.0],
    };
    ReplicaModel::new(net, vec![5, 10], scaling, LossKind::Cce).unwrap()
}

fn entry(id: &str, g: CallGraph, model: bool) -> RegistryEntry {
    RegistryEntry {
        app_id: id.into(),
        call_graph: g,
        model: model.then(dummy_model),
    }
}

#[test]
fn candidates_follow_scores() {
    let mut r = rng(11);
    let g = app_graph(&mut r, "app", 30, 10);
    let mut reg = ModelRegistry::new(0.5).unwrap();
    let variants = [0.15, 0.02, 0.08].map(|f| distort(&g, f, &mut r));
    for (i, v) in variants.iter().enumerate() {
        reg.register(entry(&format!("v{i}"), v.clone(), true)).unwrap();
    }
    reg.register(entry("self-no-model", g.clone(), false)).unwrap();
    let found = find_similar(&reg, &g);
    let mut expected: Vec<(f64, String)> = variants
        .iter()
        .enumerate()
        .map(|(i, v)| (dissimilarity_score::<f64>(&g, v).ds, format!("v{i}")))
        .filter(|(ds, _)| *ds < 0.5)
        .collect();
    expected.sort_by(|a, b| a.0.total_cmp(&b.0));
    let got: Vec<(f64, String)> = found.iter().map(|c| (c.score.ds, c.entry.app_id.clone())).collect();
    assert_eq!(got, expected);
    assert_eq!(got[0].1, "v1");
}

#[test]
fn registry_lookup_edges() {
    let g = CallGraph::from_indexed(vec!["a", "b"], vec![(0, 1)]).unwrap();
    assert!(find_similar(&ModelRegistry::default(), &g).is_empty());
    let mut reg = ModelRegistry::default();
    reg.register(entry("same", g.clone(), true)).unwrap();
    assert_eq!(find_similar(&reg, &g)[0].score.ds, 0.0);
    assert!(reg.register(entry("same", g.clone(), true)).is_err());
    reg.set_threshold(0.0).unwrap();
    assert!(find_similar(&reg, &g).is_empty());
    assert!(reg.set_threshold(1.5).is_err());
}

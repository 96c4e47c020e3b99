mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use provision_cli::store::{RegistryIndex, RegistryStore, StoreError};
use provision_core::predictor::ModelArtifact;
use provision_core::similarity::ModelRegistry;
use provision_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn populated(root: &Path) -> RegistryStore {
    let store = RegistryStore::open(root).unwrap();
    let meta = BTreeMap::from([("owner".to_string(), serde_json::json!("team-a"))]);
    store
        .register("alpha", &common::graph("a", 9), Some(&ModelArtifact::from_model(&common::model(1))), meta)
        .unwrap();
    store.register("beta", &common::graph("b", 5), None, BTreeMap::new()).unwrap();
    store
        .register("gamma", &common::graph("c", 12), Some(&ModelArtifact::from_model(&common::model(2))), BTreeMap::new())
        .unwrap();
    store
}

/// Digest over every file under `root`, in path order.
fn tree_hash(root: &Path) -> String {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(&f).unwrap());
    }
    hex::encode(h.finalize())
}

/// Digest of a loaded registry's contents.
fn registry_hash(reg: &ModelRegistry) -> String {
    let mut h = Sha256::new();
    for e in reg.entries() {
        h.update(e.app_id.as_bytes());
        h.update(e.call_graph.to_json().as_bytes());
        if let Some(m) = &e.model {
            h.update(ModelArtifact::from_model(m).to_json().as_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[test]
fn model_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let store = RegistryStore::open(dir.path()).unwrap();
    store.register("app", &common::graph("a", 4), None, BTreeMap::new()).unwrap();
    let model = common::model(7);
    store.persist_model("app", &model).unwrap();
    let back = store.load_model("app").unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (cpus, mem, rate) = (rng.random_range(0.1..8.0), rng.random_range(64.0..8192.0), rng.random_range(0.1..500.0));
        let p = model.probabilities(cpus, mem, rate).unwrap();
        let q = back.probabilities(cpus, mem, rate).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
        assert_eq!(model.predict_replicas(cpus, mem, rate).unwrap(), back.predict_replicas(cpus, mem, rate).unwrap());
    }
}

#[test]
fn missing_ids_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    assert!(matches!(store.load_model("nope"), Err(StoreError::NotFound(_))));
    assert!(matches!(store.load_model("beta"), Err(StoreError::NotFound(_))));
    assert!(matches!(store.persist_model("nope", &common::model(1)), Err(StoreError::NotFound(_))));
    assert!(matches!(store.load_graph("nope"), Err(StoreError::NotFound(_))));
}

#[test]
fn duplicate_and_bad_ids_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    let g = common::graph("x", 3);
    assert!(matches!(store.register("alpha", &g, None, BTreeMap::new()), Err(StoreError::Conflict(_))));
    assert!(matches!(
        store.register("../escape", &g, None, BTreeMap::new()),
        Err(StoreError::Core(Error::InvalidInput(_)))
    ));
}

#[test]
fn truncated_model_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    let path = dir.path().join("models/alpha.json");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    match store.load_model("alpha") {
        Err(StoreError::Core(Error::Integrity { field, .. })) => assert_eq!(field, "artifact"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(store.load_registry(0.2), Err(StoreError::Core(Error::Integrity { .. }))));
    // Other entries stay readable.
    store.load_model("gamma").unwrap();
}

#[test]
fn damaged_model_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    let path = dir.path().join("models/gamma.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    v["weights"][0].as_array_mut().unwrap().pop();
    fs::write(&path, v.to_string()).unwrap();
    match store.load_model("gamma") {
        Err(StoreError::Core(Error::Integrity { field, .. })) => assert_eq!(field, "weights[0]"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn dangling_index_reference_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    populated(dir.path());
    fs::remove_file(dir.path().join("graphs/beta.json")).unwrap();
    match RegistryStore::open(dir.path()) {
        Err(StoreError::Core(Error::Integrity { field, detail })) => {
            assert_eq!(field, "applications");
            assert!(detail.contains("beta"), "{detail}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn crash_between_stage_and_commit_keeps_prior_index() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    let before = fs::read(store.index_path()).unwrap();
    let prior = store.index().unwrap();

    let mut next = prior.clone();
    next.applications.clear();
    let staged = store.stage_index(&next).unwrap();
    assert!(staged.temp_path().exists());
    // The process dies here: the rename never happens.
    drop(staged);

    assert_eq!(fs::read(store.index_path()).unwrap(), before);
    let reopened = RegistryStore::open(dir.path()).unwrap();
    assert_eq!(reopened.index().unwrap(), prior);
    assert_eq!(reopened.load_registry(0.2).unwrap().len(), 3);

    // A later write replaces the leftover temporary file.
    reopened.register("delta", &common::graph("d", 3), None, BTreeMap::new()).unwrap();
    assert_eq!(reopened.index().unwrap().applications.len(), 4);
}

#[test]
fn committed_stage_replaces_index() {
    let dir = tempfile::tempdir().unwrap();
    let store = populated(dir.path());
    store.stage_index(&RegistryIndex::default()).unwrap().commit().unwrap();
    assert!(store.index().unwrap().applications.is_empty());
}

#[test]
fn restart_preserves_contents() {
    let dir = tempfile::tempdir().unwrap();
    let (files, contents) = {
        let store = populated(dir.path());
        (tree_hash(dir.path()), registry_hash(&store.load_registry(0.2).unwrap()))
    };
    let store = RegistryStore::open(dir.path()).unwrap();
    assert_eq!(tree_hash(dir.path()), files);
    assert_eq!(registry_hash(&store.load_registry(0.2).unwrap()), contents);
    let ids: Vec<_> = store.list().unwrap().into_iter().map(|s| s.id).collect();
    assert_eq!(ids, ["alpha", "beta", "gamma"]);
}

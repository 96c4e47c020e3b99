#![allow(dead_code)]

use provision_core::predictor::{layer_dims, FeatureScaling, LossKind};
use provision_core::similarity::CallGraph;
use provision_core::simulator::{PlatformParams, SloPolicy};
use provision_core::{ConfigSpace, ContainerConfig, FunctionSpec, Network, PriceTable, ReplicaModel};
use serde_json::{json, Value};

pub fn params() -> PlatformParams {
    PlatformParams {
        image_fetch_time: 0.2,
        boot_time_per_container: 0.1,
        boot_parallelism: 4,
        cpu_work_units: 0.1,
        mem_floor_mb: 256,
        service_jitter: 0.05,
        seed: 0,
    }
}

pub fn space() -> ConfigSpace {
    let containers = [ContainerConfig::new(512, 0.5).unwrap(), ContainerConfig::new(1024, 1.0).unwrap()];
    ConfigSpace::grid(&containers, &(2..=8).collect::<Vec<_>>()).unwrap()
}

pub fn spec(id: &str) -> FunctionSpec {
    FunctionSpec::new(id, 6.5, 30.0, 150).unwrap()
}

pub fn prices() -> PriceTable {
    PriceTable::new(1e-3, 1e-6).unwrap()
}

pub fn policy() -> SloPolicy {
    SloPolicy {
        verify_seeds: 5,
        ..SloPolicy::default()
    }
}

/// Untrained but well-formed; planning only needs its class labels to fit.
pub fn model(seed: u64) -> ReplicaModel {
    let net = Network::init(&layer_dims(&[8], 4), seed).unwrap();
    let scaling = FeatureScaling {
        min: [0.5, 512.0, 5.0],
        max: [1.0, 1024.0, 50.0],
    };
    ReplicaModel::new(net, vec![2, 4, 6, 8], scaling, LossKind::Cce).unwrap()
}

pub fn graph(prefix: &str, n: usize) -> CallGraph {
    let labels: Vec<String> = (0..n).map(|i| format!("{prefix}.f{}", i % 4)).collect();
    let edges = (1..n).map(|i| ((i - 1) / 2, i)).collect();
    CallGraph::from_indexed(labels, edges).unwrap()
}

pub fn plan_request(id: &str) -> Value {
    json!({
        "spec": spec(id),
        "space": space(),
        "prices": prices(),
        "policy": policy(),
        "seed": 3,
        "params": params(),
    })
}

mod common;

use common::{app_graph, rng};
use provision_core::configurator::{profile_sweep, provision, select_configuration, Provenance, ProvisionRequest};
use provision_core::predictor::{layer_dims, train, Network, TrainingConfig};
use provision_core::similarity::{ModelRegistry, RegistryEntry};
use provision_core::simulator::{build_dataset, DatasetGrid, PlatformParams, SloPolicy};
use provision_core::{ConfigSpace, ContainerConfig, FunctionSpec, PriceTable, ReplicaModel};

fn params() -> PlatformParams {
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

fn space() -> ConfigSpace {
    let containers = [ContainerConfig::new(512, 0.5).unwrap(), ContainerConfig::new(1024, 1.0).unwrap()];
    ConfigSpace::grid(&containers, &(2..=8).collect::<Vec<_>>()).unwrap()
}

fn spec(id: &str) -> FunctionSpec {
    FunctionSpec::new(id, 6.5, 30.0, 150).unwrap()
}

fn model() -> ReplicaModel {
    let grid = DatasetGrid {
        space: space(),
        rates: (1..=10).map(|k| 5.0 * k as f64).collect(),
        params: params(),
        spec_template: spec("t"),
        runs_per_cell: 3,
        replica_classes: vec![2, 4, 6, 8],
        seed: 1,
        policy: SloPolicy::default(),
    };
    let data = build_dataset(&grid).unwrap();
    let net = Network::init(&layer_dims(&[8], 4), 1).unwrap();
    let cfg = TrainingConfig {
        epochs: 300,
        learning_rate: 0.05,
        validation_fraction: 0.5,
        ..TrainingConfig::default()
    };
    train(net, &data, &cfg).unwrap().0
}

fn request(id: &str, graph: Option<provision_core::similarity::CallGraph>) -> ProvisionRequest {
    ProvisionRequest {
        spec: spec(id),
        call_graph: graph,
        space: space(),
        prices: PriceTable::new(1e-3, 1e-6).unwrap(),
        policy: SloPolicy {
            verify_seeds: 5,
            ..SloPolicy::default()
        },
        seed: 3,
    }
}

#[test]
fn resolution_order() {
    let g = app_graph(&mut rng(1), "svc", 15, 5);
    let m = model();
    let mut reg = ModelRegistry::default();
    reg.register(RegistryEntry {
        app_id: "known".into(),
        call_graph: g.clone(),
        model: Some(m.clone()),
    })
    .unwrap();

    let own = provision(&request("known", None), &reg, &params()).unwrap();
    assert_eq!(own.provenance, Provenance::TrainedModel { app_id: "known".into() });

    let twin = provision(&request("twin", Some(g.clone())), &reg, &params()).unwrap();
    assert_eq!(
        twin.provenance,
        Provenance::SimilarModel {
            app_id: "known".into(),
            ds: 0.0
        }
    );
    let direct = select_configuration(&request("twin", None), &m, &params()).unwrap();
    assert_eq!(twin.configuration, direct.configuration);
    assert_eq!(twin.candidates, direct.candidates);

    let stranger = app_graph(&mut rng(2), "other", 15, 5);
    let fresh = provision(&request("fresh", Some(stranger)), &reg, &params()).unwrap();
    assert_eq!(fresh.provenance, Provenance::Profiled);
    let sweep = profile_sweep(&request("fresh", None), &params()).unwrap();
    assert_eq!(fresh.configuration, sweep.configuration);
    assert_eq!(fresh.cost, sweep.cost);
}

#[test]
fn provisioning_is_deterministic() {
    let mut reg = ModelRegistry::default();
    reg.register(RegistryEntry {
        app_id: "known".into(),
        call_graph: app_graph(&mut rng(1), "svc", 10, 2),
        model: Some(model()),
    })
    .unwrap();
    let a = provision(&request("known", None), &reg, &params()).unwrap();
    let b = provision(&request("known", None), &reg, &params()).unwrap();
    assert_eq!(a, b);
    assert!(a.satisfiable);
    assert!(a.cost >= 0.0);
    assert!(a.predicted_wct.total <= spec("known").slo_deadline);
}

#[test]
fn incompatible_borrowed_model_is_skipped() {
    let g = app_graph(&mut rng(1), "svc", 10, 2);
    let mut reg = ModelRegistry::default();
    let mut foreign = model();
    foreign.class_labels = vec![20, 40, 60, 80];
    reg.register(RegistryEntry {
        app_id: "foreign".into(),
        call_graph: g.clone(),
        model: Some(foreign),
    })
    .unwrap();
    let plan = provision(&request("new", Some(g)), &reg, &params()).unwrap();
    assert_eq!(plan.provenance, Provenance::Profiled);
}

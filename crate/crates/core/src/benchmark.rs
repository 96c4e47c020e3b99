//! Synthetic workload profiles and the end-to-end savings experiment.

use serde::{Deserialize, Serialize};

use crate::configurator::{naive_max_plan, provision, ProvisionRequest, ProvisioningPlan};
use crate::error::{Error, Result};
use crate::model::cost_savings;
use crate::predictor::{layer_dims, train, Network, TrainingConfig, TrainingReport};
use crate::similarity::{CallGraph, ModelRegistry, RegistryEntry};
use crate::simulator::{build_dataset, DatasetGrid, LabeledDataset, PlatformParams, SloPolicy};
use crate::{ConfigSpace, ContainerConfig, FunctionSpec, PriceTable};

pub const REPLICA_CLASSES: [u32; 6] = [5, 10, 15, 20, 25, 30];

/// A function, the platform it runs on and the choices available to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProfile {
    pub name: String,
    pub spec: FunctionSpec,
    pub params: PlatformParams,
    pub space: ConfigSpace,
    pub prices: PriceTable,
    pub policy: SloPolicy,
    /// Dataset rates, as multiples of the spec's target rate.
    pub rate_multipliers: Vec<f64>,
}

fn containers() -> Vec<ContainerConfig> {
    [(512, 0.5), (1024, 1.0), (2048, 2.0), (4096, 4.0)]
        .into_iter()
        .map(|(mem, cpus)| ContainerConfig::new(mem, cpus).expect("valid shape"))
        .collect()
}

fn standard_space() -> ConfigSpace {
    let replicas: Vec<u32> = (5..=30).collect();
    ConfigSpace::grid(&containers(), &replicas).expect("valid grid")
}

fn multipliers() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

/// Short CPU-light requests at a high rate.
pub fn matmul_like() -> BenchmarkProfile {
    BenchmarkProfile {
        name: "matmul-like".into(),
        spec: FunctionSpec::new("matmul", 22.0, 400.0, 8000).expect("valid spec"),
        params: PlatformParams {
            image_fetch_time: 0.5,
            boot_time_per_container: 0.2,
            boot_parallelism: 8,
            cpu_work_units: 0.02,
            mem_floor_mb: 256,
            service_jitter: 0.1,
            seed: 0,
        },
        space: standard_space(),
        prices: PriceTable::new(1e-3, 1e-6).expect("valid prices"),
        policy: SloPolicy::default(),
        rate_multipliers: multipliers(),
    }
}

/// Long CPU-heavy requests at a low rate; small containers run out of memory.
pub fn pearsons_like() -> BenchmarkProfile {
    BenchmarkProfile {
        name: "pearsons-like".into(),
        spec: FunctionSpec::new("pearsons", 22.0, 40.0, 800).expect("valid spec"),
        params: PlatformParams {
            image_fetch_time: 1.0,
            boot_time_per_container: 0.3,
            boot_parallelism: 8,
            cpu_work_units: 1.25,
            mem_floor_mb: 1024,
            service_jitter: 0.1,
            seed: 0,
        },
        space: standard_space(),
        prices: PriceTable::new(1e-3, 1e-6).expect("valid prices"),
        policy: SloPolicy::default(),
        rate_multipliers: multipliers(),
    }
}

pub fn profiles() -> Vec<BenchmarkProfile> {
    vec![matmul_like(), pearsons_like()]
}

pub fn profile_by_name(name: &str) -> Result<BenchmarkProfile> {
    profiles()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::invalid(format!("unknown benchmark profile {name:?}")))
}

impl BenchmarkProfile {
    pub fn rates(&self) -> Vec<f64> {
        self.rate_multipliers.iter().map(|m| m * self.spec.target_rate).collect()
    }

    pub fn dataset_grid(&self, runs_per_cell: u32, seed: u64) -> DatasetGrid {
        DatasetGrid {
            space: self.space.clone(),
            rates: self.rates(),
            params: self.params.clone(),
            spec_template: self.spec.clone(),
            runs_per_cell,
            replica_classes: REPLICA_CLASSES.to_vec(),
            seed,
            policy: self.policy,
        }
    }

    pub fn request(&self, call_graph: Option<CallGraph>, seed: u64) -> ProvisionRequest {
        ProvisionRequest {
            spec: self.spec.clone(),
            call_graph,
            space: self.space.clone(),
            prices: self.prices,
            policy: self.policy,
            seed,
        }
    }
}

/// Training settings that fit the small per-profile datasets.
pub fn benchmark_training(seed: u64) -> TrainingConfig {
    TrainingConfig {
        learning_rate: 0.05,
        epochs: 2000,
        batch_size: 8,
        validation_fraction: 0.2,
        seed,
        ..TrainingConfig::default()
    }
}

pub const BENCHMARK_HIDDEN: [usize; 2] = [32, 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRow {
    pub profile: String,
    pub plan: ProvisioningPlan,
    pub baseline: ProvisioningPlan,
    pub savings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRun {
    pub dataset: LabeledDataset,
    pub training: TrainingReport,
    pub row: SavingsRow,
}

/// Builds the profile's dataset, trains a model, registers it and compares
/// the provisioned plan against the naive maximum.
pub fn run_savings(profile: &BenchmarkProfile, runs_per_cell: u32, seed: u64) -> Result<SavingsRun> {
    let dataset = build_dataset(&profile.dataset_grid(runs_per_cell, seed))?;
    let net = Network::init(&layer_dims(&BENCHMARK_HIDDEN, REPLICA_CLASSES.len()), seed)?;
    let (model, training) = train(net, &dataset, &benchmark_training(seed))?;
    let mut registry = ModelRegistry::default();
    registry.register(RegistryEntry {
        app_id: profile.spec.id.clone(),
        call_graph: CallGraph::empty(),
        model: Some(model),
    })?;
    let req = profile.request(None, seed);
    let plan = provision(&req, &registry, &profile.params)?;
    let baseline = naive_max_plan(&req, &profile.params)?;
    let savings = cost_savings(plan.cost, baseline.cost)?;
    Ok(SavingsRun {
        dataset,
        training,
        row: SavingsRow {
            profile: profile.name.clone(),
            plan,
            baseline,
            savings,
        },
    })
}

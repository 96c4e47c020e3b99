//! SLO-driven provisioning for serverless functions.
//!
//! Given a request rate and a completion deadline, the toolkit picks the
//! cheapest replica count and container shape that meets both. Known
//! applications use a trained replica classifier; unseen ones borrow the
//! classifier of the most similar registered application by call-graph
//! edit distance, and fall back to profiling in the simulator.

pub mod benchmark;
pub mod configurator;
pub mod error;
pub mod model;
pub mod predictor;
pub mod scalar;
pub mod similarity;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    cost_savings, mean_execution_time, meets_slo, plan_cost, workload_completion_time,
    ArrivalPattern,
};
pub use scalar::{Real, Scalar};

pub type FunctionSpec = model::FunctionSpec<f64>;
pub type ContainerConfig = model::ContainerConfig<f64>;
pub type Configuration = model::Configuration<f64>;
pub type ConfigSpace = model::ConfigSpace<f64>;
pub type ExecutionProfile = model::ExecutionProfile<f64>;
pub type WctBreakdown = model::WctBreakdown<f64>;
pub type PriceTable = model::PriceTable<f64>;

pub type Network = predictor::Network<f64>;
pub type ReplicaModel = predictor::ReplicaModel<f64>;
pub type DissimilarityResult = similarity::DissimilarityResult<f64>;

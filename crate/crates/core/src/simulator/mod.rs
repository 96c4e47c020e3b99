//! Discrete-event FaaS platform simulator.
//!
//! Containers cold-start in parallel batches, then a single shared FCFS
//! dispatch queue feeds homogeneous replicas. Timestamps are integer
//! nanoseconds so event times compose exactly; results are reported in
//! seconds.

mod dataset;
mod engine;
mod measure;
mod trace;

pub use dataset::{build_dataset, DatasetGrid, DatasetRow, LabeledDataset, DATASET_VERSION};
pub use engine::{simulate, PlatformParams, SimResult};
pub use measure::{mean_arrival_span, measure, measure_throughput, Measurement, SloPolicy};
pub use trace::{generate_trace, WorkloadTrace};

/// Mixes `parts` into `base` with SplitMix64 finalization so each grid
/// position or run gets its own stream independent of evaluation order.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts
        .iter()
        .fold(mix(base), |acc, &p| mix(acc ^ mix(p.wrapping_add(1))))
}

pub(crate) const NANOS_PER_SEC: f64 = 1e9;

pub(crate) fn to_nanos(secs: f64) -> u64 {
    (secs * NANOS_PER_SEC).round() as u64
}

pub(crate) fn to_secs(nanos: u64) -> f64 {
    nanos as f64 / NANOS_PER_SEC
}

use serde::{Deserialize, Serialize};

use super::{derive_seed, generate_trace, simulate, to_nanos, to_secs, PlatformParams, SimResult};
use crate::error::{Error, Result};
use crate::{Configuration, FunctionSpec};

/// How simulated runs are judged against a function's SLO.
///
/// A run sustains the target rate when its throughput reaches
/// `(1 - rate_tolerance) * target_rate`. Arrivals are spread over the whole
/// batch at the target rate, so even an unbounded platform finishes one
/// service time after the last arrival; the tolerance absorbs that drain
/// tail. A configuration verifies when at least `min_pass_fraction` of
/// `verify_seeds` seeded runs meet both the deadline and the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SloPolicy {
    pub rate_tolerance: f64,
    pub verify_seeds: u32,
    pub min_pass_fraction: f64,
}

impl Default for SloPolicy {
    fn default() -> Self {
        SloPolicy {
            rate_tolerance: 0.05,
            verify_seeds: 20,
            min_pass_fraction: 0.95,
        }
    }
}

impl SloPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate_tolerance) {
            return Err(Error::invalid("rate_tolerance must lie in [0, 1)"));
        }
        if self.verify_seeds == 0 {
            return Err(Error::invalid("verify_seeds must be >= 1"));
        }
        if !(self.min_pass_fraction > 0.0 && self.min_pass_fraction <= 1.0) {
            return Err(Error::invalid("min_pass_fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn sustains(&self, throughput: f64, target_rate: f64) -> bool {
        throughput >= (1.0 - self.rate_tolerance) * target_rate
    }

    /// Deadline and rate check for one run.
    pub fn run_passes(&self, run: &SimResult, spec: &FunctionSpec) -> bool {
        run.failed == 0
            && run.makespan <= spec.slo_deadline
            && self.sustains(run.throughput, spec.target_rate)
    }
}

/// Aggregate over independently seeded runs of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub runs: u32,
    pub mean_throughput: f64,
    pub mean_makespan: f64,
    pub mean_init_time: f64,
    pub mean_queue_time: f64,
    /// Mean of per-run mean service times; zero when nothing was served.
    pub mean_service_time: f64,
    /// Fraction of runs passing [`SloPolicy::run_passes`].
    pub pass_fraction: f64,
}

// Shifted mean: exact when every value is identical.
fn mean(values: &[f64]) -> f64 {
    let first = values[0];
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

/// Seconds spanned by the batch when offered at the target rate.
pub(crate) fn horizon(spec: &FunctionSpec) -> f64 {
    spec.request_count as f64 / spec.target_rate
}

/// Simulates `runs` seeded traces of `spec`'s workload against `cfg`.
pub fn measure(
    cfg: &Configuration,
    params: &PlatformParams,
    spec: &FunctionSpec,
    runs: u32,
    seed: u64,
    policy: &SloPolicy,
) -> Result<Measurement> {
    if runs == 0 {
        return Err(Error::invalid("runs must be >= 1"));
    }
    spec.validate()?;
    let results = (0..runs as u64)
        .map(|i| {
            let trace = generate_trace(
                spec.arrival_pattern,
                spec.target_rate,
                horizon(spec),
                derive_seed(seed, &[i, 0]),
            )?;
            let run_params = PlatformParams {
                seed: derive_seed(seed, &[i, 1]),
                ..params.clone()
            };
            simulate(&trace, cfg, &run_params)
        })
        .collect::<Result<Vec<_>>>()?;

    let pick = |f: fn(&SimResult) -> f64| mean(&results.iter().map(f).collect::<Vec<_>>());
    let passed = results.iter().filter(|r| policy.run_passes(r, spec)).count();
    Ok(Measurement {
        runs,
        mean_throughput: pick(|r| r.throughput),
        mean_makespan: pick(|r| r.makespan),
        mean_init_time: pick(|r| r.init_time),
        mean_queue_time: pick(|r| r.mean_queue_time),
        mean_service_time: pick(|r| r.mean_service_time().unwrap_or(0.0)),
        pass_fraction: passed as f64 / runs as f64,
    })
}

/// Mean first-to-last arrival span of the traces [`measure`] would use. No
/// configuration can finish a run sooner, so this bounds every makespan.
pub fn mean_arrival_span(spec: &FunctionSpec, runs: u32, seed: u64) -> Result<f64> {
    if runs == 0 {
        return Err(Error::invalid("runs must be >= 1"));
    }
    spec.validate()?;
    let spans = (0..runs as u64)
        .map(|i| {
            let trace = generate_trace(
                spec.arrival_pattern,
                spec.target_rate,
                horizon(spec),
                derive_seed(seed, &[i, 0]),
            )?;
            let first = to_nanos(trace.arrivals[0]);
            let last = to_nanos(*trace.arrivals.last().expect("non-empty"));
            Ok(to_secs(last - first))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&spans))
}

/// Mean throughput over `runs` seeded traces at the spec's target rate.
pub fn measure_throughput(
    cfg: &Configuration,
    params: &PlatformParams,
    spec: &FunctionSpec,
    runs: u32,
    seed: u64,
) -> Result<f64> {
    Ok(measure(cfg, params, spec, runs, seed, &SloPolicy::default())?.mean_throughput)
}

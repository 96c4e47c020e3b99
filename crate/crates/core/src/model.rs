//! Functions, containers, configurations and the completion-time / cost model.
//!
//! Everything here is generic over [`Scalar`], so the same formulas run on
//! `f64` for planning and on exact rationals in tests. The crate root exposes
//! `f64` aliases for the types used by the rest of the toolkit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest container memory allocation accepted, in MB.
pub const MIN_MEMORY_MB: u32 = 64;

/// Shape of the request arrivals generated for a workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalPattern {
    #[default]
    Constant,
    Poisson,
    Bursty,
}

impl FromStr for ArrivalPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ArrivalPattern::Constant),
            "poisson" => Ok(ArrivalPattern::Poisson),
            "bursty" => Ok(ArrivalPattern::Bursty),
            other => Err(Error::invalid(format!("unknown arrival pattern `{other}`"))),
        }
    }
}

impl fmt::Display for ArrivalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrivalPattern::Constant => "constant",
            ArrivalPattern::Poisson => "poisson",
            ArrivalPattern::Bursty => "bursty",
        })
    }
}

/// A serverless function together with its SLO: a batch of `request_count`
/// requests offered at `target_rate` that must complete within `slo_deadline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec<T> {
    pub id: String,
    /// Seconds.
    pub slo_deadline: T,
    /// Requests per second.
    pub target_rate: T,
    pub request_count: u64,
    #[serde(default)]
    pub arrival_pattern: ArrivalPattern,
}

impl<T: Scalar> FunctionSpec<T> {
    pub fn new(
        id: impl Into<String>,
        slo_deadline: T,
        target_rate: T,
        request_count: u64,
    ) -> Result<Self> {
        let spec = FunctionSpec {
            id: id.into(),
            slo_deadline,
            target_rate,
            request_count,
            arrival_pattern: ArrivalPattern::Constant,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_pattern(mut self, pattern: ArrivalPattern) -> Self {
        self.arrival_pattern = pattern;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slo_deadline > T::zero()) {
            return Err(Error::invalid("slo_deadline must be > 0"));
        }
        if !(self.target_rate > T::zero()) {
            return Err(Error::invalid("target_rate must be > 0"));
        }
        if self.request_count == 0 {
            return Err(Error::invalid("request_count must be >= 1"));
        }
        Ok(())
    }
}

/// Per-replica container resources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainerConfig<T> {
    pub memory_mb: u32,
    pub cpus: T,
}

impl<T: Scalar> ContainerConfig<T> {
    pub fn new(memory_mb: u32, cpus: T) -> Result<Self> {
        let c = ContainerConfig { memory_mb, cpus };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_mb < MIN_MEMORY_MB {
            return Err(Error::invalid(format!(
                "memory_mb must be >= {MIN_MEMORY_MB}, got {}",
                self.memory_mb
            )));
        }
        if !(self.cpus > T::zero()) {
            return Err(Error::invalid("cpus must be > 0"));
        }
        Ok(())
    }
}

/// A homogeneous deployment: `replicas` copies of one container shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration<T> {
    pub replicas: u32,
    pub container: ContainerConfig<T>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(replicas: u32, memory_mb: u32, cpus: T) -> Result<Self> {
        let cfg = Configuration {
            replicas,
            container: ContainerConfig { memory_mb, cpus },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be >= 1"));
        }
        self.container.validate()
    }

    /// Total CPUs across all replicas.
    pub fn total_cpus(&self) -> T {
        self.container.cpus * T::from_count(self.replicas as u64)
    }
}

/// The finite set of candidate configurations for a function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpace<T> {
    pub options: Vec<Configuration<T>>,
}

impl<T: Scalar> ConfigSpace<T> {
    pub fn new(options: Vec<Configuration<T>>) -> Result<Self> {
        let space = ConfigSpace { options };
        space.validate()?;
        Ok(space)
    }

    /// Cartesian product of container shapes and replica counts, containers
    /// outermost.
    pub fn grid(containers: &[ContainerConfig<T>], replicas: &[u32]) -> Result<Self> {
        let options = containers
            .iter()
            .flat_map(|&container| {
                replicas.iter().map(move |&r| Configuration {
                    replicas: r,
                    container,
                })
            })
            .collect();
        Self::new(options)
    }

    pub fn validate(&self) -> Result<()> {
        if self.options.is_empty() {
            return Err(Error::invalid("configuration space is empty"));
        }
        for (i, cfg) in self.options.iter().enumerate() {
            cfg.validate()?;
            if self.options[..i].iter().any(|other| other == cfg) {
                return Err(Error::invalid(format!(
                    "duplicate configuration ({} replicas, {} MB, {:?} cpus)",
                    cfg.replicas, cfg.container.memory_mb, cfg.container.cpus
                )));
            }
        }
        Ok(())
    }

    /// Distinct container shapes in first-appearance order.
    pub fn containers(&self) -> Vec<ContainerConfig<T>> {
        let mut out: Vec<ContainerConfig<T>> = Vec::new();
        for cfg in &self.options {
            if !out.contains(&cfg.container) {
                out.push(cfg.container);
            }
        }
        out
    }

    /// Replica counts offered for `container`, ascending.
    pub fn replicas_for(&self, container: &ContainerConfig<T>) -> Vec<u32> {
        let mut counts: Vec<u32> = self
            .options
            .iter()
            .filter(|cfg| &cfg.container == container)
            .map(|cfg| cfg.replicas)
            .collect();
        counts.sort_unstable();
        counts.dedup();
        counts
    }

    pub fn contains(&self, cfg: &Configuration<T>) -> bool {
        self.options.contains(cfg)
    }
}

/// Observed execution times of a function and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionProfile<T> {
    pub samples: Vec<T>,
    pub mean_exec: T,
}

impl<T: Scalar> ExecutionProfile<T> {
    pub fn from_samples(samples: Vec<T>) -> Result<Self> {
        if samples.iter().any(|&s| s < T::zero()) {
            return Err(Error::invalid("execution time samples must be >= 0"));
        }
        let mean_exec = mean_execution_time(&samples)?;
        Ok(ExecutionProfile { samples, mean_exec })
    }
}

/// Workload completion time split into its three components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WctBreakdown<T> {
    pub init_time: T,
    pub service_time: T,
    pub queue_time: T,
    pub total: T,
}

/// Linear resource-seconds pricing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable<T> {
    /// Currency per CPU-second.
    pub cpu_price: T,
    /// Currency per MB-second.
    pub mem_price: T,
}

impl<T: Scalar> PriceTable<T> {
    pub fn new(cpu_price: T, mem_price: T) -> Result<Self> {
        let p = PriceTable {
            cpu_price,
            mem_price,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cpu_price < T::zero() || self.mem_price < T::zero() {
            return Err(Error::invalid("prices must be >= 0"));
        }
        Ok(())
    }
}

/// Arithmetic mean of the samples.
pub fn mean_execution_time<T: Scalar>(samples: &[T]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot take the mean of zero samples"));
    }
    let sum = samples.iter().fold(T::zero(), |acc, &s| acc + s);
    Ok(sum / T::from_count(samples.len() as u64))
}

/// `init + mean_exec * N / replicas + queue`.
pub fn workload_completion_time<T: Scalar>(
    profile: &ExecutionProfile<T>,
    cfg: &Configuration<T>,
    spec: &FunctionSpec<T>,
    init_time: T,
    queue_time: T,
) -> Result<WctBreakdown<T>> {
    if init_time < T::zero() || queue_time < T::zero() {
        return Err(Error::invalid("init and queue time must be >= 0"));
    }
    cfg.validate()?;
    let service_time = profile.mean_exec * T::from_count(spec.request_count)
        / T::from_count(cfg.replicas as u64);
    Ok(WctBreakdown {
        init_time,
        service_time,
        queue_time,
        total: init_time + service_time + queue_time,
    })
}

/// Inclusive deadline check.
pub fn meets_slo<T: Scalar>(wct: &WctBreakdown<T>, spec: &FunctionSpec<T>) -> bool {
    wct.total <= spec.slo_deadline
}

/// `replicas * (cpus * cpu_price + memory_mb * mem_price) * running_time`.
pub fn plan_cost<T: Scalar>(cfg: &Configuration<T>, running_time: T, prices: &PriceTable<T>) -> T {
    let per_replica = cfg.container.cpus * prices.cpu_price
        + T::from_count(cfg.container.memory_mb as u64) * prices.mem_price;
    T::from_count(cfg.replicas as u64) * per_replica * running_time
}

/// Fraction of `baseline` saved by `selected`.
pub fn cost_savings<T: Scalar>(selected: T, baseline: T) -> Result<T> {
    if !(baseline > T::zero()) {
        return Err(Error::invalid("baseline cost must be > 0"));
    }
    Ok((baseline - selected) / baseline)
}

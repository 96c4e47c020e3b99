use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{to_nanos, to_secs, WorkloadTrace};
use crate::error::{Error, Result};
use crate::Configuration;

/// Platform behaviour shared by every configuration of one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformParams {
    /// Seconds to pull the function image, paid once per cold start.
    pub image_fetch_time: f64,
    /// Seconds to boot one batch of containers.
    pub boot_time_per_container: f64,
    /// Containers booted concurrently per batch.
    pub boot_parallelism: u32,
    /// CPU-seconds of work per request, independent of the configuration.
    pub cpu_work_units: f64,
    /// Containers with less memory than this fail every request.
    pub mem_floor_mb: u32,
    /// Service times are scaled by `1 + U(-jitter, jitter)`.
    pub service_jitter: f64,
    pub seed: u64,
}

impl PlatformParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("image_fetch_time", self.image_fetch_time),
            ("boot_time_per_container", self.boot_time_per_container),
        ];
        for (name, v) in durations {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be a finite duration >= 0")));
            }
        }
        if self.boot_parallelism == 0 {
            return Err(Error::invalid("boot_parallelism must be >= 1"));
        }
        if !(self.cpu_work_units.is_finite() && self.cpu_work_units > 0.0) {
            return Err(Error::invalid("cpu_work_units must be > 0"));
        }
        if !(self.service_jitter.is_finite() && (0.0..1.0).contains(&self.service_jitter)) {
            return Err(Error::invalid("service_jitter must lie in [0, 1)"));
        }
        Ok(())
    }

    /// `image_fetch_time + boot_time_per_container * ceil(replicas / boot_parallelism)`.
    pub fn init_time(&self, replicas: u32) -> f64 {
        to_secs(self.init_nanos(replicas))
    }

    fn boot_batches(&self, replicas: u32) -> u64 {
        replicas.div_ceil(self.boot_parallelism) as u64
    }

    fn init_nanos(&self, replicas: u32) -> u64 {
        to_nanos(self.image_fetch_time)
            + to_nanos(self.boot_time_per_container) * self.boot_batches(replicas)
    }

    /// Mean service time of one request on `cpus` CPUs.
    pub fn base_service_time(&self, cpus: f64) -> f64 {
        self.cpu_work_units / cpus
    }
}

/// Measurements from one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Successfully served requests per second of makespan.
    pub throughput: f64,
    /// Last completion minus first arrival, seconds.
    pub makespan: f64,
    pub init_time: f64,
    /// Mean wait between a request becoming dispatchable and its start.
    pub mean_queue_time: f64,
    /// Completion minus arrival, per served request in arrival order.
    pub per_request_latency: Vec<f64>,
    /// Service time per served request in arrival order.
    pub per_request_service: Vec<f64>,
    pub served: u64,
    pub failed: u64,
}

impl SimResult {
    pub fn mean_service_time(&self) -> Option<f64> {
        if self.per_request_service.is_empty() {
            None
        } else {
            Some(self.per_request_service.iter().sum::<f64>() / self.per_request_service.len() as f64)
        }
    }
}

// Declaration order is the tie-break order at equal timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Completion,
    Arrival,
    Boot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    at: u64,
    kind: EventKind,
    seq: u64,
    // Replica index for completions, batch index for boots.
    target: u32,
}

struct Replica {
    // Request currently in service.
    serving: Option<usize>,
}

/// Runs the trace through `cfg` on the platform described by `params`.
pub fn simulate(
    trace: &WorkloadTrace,
    cfg: &Configuration,
    params: &PlatformParams,
) -> Result<SimResult> {
    if trace.is_empty() {
        return Err(Error::invalid("cannot simulate an empty trace"));
    }
    trace.validate()?;
    cfg.validate()?;
    params.validate()?;

    let n = trace.len();
    let init_nanos = params.init_nanos(cfg.replicas);

    if cfg.container.memory_mb < params.mem_floor_mb {
        return Ok(SimResult {
            throughput: 0.0,
            makespan: 0.0,
            init_time: to_secs(init_nanos),
            mean_queue_time: 0.0,
            per_request_latency: Vec::new(),
            per_request_service: Vec::new(),
            served: 0,
            failed: n as u64,
        });
    }

    let arrivals: Vec<u64> = trace.arrivals.iter().map(|&t| to_nanos(t)).collect();
    let first = arrivals[0];
    let base_service = params.base_service_time(cfg.container.cpus);
    let jitter = params.service_jitter;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut seq = 0u64;
    let fetch = to_nanos(params.image_fetch_time);
    let boot = to_nanos(params.boot_time_per_container);
    let batches = params.boot_batches(cfg.replicas);
    for b in 0..batches {
        heap.push(Reverse(Event {
            at: first + fetch + boot * (b + 1),
            kind: EventKind::Boot,
            seq,
            target: b as u32,
        }));
        seq += 1;
    }

    let mut replicas: Vec<Replica> = (0..cfg.replicas).map(|_| Replica { serving: None }).collect();
    // Free replicas in the order they became free.
    let mut free: VecDeque<u32> = VecDeque::with_capacity(cfg.replicas as usize);
    let mut waiting: VecDeque<usize> = VecDeque::new();
    let mut ready_at: Option<u64> = None;

    let mut start = vec![0u64; n];
    let mut finish = vec![0u64; n];
    let mut queue_wait_total: u128 = 0;
    let mut next_arrival = 0usize;
    let mut completed = 0usize;

    while completed < n {
        let take_arrival = match (heap.peek(), arrivals.get(next_arrival)) {
            (None, None) => break,
            (None, Some(_)) => true,
            (Some(_), None) => false,
            (Some(Reverse(ev)), Some(&at)) => (at, EventKind::Arrival) < (ev.at, ev.kind),
        };

        let now;
        if take_arrival {
            now = arrivals[next_arrival];
            waiting.push_back(next_arrival);
            next_arrival += 1;
        } else {
            let Reverse(ev) = heap.pop().expect("peeked");
            now = ev.at;
            match ev.kind {
                EventKind::Completion => {
                    let rep = &mut replicas[ev.target as usize];
                    let req = rep.serving.take().expect("completion on busy replica");
                    finish[req] = now;
                    completed += 1;
                    free.push_back(ev.target);
                }
                EventKind::Boot => {
                    if ev.target as u64 + 1 == batches {
                        ready_at = Some(now);
                        free.extend(0..cfg.replicas);
                    }
                }
                EventKind::Arrival => unreachable!("arrivals are not queued in the heap"),
            }
        }

        // Work-conserving FCFS dispatch to the earliest-free replica.
        if let Some(ready) = ready_at {
            while !waiting.is_empty() && !free.is_empty() {
                let req = waiting.pop_front().expect("non-empty");
                let rep = free.pop_front().expect("non-empty");
                let factor = if jitter > 0.0 {
                    1.0 + rng.random_range(-jitter..=jitter)
                } else {
                    1.0
                };
                let service = to_nanos(base_service * factor).max(1);
                start[req] = now;
                queue_wait_total += (now - arrivals[req].max(ready)) as u128;
                replicas[rep as usize].serving = Some(req);
                heap.push(Reverse(Event {
                    at: now + service,
                    kind: EventKind::Completion,
                    seq,
                    target: rep,
                }));
                seq += 1;
            }
        }
    }

    let last = finish.iter().copied().max().unwrap_or(first);
    let makespan = to_secs(last - first);
    let per_request_latency = (0..n).map(|i| to_secs(finish[i] - arrivals[i])).collect();
    let per_request_service = (0..n).map(|i| to_secs(finish[i] - start[i])).collect();
    let throughput = if makespan > 0.0 { n as f64 / makespan } else { 0.0 };

    Ok(SimResult {
        throughput,
        makespan,
        init_time: to_secs(init_nanos),
        mean_queue_time: queue_wait_total as f64 / n as f64 / super::NANOS_PER_SEC,
        per_request_latency,
        per_request_service,
        served: n as u64,
        failed: 0,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ArrivalPattern;

/// Number of alternating high/low epochs in a bursty trace.
const BURST_EPOCHS: usize = 10;
const BURST_HIGH: f64 = 1.5;
const BURST_LOW: f64 = 0.5;

/// Request arrival timestamps in seconds from epoch 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadTrace {
    pub pattern_tag: ArrivalPattern,
    pub arrivals: Vec<f64>,
}

impl WorkloadTrace {
    pub fn new(pattern_tag: ArrivalPattern, arrivals: Vec<f64>) -> Result<Self> {
        let trace = WorkloadTrace {
            pattern_tag,
            arrivals,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arrivals.is_empty() {
            return Err(Error::invalid("trace has no arrivals"));
        }
        if self.arrivals.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("arrival timestamps must be finite and >= 0"));
        }
        if self.arrivals.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("arrival timestamps must be non-decreasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// All requests arriving together at t = 0.
    pub fn burst(count: usize) -> Self {
        WorkloadTrace {
            pattern_tag: ArrivalPattern::Constant,
            arrivals: vec![0.0; count.max(1)],
        }
    }
}

fn exp_gap(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // 1 - U lies in (0, 1], keeping ln finite.
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Generates arrivals over `[0, horizon)`. The first request always arrives
/// at t = 0.
pub fn generate_trace(
    pattern: ArrivalPattern,
    rate: f64,
    horizon: f64,
    seed: u64,
) -> Result<WorkloadTrace> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("rate must be > 0"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arrivals = match pattern {
        ArrivalPattern::Constant => {
            let count = ((rate * horizon) + 1e-9).floor().max(1.0) as usize;
            (0..count).map(|i| i as f64 / rate).collect()
        }
        ArrivalPattern::Poisson => {
            let mut out = vec![0.0];
            let mut t = exp_gap(&mut rng, rate);
            while t < horizon {
                out.push(t);
                t += exp_gap(&mut rng, rate);
            }
            out
        }
        ArrivalPattern::Bursty => {
            let epoch = horizon / BURST_EPOCHS as f64;
            let mut out = vec![0.0];
            for k in 0..BURST_EPOCHS {
                let start = k as f64 * epoch;
                let end = start + epoch;
                let r = rate * if k % 2 == 0 { BURST_HIGH } else { BURST_LOW };
                let mut t = start + exp_gap(&mut rng, r);
                while t < end {
                    out.push(t);
                    t += exp_gap(&mut rng, r);
                }
            }
            out
        }
    };
    WorkloadTrace::new(pattern, arrivals)
}

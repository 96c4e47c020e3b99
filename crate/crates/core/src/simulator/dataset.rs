use serde::{Deserialize, Serialize};

use super::{derive_seed, measure, PlatformParams, SloPolicy};
use crate::error::{Error, Result};
use crate::{ConfigSpace, Configuration, FunctionSpec};

pub const DATASET_VERSION: u32 = 1;

/// One training example: `[cpus, memory_mb, request_rate]` and the index of
/// the smallest sufficient replica class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub features: [f64; 3],
    pub label: usize,
    /// No class met the SLO; the row carries the largest class.
    #[serde(default)]
    pub unsatisfiable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub version: u32,
    /// Replica counts, ascending; labels index into this.
    pub class_labels: Vec<u32>,
    pub rows: Vec<DatasetRow>,
}

impl LabeledDataset {
    pub fn new(class_labels: Vec<u32>, rows: Vec<DatasetRow>) -> Result<Self> {
        let ds = LabeledDataset {
            version: DATASET_VERSION,
            class_labels,
            rows,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_labels.is_empty() {
            return Err(Error::invalid("dataset has no classes"));
        }
        if self.class_labels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("class labels must be strictly ascending"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.label >= self.class_labels.len() {
                return Err(Error::invalid(format!("row {i}: label {} out of range", row.label)));
            }
            if row.features.iter().any(|f| !f.is_finite() || *f <= 0.0) {
                return Err(Error::invalid(format!("row {i}: features must be finite and > 0")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_replicas(&self, row: &DatasetRow) -> u32 {
        self.class_labels[row.label]
    }
}

/// Everything needed to sweep the simulator into a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetGrid {
    /// Only the distinct container shapes are used.
    pub space: ConfigSpace,
    pub rates: Vec<f64>,
    pub params: PlatformParams,
    /// Deadline and arrival pattern apply to every cell; the request count
    /// scales with the cell rate so the batch always spans the same horizon.
    pub spec_template: FunctionSpec,
    pub runs_per_cell: u32,
    pub replica_classes: Vec<u32>,
    pub seed: u64,
    #[serde(default)]
    pub policy: SloPolicy,
}

fn cell_spec(template: &FunctionSpec, rate: f64) -> FunctionSpec {
    let scaled = (template.request_count as f64 * rate / template.target_rate).round();
    FunctionSpec {
        target_rate: rate,
        request_count: (scaled as u64).max(1),
        ..template.clone()
    }
}

/// Labels every (container, rate) cell with the smallest replica class whose
/// mean throughput sustains the rate and whose mean makespan meets the
/// deadline. Rows are ordered container-major in space order.
pub fn build_dataset(grid: &DatasetGrid) -> Result<LabeledDataset> {
    if grid.rates.is_empty() {
        return Err(Error::invalid("rate grid is empty"));
    }
    if grid.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid("rates must be finite and > 0"));
    }
    if grid.replica_classes.is_empty() {
        return Err(Error::invalid("no replica classes"));
    }
    if grid.replica_classes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("replica classes must be strictly ascending"));
    }
    grid.space.validate()?;
    grid.params.validate()?;
    grid.spec_template.validate()?;
    grid.policy.validate()?;

    let containers = grid.space.containers();
    let mut rows = Vec::with_capacity(containers.len() * grid.rates.len());
    for (ci, container) in containers.iter().enumerate() {
        for (ri, &rate) in grid.rates.iter().enumerate() {
            let spec = cell_spec(&grid.spec_template, rate);
            // Classes in one cell share traces so they compete on equal terms.
            let seed = derive_seed(grid.seed, &[ci as u64, ri as u64]);
            let mut label = None;
            for (k, &replicas) in grid.replica_classes.iter().enumerate() {
                let cfg = Configuration {
                    replicas,
                    container: *container,
                };
                let m = measure(&cfg, &grid.params, &spec, grid.runs_per_cell, seed, &grid.policy)?;
                if grid.policy.sustains(m.mean_throughput, rate) && m.mean_makespan <= spec.slo_deadline {
                    label = Some(k);
                    break;
                }
            }
            rows.push(DatasetRow {
                features: [container.cpus, container.memory_mb as f64, rate],
                label: label.unwrap_or(grid.replica_classes.len() - 1),
                unsatisfiable: label.is_none(),
            });
        }
    }
    LabeledDataset::new(grid.replica_classes.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ContainerConfig;

    fn grid(rates: Vec<f64>) -> DatasetGrid {
        let containers = [
            ContainerConfig::new(512, 0.5).unwrap(),
            ContainerConfig::new(1024, 1.0).unwrap(),
        ];
        DatasetGrid {
            space: ConfigSpace::grid(&containers, &[5]).unwrap(),
            rates,
            params: PlatformParams {
                image_fetch_time: 0.2,
                boot_time_per_container: 0.05,
                boot_parallelism: 8,
                cpu_work_units: 0.05,
                mem_floor_mb: 256,
                service_jitter: 0.0,
                seed: 0,
            },
            spec_template: FunctionSpec::new("f", 11.0, 100.0, 1000).unwrap(),
            runs_per_cell: 2,
            replica_classes: vec![5, 10, 15, 20, 25, 30],
            seed: 4,
            policy: SloPolicy::default(),
        }
    }

    #[test]
    fn minimal_class_when_five_suffice() {
        let mut g = grid(vec![20.0]);
        g.space = ConfigSpace::grid(&[ContainerConfig::new(1024, 1.0).unwrap()], &[5]).unwrap();
        let ds = build_dataset(&g).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.rows[0].label, 0);
        assert!(!ds.rows[0].unsatisfiable);
        assert_eq!(ds.rows[0].features, [1.0, 1024.0, 20.0]);
    }

    #[test]
    fn saturated_cell_is_flagged() {
        // 30 replicas of 0.5 CPU serve 300 req/s at most.
        let mut g = grid(vec![5000.0]);
        g.space = ConfigSpace::grid(&[ContainerConfig::new(512, 0.5).unwrap()], &[5]).unwrap();
        let ds = build_dataset(&g).unwrap();
        assert_eq!(ds.rows[0].label, 5);
        assert!(ds.rows[0].unsatisfiable);
    }

    #[test]
    fn labels_monotone_in_rate() {
        let ds = build_dataset(&grid(vec![25.0, 50.0, 100.0, 150.0, 200.0, 300.0])).unwrap();
        for config_rows in ds.rows.chunks(6) {
            assert!(config_rows.windows(2).all(|w| w[0].label <= w[1].label));
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(build_dataset(&grid(vec![])).is_err());
        let mut g = grid(vec![10.0]);
        g.replica_classes.clear();
        assert!(build_dataset(&g).is_err());
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss, one_hot, LossKind};
use super::network::{Gradients, Network};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::{DatasetRow, LabeledDataset};

/// Number of input features: cpus, memory_mb, request rate.
pub const FEATURES: usize = 3;

/// Per-feature min-max bounds mapping inputs onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling<T> {
    pub min: [T; FEATURES],
    pub max: [T; FEATURES],
}

impl<T: Real> FeatureScaling<T> {
    pub fn fit(rows: &[DatasetRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("cannot fit scaling on zero rows"));
        }
        let mut min = [T::infinity(); FEATURES];
        let mut max = [T::neg_infinity(); FEATURES];
        for row in rows {
            for f in 0..FEATURES {
                let v = T::lit(row.features[f]);
                min[f] = min[f].min(v);
                max[f] = max[f].max(v);
            }
        }
        Ok(FeatureScaling { min, max })
    }

    /// Scaled features and whether any input fell outside the bounds and was
    /// clamped.
    pub fn apply(&self, raw: [T; FEATURES]) -> ([T; FEATURES], bool) {
        let mut out = [T::zero(); FEATURES];
        let mut clamped = false;
        for f in 0..FEATURES {
            let span = self.max[f] - self.min[f];
            let v = if span > T::zero() {
                (raw[f] - self.min[f]) / span
            } else {
                // Constant feature in training: carries no information.
                T::zero()
            };
            if v < T::zero() || v > T::one() {
                clamped = true;
            }
            out[f] = v.max(T::zero()).min(T::one());
        }
        (out, clamped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub loss_kind: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Clamped to the training-set size.
    pub batch_size: usize,
    /// Fraction of each class held out, rounded down per class.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Fitted on the training rows when absent.
    pub feature_scaling: Option<FeatureScaling<f64>>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            loss_kind: LossKind::Cce,
            learning_rate: 0.01,
            epochs: 300,
            batch_size: 32,
            validation_fraction: 0.2,
            seed: 0,
            feature_scaling: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub loss_kind: LossKind,
    pub history: Vec<EpochMetrics>,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub final_heldout_accuracy: f64,
    pub final_heldout_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub replicas: u32,
    pub class_index: usize,
    /// Some input lay outside the training bounds and was clamped.
    pub clamped: bool,
}

/// A trained classifier with the class labels and feature bounds it needs to
/// answer replica-count queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaModel<T> {
    pub network: Network<T>,
    pub class_labels: Vec<u32>,
    pub scaling: FeatureScaling<T>,
    pub loss_kind: LossKind,
}

/// Index of the largest entry; the first one on ties.
pub fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> ReplicaModel<T> {
    pub fn new(
        network: Network<T>,
        class_labels: Vec<u32>,
        scaling: FeatureScaling<T>,
        loss_kind: LossKind,
    ) -> Result<Self> {
        if network.input_dim() != FEATURES {
            return Err(Error::invalid(format!("network input dim must be {FEATURES}")));
        }
        if network.output_dim() != class_labels.len() {
            return Err(Error::IncompatibleModel(format!(
                "network has {} outputs for {} classes",
                network.output_dim(),
                class_labels.len()
            )));
        }
        Ok(ReplicaModel {
            network,
            class_labels,
            scaling,
            loss_kind,
        })
    }

    fn scaled(&self, raw: [f64; FEATURES]) -> ([T; FEATURES], bool) {
        self.scaling.apply(raw.map(T::lit))
    }

    pub fn probabilities(&self, cpus: f64, memory_mb: f64, rate: f64) -> Result<Vec<T>> {
        let (x, _) = self.scaled([cpus, memory_mb, rate]);
        self.network.forward(&x)
    }

    /// Replica count of the most probable class.
    pub fn predict_replicas(&self, cpus: f64, memory_mb: f64, rate: f64) -> Result<Prediction> {
        let raw = [cpus, memory_mb, rate];
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        let (x, clamped) = self.scaled(raw);
        let probs = self.network.forward(&x)?;
        let class_index = argmax(&probs);
        Ok(Prediction {
            replicas: self.class_labels[class_index],
            class_index,
            clamped,
        })
    }

    fn check_dataset(&self, data: &LabeledDataset) -> Result<()> {
        if data.class_labels != self.class_labels {
            return Err(Error::IncompatibleModel(format!(
                "dataset classes {:?} differ from model classes {:?}",
                data.class_labels, self.class_labels
            )));
        }
        Ok(())
    }

    /// Accuracy and mean loss over every row.
    pub fn evaluate(&self, data: &LabeledDataset, kind: LossKind) -> Result<Evaluation> {
        self.check_dataset(data)?;
        self.evaluate_rows(&data.rows, kind)
    }

    fn evaluate_rows(&self, rows: &[DatasetRow], kind: LossKind) -> Result<Evaluation> {
        if rows.is_empty() {
            return Err(Error::invalid("cannot evaluate zero rows"));
        }
        let classes = self.class_labels.len();
        let mut correct = 0usize;
        let mut total_loss = 0.0;
        for row in rows {
            let (x, _) = self.scaled(row.features);
            let p = self.network.forward(&x)?;
            if argmax(&p) == row.label {
                correct += 1;
            }
            let l = loss(&p, &one_hot(row.label, classes), kind)?;
            total_loss += l.to_f64().unwrap_or(f64::NAN);
        }
        Ok(Evaluation {
            accuracy: correct as f64 / rows.len() as f64,
            mean_loss: total_loss / rows.len() as f64,
        })
    }
}

/// Per-class split: `floor(fraction * count)` rows of each class go to
/// validation, chosen by a seeded shuffle.
fn stratified_split(data: &LabeledDataset, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in 0..data.class_labels.len() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.rows[i].label == class).collect();
        members.shuffle(rng);
        let held = (fraction * members.len() as f64).floor() as usize;
        validation.extend_from_slice(&members[..held]);
        train.extend_from_slice(&members[held..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    (train, validation)
}

/// Mini-batch gradient descent on `net` with a fixed learning rate.
pub fn train<T: Real>(
    net: Network<T>,
    data: &LabeledDataset,
    cfg: &TrainingConfig,
) -> Result<(ReplicaModel<T>, TrainingReport)> {
    cfg.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if net.output_dim() != data.class_labels.len() {
        return Err(Error::invalid(format!(
            "network has {} outputs but the dataset has {} classes",
            net.output_dim(),
            data.class_labels.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, val_idx) = stratified_split(data, cfg.validation_fraction, &mut rng);
    if val_idx.is_empty() {
        return Err(Error::invalid(
            "validation split is empty; raise validation_fraction or add rows",
        ));
    }
    let train_rows: Vec<DatasetRow> = train_idx.iter().map(|&i| data.rows[i].clone()).collect();
    let val_rows: Vec<DatasetRow> = val_idx.iter().map(|&i| data.rows[i].clone()).collect();

    let scaling = match cfg.feature_scaling {
        Some(s) => FeatureScaling {
            min: s.min.map(T::lit),
            max: s.max.map(T::lit),
        },
        None => FeatureScaling::fit(&train_rows)?,
    };
    let classes = data.class_labels.len();
    let inputs: Vec<[T; FEATURES]> = train_rows.iter().map(|r| scaling.apply(r.features.map(T::lit)).0).collect();
    let targets: Vec<Vec<T>> = train_rows.iter().map(|r| one_hot(r.label, classes)).collect();

    let mut model = ReplicaModel::new(net, data.class_labels.clone(), scaling, cfg.loss_kind)?;
    let batch_size = cfg.batch_size.min(train_rows.len());
    let lr = T::lit(cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let mut grads = Gradients::zeros_like(&model.network);
            for &i in batch {
                grads.accumulate(&model.network.backward(&inputs[i], &targets[i], cfg.loss_kind)?);
            }
            let step = lr / T::from_count(batch.len() as u64);
            model.network.apply(&grads, step);
        }
        let tr = model.evaluate_rows(&train_rows, cfg.loss_kind)?;
        let va = model.evaluate_rows(&val_rows, cfg.loss_kind)?;
        history.push(EpochMetrics {
            train_loss: tr.mean_loss,
            train_accuracy: tr.accuracy,
            validation_loss: va.mean_loss,
            validation_accuracy: va.accuracy,
        });
    }

    let last = *history.last().expect("epochs >= 1");
    let report = TrainingReport {
        loss_kind: cfg.loss_kind,
        history,
        train_rows: train_rows.len(),
        validation_rows: val_rows.len(),
        final_heldout_accuracy: last.validation_accuracy,
        final_heldout_loss: last.validation_loss,
    };
    Ok((model, report))
}

//! Replica-count classifier: a small MLP over `[cpus, memory_mb, rate]`.

mod artifact;
mod loss;
mod network;
mod train;

pub use artifact::{ModelArtifact, ARTIFACT_VERSION};
pub use loss::{loss, one_hot, LossKind, PROB_FLOOR};
pub use network::{softmax, Gradients, Layer, Network};
pub use train::{
    argmax, train, EpochMetrics, Evaluation, FeatureScaling, Prediction, ReplicaModel,
    TrainingConfig, TrainingReport, FEATURES,
};

/// Default hidden widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// `[FEATURES, hidden..., classes]`.
pub fn layer_dims(hidden: &[usize], classes: usize) -> Vec<usize> {
    let mut dims = vec![FEATURES];
    dims.extend_from_slice(hidden);
    dims.push(classes);
    dims
}

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::loss::LossKind;
use super::network::Network;
use super::train::{FeatureScaling, ReplicaModel, FEATURES};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const ARTIFACT_VERSION: u32 = 1;

/// Serialized form of a [`ReplicaModel`]. Parameters are stored as `f64` and
/// survive a JSON round trip bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub class_labels: Vec<u32>,
    pub scaling: FeatureScaling<f64>,
    pub loss_kind: LossKind,
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

impl ModelArtifact {
    pub fn from_model<T: Real>(model: &ReplicaModel<T>) -> Self {
        let layers = model.network.layers();
        ModelArtifact {
            version: ARTIFACT_VERSION,
            layer_dims: model.network.layer_dims(),
            weights: layers.iter().map(|l| to_f64(&l.weights)).collect(),
            biases: layers.iter().map(|l| to_f64(&l.biases)).collect(),
            class_labels: model.class_labels.clone(),
            scaling: FeatureScaling {
                min: model.scaling.min.map(|x| x.to_f64().unwrap_or(f64::NAN)),
                max: model.scaling.max.map(|x| x.to_f64().unwrap_or(f64::NAN)),
            },
            loss_kind: model.loss_kind,
        }
    }

    pub fn into_model<T: Real>(self) -> Result<ReplicaModel<T>> {
        self.check()?;
        let cast = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        let weights = self.weights.into_iter().map(cast).collect();
        let biases = self.biases.into_iter().map(cast).collect();
        let network = Network::from_parts(&self.layer_dims, weights, biases)?;
        let scaling = FeatureScaling {
            min: self.scaling.min.map(T::lit),
            max: self.scaling.max.map(T::lit),
        };
        ReplicaModel::new(network, self.class_labels, scaling, self.loss_kind)
    }

    fn check(&self) -> Result<()> {
        if self.version != ARTIFACT_VERSION {
            return Err(Error::integrity(
                "version",
                format!("unsupported version {}", self.version),
            ));
        }
        if self.layer_dims.first() != Some(&FEATURES) {
            return Err(Error::integrity("layer_dims", format!("input dim must be {FEATURES}")));
        }
        if self.layer_dims.last() != Some(&self.class_labels.len()) {
            return Err(Error::integrity(
                "class_labels",
                format!(
                    "{} labels for an output dim of {:?}",
                    self.class_labels.len(),
                    self.layer_dims.last()
                ),
            ));
        }
        if self.class_labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::integrity("class_labels", "must be strictly increasing"));
        }
        let s = &self.scaling;
        for f in 0..FEATURES {
            if !(s.min[f].is_finite() && s.max[f].is_finite() && s.min[f] <= s.max[f]) {
                return Err(Error::integrity("scaling", format!("bad bounds for feature {f}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    /// Parses and validates an artifact. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::integrity("artifact", format!("malformed JSON: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(Error::integrity("artifact", "expected a JSON object"));
        };
        let artifact = ModelArtifact {
            version: field(&obj, "version")?,
            layer_dims: field(&obj, "layer_dims")?,
            weights: field(&obj, "weights")?,
            biases: field(&obj, "biases")?,
            class_labels: field(&obj, "class_labels")?,
            scaling: field(&obj, "scaling")?,
            loss_kind: field(&obj, "loss_kind")?,
        };
        artifact.check()?;
        // Shape checks live in the network constructor.
        artifact.clone().into_model::<f64>()?;
        Ok(artifact)
    }
}

fn field<D: DeserializeOwned>(obj: &Map<String, Value>, name: &str) -> Result<D> {
    let v = obj.get(name).ok_or_else(|| Error::integrity(name, "missing"))?;
    D::deserialize(v).map_err(|e| Error::integrity(name, e.to_string()))
}

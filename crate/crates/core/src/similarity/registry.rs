use super::ged::{dissimilarity_score, DissimilarityResult};
use super::graph::CallGraph;
use crate::error::{Error, Result};
use crate::predictor::ReplicaModel;

pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub app_id: String,
    pub call_graph: CallGraph,
    pub model: Option<ReplicaModel<f64>>,
}

/// Known applications. Only entries carrying a trained model are candidates
/// for reuse.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRegistry {
    entries: Vec<RegistryEntry>,
    threshold: f64,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        ModelRegistry {
            entries: Vec::new(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarCandidate<'a> {
    pub entry: &'a RegistryEntry,
    pub score: DissimilarityResult<f64>,
}

fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold {t} outside [0, 1]")))
    }
}

impl ModelRegistry {
    pub fn new(threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(ModelRegistry {
            entries: Vec::new(),
            threshold,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn register(&mut self, entry: RegistryEntry) -> Result<()> {
        if entry.app_id.is_empty() {
            return Err(Error::invalid("application id must be non-empty"));
        }
        if self.get(&entry.app_id).is_some() {
            return Err(Error::invalid(format!("application {:?} already registered", entry.app_id)));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Replaces the model of an existing entry.
    pub fn attach_model(&mut self, app_id: &str, model: ReplicaModel<f64>) -> Result<()> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.app_id == app_id)
            .ok_or_else(|| Error::invalid(format!("unknown application {app_id:?}")))?;
        entry.model = Some(model);
        Ok(())
    }

    pub fn get(&self, app_id: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.app_id == app_id)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with a trained model.
    pub fn with_models(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.entries.iter().filter(|e| e.model.is_some())
    }
}

/// Entries with a model whose score against `g` is below the threshold,
/// most similar first. Equal scores keep registration order.
pub fn find_similar<'a>(reg: &'a ModelRegistry, g: &CallGraph) -> Vec<SimilarCandidate<'a>> {
    let mut out: Vec<SimilarCandidate<'a>> = reg
        .with_models()
        .map(|entry| SimilarCandidate {
            entry,
            score: dissimilarity_score(g, &entry.call_graph),
        })
        .filter(|c| c.score.ds < reg.threshold)
        .collect();
    out.sort_by(|a, b| a.score.ds.total_cmp(&b.score.ds));
    out
}

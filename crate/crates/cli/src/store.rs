//! On-disk application registry.
//!
//! Layout under the root directory:
//!
//! ```text
//! index.json            application id -> file names and metadata
//! graphs/<id>.json      call graph documents
//! models/<id>.json      model artifacts
//! ```
//!
//! Every file is replaced by writing a sibling temporary file and renaming
//! it over the target, so readers see either the old or the new content.
//! The index is written last; an interrupted update leaves the previous
//! index in force.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use provision_core::predictor::ModelArtifact;
use provision_core::similarity::{CallGraph, ModelRegistry, RegistryEntry};
use provision_core::ReplicaModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDEX_VERSION: u32 = 1;
const INDEX_FILE: &str = "index.json";
const MAX_ID_LEN: usize = 128;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("application {0:?} not found")]
    NotFound(String),
    #[error("application {0:?} already registered")]
    Conflict(String),
    #[error(transparent)]
    Core(#[from] provision_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type StoreResult<T> = Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn integrity(field: &str, detail: impl Into<String>) -> StoreError {
    StoreError::Core(provision_core::Error::Integrity {
        field: field.into(),
        detail: detail.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub graph_file: String,
    #[serde(default)]
    pub model_file: Option<String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryIndex {
    pub version: u32,
    pub applications: BTreeMap<String, IndexEntry>,
}

impl Default for RegistryIndex {
    fn default() -> Self {
        RegistryIndex {
            version: INDEX_VERSION,
            applications: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationSummary {
    pub id: String,
    pub has_model: bool,
    pub nodes: usize,
    pub edges: usize,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Ids double as file names: 1 to 128 of `[A-Za-z0-9._-]`, not starting
/// with a dot.
pub fn validate_id(id: &str) -> StoreResult<()> {
    let ok = !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::Core(provision_core::Error::InvalidInput(format!(
            "application id {id:?} must be 1-{MAX_ID_LEN} characters of [A-Za-z0-9._-] not starting with '.'"
        ))))
    }
}

/// A fully written temporary file waiting to be renamed into place.
#[derive(Debug)]
pub struct Staged {
    tmp: PathBuf,
    target: PathBuf,
}

impl Staged {
    pub fn commit(self) -> StoreResult<()> {
        fs::rename(&self.tmp, &self.target).map_err(io_err(&self.target))
    }

    pub fn temp_path(&self) -> &Path {
        &self.tmp
    }
}

fn stage(target: &Path, bytes: &[u8]) -> StoreResult<Staged> {
    let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = target.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    Ok(Staged {
        tmp,
        target: target.to_path_buf(),
    })
}

fn write_atomic(target: &Path, bytes: &[u8]) -> StoreResult<()> {
    stage(target, bytes)?.commit()
}

#[derive(Debug, Clone)]
pub struct RegistryStore {
    root: PathBuf,
}

impl RegistryStore {
    /// Opens the store at `root`, creating an empty one if needed.
    pub fn open(root: impl Into<PathBuf>) -> StoreResult<Self> {
        let root = root.into();
        for dir in [root.clone(), root.join("graphs"), root.join("models")] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let store = RegistryStore { root };
        if !store.index_path().exists() {
            store.write_index(&RegistryIndex::default())?;
        }
        store.index()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    /// Reads and checks the index: supported version and no dangling file
    /// references.
    pub fn index(&self) -> StoreResult<RegistryIndex> {
        let path = self.index_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let index: RegistryIndex =
            serde_json::from_str(&text).map_err(|e| integrity("index", e.to_string()))?;
        if index.version != INDEX_VERSION {
            return Err(integrity("version", format!("unsupported index version {}", index.version)));
        }
        for (id, entry) in &index.applications {
            let files = std::iter::once(&entry.graph_file).chain(entry.model_file.as_ref());
            for file in files {
                if !self.root.join(file).is_file() {
                    return Err(integrity("applications", format!("{id}: missing file {file}")));
                }
            }
        }
        Ok(index)
    }

    /// Serializes `index` next to the live one without replacing it.
    pub fn stage_index(&self, index: &RegistryIndex) -> StoreResult<Staged> {
        let text = serde_json::to_string_pretty(index).expect("index serializes");
        stage(&self.index_path(), text.as_bytes())
    }

    fn write_index(&self, index: &RegistryIndex) -> StoreResult<()> {
        self.stage_index(index)?.commit()
    }

    /// Adds an application. The caller serializes writers.
    pub fn register(
        &self,
        id: &str,
        graph: &CallGraph,
        model: Option<&ModelArtifact>,
        metadata: BTreeMap<String, serde_json::Value>,
    ) -> StoreResult<()> {
        validate_id(id)?;
        let mut index = self.index()?;
        if index.applications.contains_key(id) {
            return Err(StoreError::Conflict(id.into()));
        }
        let graph_file = format!("graphs/{id}.json");
        write_atomic(&self.root.join(&graph_file), graph.to_json().as_bytes())?;
        let model_file = match model {
            Some(artifact) => Some(self.write_model_file(id, artifact)?),
            None => None,
        };
        index.applications.insert(
            id.into(),
            IndexEntry {
                graph_file,
                model_file,
                metadata,
            },
        );
        self.write_index(&index)
    }

    fn write_model_file(&self, id: &str, artifact: &ModelArtifact) -> StoreResult<String> {
        let model_file = format!("models/{id}.json");
        write_atomic(&self.root.join(&model_file), artifact.to_json().as_bytes())?;
        Ok(model_file)
    }

    /// Stores or replaces the model of a registered application.
    pub fn persist_model(&self, id: &str, model: &ReplicaModel) -> StoreResult<String> {
        let mut index = self.index()?;
        let entry = index
            .applications
            .get_mut(id)
            .ok_or_else(|| StoreError::NotFound(id.into()))?;
        let file = self.write_model_file(id, &ModelArtifact::from_model(model))?;
        entry.model_file = Some(file.clone());
        self.write_index(&index)?;
        Ok(file)
    }

    pub fn load_model(&self, id: &str) -> StoreResult<ReplicaModel> {
        let index = self.index()?;
        let entry = index.applications.get(id).ok_or_else(|| StoreError::NotFound(id.into()))?;
        let file = entry.model_file.as_ref().ok_or_else(|| StoreError::NotFound(format!("{id} (model)")))?;
        self.read_model(file)
    }

    fn read_model(&self, file: &str) -> StoreResult<ReplicaModel> {
        let path = self.root.join(file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(ModelArtifact::from_json(&text)?.into_model()?)
    }

    pub fn load_graph(&self, id: &str) -> StoreResult<CallGraph> {
        let index = self.index()?;
        let entry = index.applications.get(id).ok_or_else(|| StoreError::NotFound(id.into()))?;
        self.read_graph(&entry.graph_file)
    }

    fn read_graph(&self, file: &str) -> StoreResult<CallGraph> {
        let path = self.root.join(file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(CallGraph::from_json(&text)?)
    }

    pub fn list(&self) -> StoreResult<Vec<ApplicationSummary>> {
        let index = self.index()?;
        index
            .applications
            .iter()
            .map(|(id, entry)| {
                let g = self.read_graph(&entry.graph_file)?;
                Ok(ApplicationSummary {
                    id: id.clone(),
                    has_model: entry.model_file.is_some(),
                    nodes: g.node_count(),
                    edges: g.edge_count(),
                    metadata: entry.metadata.clone(),
                })
            })
            .collect()
    }

    /// Loads every application into an in-memory registry, in id order.
    pub fn load_registry(&self, threshold: f64) -> StoreResult<ModelRegistry> {
        let index = self.index()?;
        let mut registry = ModelRegistry::new(threshold)?;
        for (id, entry) in &index.applications {
            let model = match &entry.model_file {
                Some(file) => Some(self.read_model(file)?),
                None => None,
            };
            registry.register(RegistryEntry {
                app_id: id.clone(),
                call_graph: self.read_graph(&entry.graph_file)?,
                model,
            })?;
        }
        Ok(registry)
    }
}

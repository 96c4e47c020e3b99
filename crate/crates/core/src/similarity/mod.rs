//! Call-graph similarity via star-structure GED bounds.

mod ged;
mod graph;
mod hungarian;
mod registry;
mod star;

pub use ged::{
    dissimilarity_score, exact_ged, ged_bounds, mapping_cost, DissimilarityResult, GedBounds, NodeMapping,
    EXACT_GED_NODE_LIMIT,
};
pub use graph::{CallGraph, Node};
pub use hungarian::{min_cost_assignment, Assignment};
pub use registry::{find_similar, ModelRegistry, RegistryEntry, SimilarCandidate, DEFAULT_THRESHOLD};
pub use star::{star_decomposition, star_edit_distance, StarStructure};

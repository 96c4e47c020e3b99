use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: String,
}

/// Wire form: `{"nodes": [{"id", "label"}], "edges": [["caller", "callee"]]}`.
#[derive(Serialize, Deserialize)]
struct GraphDoc {
    #[serde(default)]
    nodes: Vec<Node>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// A directed, node-labeled call graph. Nodes keep their input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct CallGraph {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
    edge_set: HashSet<(usize, usize)>,
}

impl TryFrom<GraphDoc> for CallGraph {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        CallGraph::new(doc.nodes, doc.edges)
    }
}

impl From<CallGraph> for GraphDoc {
    fn from(g: CallGraph) -> Self {
        let edges = g
            .edges
            .iter()
            .map(|&(u, v)| (g.nodes[u].id.clone(), g.nodes[v].id.clone()))
            .collect();
        GraphDoc { nodes: g.nodes, edges }
    }
}

impl CallGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<(String, String)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node id {:?}", n.id)));
            }
        }
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (a, b) in &edges {
            let lookup = |id: &String| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("edge endpoint {id:?} is not a node")))
            };
            idx_edges.push((lookup(a)?, lookup(b)?));
        }
        Self::assemble(nodes, index, idx_edges)
    }

    /// Builds a graph from labels and index pairs; node `i` gets id `n{i}`.
    pub fn from_indexed<S: Into<String>>(labels: Vec<S>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let nodes: Vec<Node> = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| Node {
                id: format!("n{i}"),
                label: l.into(),
            })
            .collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= nodes.len() || v >= nodes.len()) {
            return Err(Error::invalid(format!("edge ({u}, {v}) out of range")));
        }
        Self::assemble(nodes, index, edges)
    }

    fn assemble(nodes: Vec<Node>, index: HashMap<String, usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut edge_set = HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if !edge_set.insert((u, v)) {
                return Err(Error::invalid(format!(
                    "duplicate edge {:?} -> {:?}",
                    nodes[u].id, nodes[v].id
                )));
            }
        }
        Ok(CallGraph {
            nodes,
            edges,
            index,
            edge_set,
        })
    }

    pub fn empty() -> Self {
        Self::from_indexed(Vec::<String>::new(), vec![]).expect("empty graph is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("call graph: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn label(&self, i: usize) -> &str {
        &self.nodes[i].label
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_set.contains(&(u, v))
    }

    /// Distinct neighbors of every node, ignoring direction and self-loops.
    pub fn undirected_neighbors(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            if u != v {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        adj
    }

    pub fn max_degree(&self) -> usize {
        self.undirected_neighbors().iter().map(BTreeSet::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_document_and_ignores_unknown_fields() {
        let g = CallGraph::from_json(
            r#"{"nodes":[{"id":"m","label":"main","file":"x.py"},{"id":"f","label":"foo"}],
                "edges":[["m","f"]],"extractor":"pycg"}"#,
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        let back = CallGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_bad_documents() {
        let dup_edge = r#"{"nodes":[{"id":"a","label":"a"},{"id":"b","label":"b"}],"edges":[["a","b"],["a","b"]]}"#;
        let dup_node = r#"{"nodes":[{"id":"a","label":"a"},{"id":"a","label":"b"}],"edges":[]}"#;
        let dangling = r#"{"nodes":[{"id":"a","label":"a"}],"edges":[["a","z"]]}"#;
        for doc in [dup_edge, dup_node, dangling] {
            assert!(CallGraph::from_json(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn antiparallel_edges_are_distinct() {
        let g = CallGraph::from_indexed(vec!["a", "b"], vec![(0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.max_degree(), 1);
    }
}

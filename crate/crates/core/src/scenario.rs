//! JSON scenario files.
//!
//! ```json
//! {"schema": "multiple-domains",
//!  "nodes": [{"id": "h0", "sort": "human"}, ...],
//!  "edges": [{"source": "h0", "label": "votedOn", "target": "s0", "weight": 1.0}, ...]}
//! ```
//!
//! Unknown fields are rejected. Output lists nodes by id and edges by
//! `(source, label, target)` so equal networks serialize to equal bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Network, Node, NodeId, Schema, SchemaMode, Sort, Violation, ViolationKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: SchemaMode,
    /// Extra label rules beyond the core schema.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extensions: Vec<LabelRecord>,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub label: String,
    pub source: Sort,
    pub target: Sort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    pub sort: Sort,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub source: NodeId,
    pub label: String,
    pub target: NodeId,
    pub weight: f64,
}

/// A network read from a file, plus the problems that kept parts of the
/// file out of it (duplicate ids, edges to unknown nodes, parallel edges).
#[derive(Debug)]
pub struct Loaded {
    pub network: Network,
    pub load_violations: Vec<Violation>,
}

impl Loaded {
    /// Load-time problems followed by [`Network::validate`] findings.
    pub fn violations(&self) -> Vec<Violation> {
        let mut all = self.load_violations.clone();
        all.extend(self.network.validate());
        all
    }
}

impl ScenarioFile {
    pub fn from_network(network: &Network) -> Self {
        let mut nodes: Vec<NodeRecord> = network
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.id.clone(),
                sort: n.sort,
                owner: n.owner.clone(),
                parent: n.parent.clone(),
                name: n.name.clone(),
                payload: n.payload,
            })
            .collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut edges: Vec<EdgeRecord> = network
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                source: e.source.clone(),
                label: e.label.clone(),
                target: e.target.clone(),
                weight: e.weight,
            })
            .collect();
        edges.sort_by(|a, b| {
            (&a.source, &a.label, &a.target).cmp(&(&b.source, &b.label, &b.target))
        });
        let extensions = network
            .schema()
            .extensions()
            .map(|(label, source, target)| LabelRecord {
                label: label.to_owned(),
                source,
                target,
            })
            .collect();
        ScenarioFile {
            schema: network.schema().mode(),
            extensions,
            nodes,
            edges,
        }
    }

    pub fn into_network(self) -> Loaded {
        let mut schema = Schema::new(self.schema);
        for ext in &self.extensions {
            schema.register(&ext.label, ext.source, ext.target);
        }
        let mut network = Network::with_schema(schema);
        let mut load_violations = Vec::new();
        for rec in self.nodes {
            let node = Node {
                id: rec.id,
                sort: rec.sort,
                owner: rec.owner,
                parent: rec.parent,
                name: rec.name,
                payload: rec.payload,
            };
            if let Err(Error::DuplicateNode(id)) = network.insert_node_unchecked(node) {
                load_violations.push(Violation {
                    kind: ViolationKind::DuplicateNode,
                    subject: id.to_string(),
                    detail: "node id declared more than once".into(),
                });
            }
        }
        for rec in self.edges {
            let subject = format!("({}, {}, {})", rec.source, rec.label, rec.target);
            let result = network.insert_edge_unchecked(Edge {
                source: rec.source,
                label: rec.label,
                target: rec.target,
                weight: rec.weight,
            });
            match result {
                Ok(_) => {}
                Err(Error::UnknownNode(id)) => load_violations.push(Violation {
                    kind: ViolationKind::UnknownNode,
                    subject,
                    detail: format!("endpoint {id} does not exist"),
                }),
                Err(_) => load_violations.push(Violation {
                    kind: ViolationKind::DuplicateEdge,
                    subject,
                    detail: "parallel edge with the same label".into(),
                }),
            }
        }
        Loaded {
            network,
            load_violations,
        }
    }
}

pub fn from_json_str(text: &str) -> Result<Loaded> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    Ok(file.into_network())
}

pub fn to_json_string(network: &Network) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from_network(network))
        .expect("scenario records always serialize");
    text.push('\n');
    text
}

pub fn load(path: impl AsRef<Path>) -> Result<Loaded> {
    from_json_str(&fs::read_to_string(path)?)
}

pub fn save(network: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(network))?;
    Ok(())
}

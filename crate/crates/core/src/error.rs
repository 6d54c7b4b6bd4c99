use std::io;

use thiserror::Error;

use crate::grammar::GrammarError;
use crate::graph::{NodeId, Sort};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{sort} node requires an owner")]
    MissingOwner { sort: Sort },
    #[error("{sort} node requires a parent")]
    MissingParent { sort: Sort },
    #[error("domain node requires a name")]
    MissingName,
    #[error("{sort} node must not carry {field}")]
    UnexpectedField { sort: Sort, field: &'static str },
    #[error("node {id} has sort {found}, expected {expected}")]
    WrongReferentSort {
        id: NodeId,
        expected: Sort,
        found: Sort,
    },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("edge ({source_id}, {label}, {target}) already exists")]
    DuplicateEdge {
        source_id: NodeId,
        label: String,
        target: NodeId,
    },
    #[error("edge weight must be finite and non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("total weight is zero")]
    ZeroTotalWeight,
    #[error("zero vector in cosine similarity")]
    ZeroVector,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),

    #[error("unknown grammar {0:?}")]
    UnknownGrammar(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("node {node} has sort {found}, state {state} applies to {expected}")]
    SortMismatch {
        node: NodeId,
        state: String,
        expected: Sort,
        found: Sort,
    },
    #[error("grammar references node set {0:?} that the context does not bind")]
    UnboundSet(String),

    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(String),
    #[error("no output energy: no particle reached the output set")]
    NoOutputEnergy,

    #[error("unknown problem {0}")]
    UnknownProblem(NodeId),
    #[error("problem {0} has no solutions")]
    NoSolutions(NodeId),
    #[error("no domain categorizes problem {0}")]
    NoCategorizations(NodeId),
    #[error("network has no humans")]
    NoHumans,
    #[error("solution {0} has no numeric payload")]
    MissingPayload(NodeId),

    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

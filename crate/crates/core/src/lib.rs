//! Social decision networks ranked by grammar-constrained particle swarms.
//!
//! A [`Network`] holds humans, their domains of expertise, problems and
//! candidate solutions, linked by typed weighted edges. A
//! [`TraversalGrammar`] says which edges a particle may follow in each
//! state, and the [`swarm`] engine turns particle energy into a ranking.
//! [`aggregation`] wires the built-in grammars into decision procedures.

pub mod aggregation;
pub mod cli;
pub mod error;
pub mod grammar;
pub mod graph;
pub mod scenario;
pub mod swarm;

pub use error::{Error, Result};
pub use grammar::{builtin, parse_grammar, serialize_grammar, Context, EdgeGuard, TraversalGrammar};
pub use graph::{labels, Network, NodeId, SchemaMode, Sort};
pub use swarm::{Mode, RunResult, Swarm, SwarmConfig};

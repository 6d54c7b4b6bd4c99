//! Typed, weighted, labeled multi-relational network.
//!
//! Nodes come in four disjoint sorts: humans, their domains, problems, and
//! the solutions proposed for each problem. Every domain is owned by exactly
//! one human and every solution belongs to exactly one problem. Edges carry a
//! text label and a non-negative weight; a [`Schema`] decides which labels may
//! connect which sorts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Core edge labels.
pub mod labels {
    pub const USES: &str = "uses";
    pub const TRUSTS: &str = "trusts";
    pub const SIMILAR_TO: &str = "similarTo";
    pub const HAS_PROPOSED: &str = "hasProposed";
    pub const CREATED: &str = "created";
    pub const CATEGORIZED_AS: &str = "categorizedAs";
    pub const PROPOSED: &str = "proposed";
    pub const VOTED_ON: &str = "votedOn";
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Human,
    Domain,
    Problem,
    Solution,
}

impl Sort {
    pub const ALL: [Sort; 4] = [Sort::Human, Sort::Domain, Sort::Problem, Sort::Solution];

    pub fn name(self) -> &'static str {
        match self {
            Sort::Human => "Human",
            Sort::Domain => "Domain",
            Sort::Problem => "Problem",
            Sort::Solution => "Solution",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Sort::Human => "h",
            Sort::Domain => "d",
            Sort::Problem => "p",
            Sort::Solution => "s",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sort {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Sort::ALL
            .into_iter()
            .find(|sort| sort.name() == s || sort.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown node sort {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub sort: Sort,
    /// Owning human; set only on domains.
    pub owner: Option<NodeId>,
    /// Parent problem; set only on solutions.
    pub parent: Option<NodeId>,
    /// Shared domain label. Different humans' domains with equal names are
    /// treated as the same context when aggregating categorizations.
    pub name: Option<String>,
    /// Numeric value of a solution, used by averaging selection.
    pub payload: Option<f64>,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, sort: Sort) -> Self {
        Node {
            id: id.into(),
            sort,
            owner: None,
            parent: None,
            name: None,
            payload: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub source: NodeId,
    pub label: String,
    pub target: NodeId,
    pub weight: f64,
}

/// Index of an edge inside its network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeHandle(pub(crate) usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemaMode {
    #[serde(rename = "single-domain")]
    SingleDomain,
    #[serde(rename = "multiple-domains")]
    MultipleDomains,
}

impl SchemaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaMode::SingleDomain => "single-domain",
            SchemaMode::MultipleDomains => "multiple-domains",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelRule {
    pub pairs: Vec<(Sort, Sort)>,
    /// The target must belong to the source: a domain owned by the source
    /// human, or a solution whose parent is the source problem.
    pub owned_target: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    mode: SchemaMode,
    rules: BTreeMap<String, LabelRule>,
    extensions: BTreeMap<String, Vec<(Sort, Sort)>>,
}

impl Schema {
    pub fn new(mode: SchemaMode) -> Self {
        use Sort::*;
        let mut rules = BTreeMap::new();
        let mut put = |label: &str, source: Sort, target: Sort, owned_target: bool| {
            rules.insert(
                label.to_owned(),
                LabelRule {
                    pairs: vec![(source, target)],
                    owned_target,
                },
            );
        };
        put(labels::USES, Human, Domain, true);
        match mode {
            SchemaMode::MultipleDomains => put(labels::TRUSTS, Domain, Human, false),
            SchemaMode::SingleDomain => put(labels::TRUSTS, Human, Human, false),
        }
        put(labels::SIMILAR_TO, Domain, Domain, false);
        put(labels::HAS_PROPOSED, Problem, Solution, true);
        put(labels::CREATED, Human, Problem, false);
        put(labels::CATEGORIZED_AS, Domain, Problem, false);
        put(labels::PROPOSED, Human, Solution, false);
        put(labels::VOTED_ON, Human, Solution, false);
        Schema {
            mode,
            rules,
            extensions: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> SchemaMode {
        self.mode
    }

    /// Allows `label` between `source` and `target` sorts. Registering a
    /// core label adds another permitted pair to it.
    pub fn register(&mut self, label: &str, source: Sort, target: Sort) {
        let rule = self.rules.entry(label.to_owned()).or_insert(LabelRule {
            pairs: Vec::new(),
            owned_target: false,
        });
        if !rule.pairs.contains(&(source, target)) {
            rule.pairs.push((source, target));
            let ext = self.extensions.entry(label.to_owned()).or_default();
            ext.push((source, target));
        }
    }

    /// Pairs added through [`Schema::register`], in registration order.
    pub fn extensions(&self) -> impl Iterator<Item = (&str, Sort, Sort)> {
        self.extensions
            .iter()
            .flat_map(|(l, pairs)| pairs.iter().map(move |&(s, t)| (l.as_str(), s, t)))
    }

    pub fn knows(&self, label: &str) -> bool {
        self.rules.contains_key(label)
    }

    pub fn rule(&self, label: &str) -> Option<&LabelRule> {
        self.rules.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn allows(&self, label: &str, source: Sort, target: Sort) -> bool {
        self.rules
            .get(label)
            .is_some_and(|r| r.pairs.contains(&(source, target)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    DuplicateNode,
    MissingOwner,
    MissingParent,
    MissingName,
    UnexpectedField,
    WrongReferentSort,
    UnknownNode,
    SchemaViolation,
    OwnershipViolation,
    NegativeWeight,
    DuplicateEdge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The offending node id or `(source, label, target)` triple.
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}: {}", self.kind, self.subject, self.detail)
    }
}

fn edge_subject(source: &NodeId, label: &str, target: &NodeId) -> String {
    format!("({source}, {label}, {target})")
}

#[derive(Clone, Debug)]
pub struct MultiRelationalNetwork {
    schema: Schema,
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
    endpoints: Vec<(usize, usize)>,
    edge_labels: Vec<u32>,
    label_table: Vec<String>,
    label_index: HashMap<String, u32>,
    out: Vec<Vec<usize>>,
    next_id: [usize; 4],
}

pub type Network = MultiRelationalNetwork;

impl MultiRelationalNetwork {
    pub fn new(mode: SchemaMode) -> Self {
        Self::with_schema(Schema::new(mode))
    }

    pub fn with_schema(schema: Schema) -> Self {
        MultiRelationalNetwork {
            schema,
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            endpoints: Vec::new(),
            edge_labels: Vec::new(),
            label_table: Vec::new(),
            label_index: HashMap::new(),
            out: Vec::new(),
            next_id: [0; 4],
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_mut(&mut self) -> &mut Schema {
        &mut self.schema
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|&ix| &self.nodes[ix])
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn edge(&self, handle: EdgeHandle) -> &Edge {
        &self.edges[handle.0]
    }

    /// Ids of all nodes of `sort`, sorted.
    pub fn ids_of(&self, sort: Sort) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.sort == sort)
            .map(|n| n.id.clone())
            .collect();
        ids.sort();
        ids
    }

    pub fn humans(&self) -> Vec<NodeId> {
        self.ids_of(Sort::Human)
    }

    /// Domains owned by `human`, sorted by id.
    pub fn domains_of(&self, human: &NodeId) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.sort == Sort::Domain && n.owner.as_ref() == Some(human))
            .map(|n| n.id.clone())
            .collect();
        ids.sort();
        ids
    }

    /// The solution set of `problem`, sorted by id.
    pub fn solutions_of(&self, problem: &NodeId) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.sort == Sort::Solution && n.parent.as_ref() == Some(problem))
            .map(|n| n.id.clone())
            .collect();
        ids.sort();
        ids
    }

    fn fresh_id(&mut self, sort: Sort) -> NodeId {
        loop {
            let counter = &mut self.next_id[sort.index()];
            let id = NodeId(format!("{}{}", sort.id_prefix(), counter));
            *counter += 1;
            if !self.index.contains_key(&id) {
                return id;
            }
        }
    }

    /// Creates a node with a fresh id. `referent` is the owning human of a
    /// domain or the parent problem of a solution.
    pub fn add_node(
        &mut self,
        sort: Sort,
        referent: Option<&NodeId>,
        name: Option<&str>,
        payload: Option<f64>,
    ) -> Result<NodeId> {
        let mut node = Node::new(NodeId(String::new()), sort);
        match sort {
            Sort::Domain => node.owner = referent.cloned(),
            Sort::Solution => node.parent = referent.cloned(),
            _ if referent.is_some() => {
                return Err(Error::UnexpectedField {
                    sort,
                    field: "owner or parent",
                })
            }
            _ => {}
        }
        node.name = name.map(str::to_owned);
        node.payload = payload;
        self.check_node_fields(&node)?;
        node.id = self.fresh_id(sort);
        let id = node.id.clone();
        self.push_node(node);
        Ok(id)
    }

    pub fn add_human(&mut self) -> NodeId {
        self.add_node(Sort::Human, None, None, None)
            .expect("humans carry no referents")
    }

    pub fn add_domain(&mut self, owner: &NodeId, name: &str) -> Result<NodeId> {
        self.add_node(Sort::Domain, Some(owner), Some(name), None)
    }

    pub fn add_problem(&mut self) -> NodeId {
        self.add_node(Sort::Problem, None, None, None)
            .expect("problems carry no referents")
    }

    pub fn add_solution(&mut self, problem: &NodeId, payload: Option<f64>) -> Result<NodeId> {
        self.add_node(Sort::Solution, Some(problem), None, payload)
    }

    /// Inserts a node with a caller-chosen id, enforcing the same rules as
    /// [`add_node`](Self::add_node).
    pub fn insert_node(&mut self, node: Node) -> Result<()> {
        if self.index.contains_key(&node.id) {
            return Err(Error::DuplicateNode(node.id));
        }
        self.check_node_fields(&node)?;
        self.push_node(node);
        Ok(())
    }

    /// Inserts a node checking only id uniqueness. Referents may be missing
    /// or point at nodes inserted later; [`validate`](Self::validate) reports
    /// whatever remains broken.
    pub fn insert_node_unchecked(&mut self, node: Node) -> Result<()> {
        if self.index.contains_key(&node.id) {
            return Err(Error::DuplicateNode(node.id));
        }
        self.push_node(node);
        Ok(())
    }

    fn push_node(&mut self, node: Node) {
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        self.out.push(Vec::new());
    }

    fn check_node_fields(&self, node: &Node) -> Result<()> {
        let sort = node.sort;
        let referent = |id: &Option<NodeId>, expected: Sort| -> Result<()> {
            let id = id.as_ref().expect("checked by caller");
            let found = self
                .node(id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))?
                .sort;
            if found != expected {
                return Err(Error::WrongReferentSort {
                    id: id.clone(),
                    expected,
                    found,
                });
            }
            Ok(())
        };
        match sort {
            Sort::Domain => {
                if node.owner.is_none() {
                    return Err(Error::MissingOwner { sort });
                }
                if node.parent.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "parent" });
                }
                referent(&node.owner, Sort::Human)?;
                if node.name.is_none() {
                    return Err(Error::MissingName);
                }
            }
            Sort::Solution => {
                if node.parent.is_none() {
                    return Err(Error::MissingParent { sort });
                }
                if node.owner.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "owner" });
                }
                if node.name.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "name" });
                }
                referent(&node.parent, Sort::Problem)?;
            }
            Sort::Human | Sort::Problem => {
                if node.owner.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "owner" });
                }
                if node.parent.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "parent" });
                }
                if node.name.is_some() {
                    return Err(Error::UnexpectedField { sort, field: "name" });
                }
            }
        }
        Ok(())
    }

    fn ix(&self, id: &NodeId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.clone()))
    }

    fn find_edge(&self, source: usize, label: &str, target: usize) -> Option<usize> {
        let label = *self.label_index.get(label)?;
        self.out[source]
            .iter()
            .copied()
            .find(|&e| self.edge_labels[e] == label && self.endpoints[e].1 == target)
    }

    fn schema_check(&self, source: usize, label: &str, target: usize) -> Option<Violation> {
        let (s, t) = (&self.nodes[source], &self.nodes[target]);
        let subject = || edge_subject(&s.id, label, &t.id);
        let Some(rule) = self.schema.rule(label) else {
            return Some(Violation {
                kind: ViolationKind::SchemaViolation,
                subject: subject(),
                detail: format!("label {label:?} is not in the {} schema", self.schema.mode.as_str()),
            });
        };
        if !rule.pairs.contains(&(s.sort, t.sort)) {
            let allowed: Vec<String> = rule
                .pairs
                .iter()
                .map(|(a, b)| format!("{a} -> {b}"))
                .collect();
            return Some(Violation {
                kind: ViolationKind::SchemaViolation,
                subject: subject(),
                detail: format!(
                    "{label} connects {}, not {} -> {}",
                    allowed.join(" | "),
                    s.sort,
                    t.sort
                ),
            });
        }
        if rule.owned_target {
            let belongs = match t.sort {
                Sort::Domain => t.owner.as_ref() == Some(&s.id),
                Sort::Solution => t.parent.as_ref() == Some(&s.id),
                _ => true,
            };
            if !belongs {
                return Some(Violation {
                    kind: ViolationKind::OwnershipViolation,
                    subject: subject(),
                    detail: format!("{label} target must belong to {}", s.id),
                });
            }
        }
        None
    }

    pub fn add_edge(
        &mut self,
        source: &NodeId,
        label: &str,
        target: &NodeId,
        weight: f64,
    ) -> Result<EdgeHandle> {
        let (s, t) = (self.ix(source)?, self.ix(target)?);
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::NegativeWeight(weight));
        }
        if let Some(v) = self.schema_check(s, label, t) {
            return Err(Error::SchemaViolation(format!("{}: {}", v.subject, v.detail)));
        }
        self.push_edge(s, label, t, weight)
    }

    /// Inserts an edge without schema or weight checks. Endpoints must
    /// exist and the `(source, label, target)` triple must be new.
    pub fn insert_edge_unchecked(&mut self, edge: Edge) -> Result<EdgeHandle> {
        let (s, t) = (self.ix(&edge.source)?, self.ix(&edge.target)?);
        self.push_edge(s, &edge.label, t, edge.weight)
    }

    fn push_edge(&mut self, s: usize, label: &str, t: usize, weight: f64) -> Result<EdgeHandle> {
        if self.find_edge(s, label, t).is_some() {
            return Err(Error::DuplicateEdge {
                source_id: self.nodes[s].id.clone(),
                label: label.to_owned(),
                target: self.nodes[t].id.clone(),
            });
        }
        let label_ix = self.intern(label);
        let e = self.edges.len();
        self.edges.push(Edge {
            source: self.nodes[s].id.clone(),
            label: label.to_owned(),
            target: self.nodes[t].id.clone(),
            weight,
        });
        self.endpoints.push((s, t));
        self.edge_labels.push(label_ix);
        self.out[s].push(e);
        Ok(EdgeHandle(e))
    }

    /// Replaces the weight of an existing edge.
    pub fn set_weight(
        &mut self,
        source: &NodeId,
        label: &str,
        target: &NodeId,
        weight: f64,
    ) -> Result<()> {
        let (s, t) = (self.ix(source)?, self.ix(target)?);
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::NegativeWeight(weight));
        }
        let e = self
            .find_edge(s, label, t)
            .ok_or_else(|| Error::SchemaViolation(format!("no edge {}", edge_subject(source, label, target))))?;
        self.edges[e].weight = weight;
        Ok(())
    }

    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&ix) = self.label_index.get(label) {
            return ix;
        }
        let ix = self.label_table.len() as u32;
        self.label_table.push(label.to_owned());
        self.label_index.insert(label.to_owned(), ix);
        ix
    }

    /// Outgoing edges of `node` whose label is in `labels`, with zero-weight
    /// edges left out. Edges come back in insertion order.
    pub fn out_edges(&self, node: &NodeId, labels: &[&str]) -> Result<Vec<&Edge>> {
        let n = self.ix(node)?;
        let wanted: Vec<u32> = labels
            .iter()
            .filter_map(|l| self.label_index.get(*l).copied())
            .collect();
        Ok(self.out[n]
            .iter()
            .filter(|&&e| wanted.contains(&self.edge_labels[e]) && self.edges[e].weight > 0.0)
            .map(|&e| &self.edges[e])
            .collect())
    }

    /// Every type invariant and schema rule that does not hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Err(err) = self.check_node_fields(node) {
                let kind = match err {
                    Error::MissingOwner { .. } => ViolationKind::MissingOwner,
                    Error::MissingParent { .. } => ViolationKind::MissingParent,
                    Error::MissingName => ViolationKind::MissingName,
                    Error::UnexpectedField { .. } => ViolationKind::UnexpectedField,
                    Error::UnknownNode(_) => ViolationKind::UnknownNode,
                    _ => ViolationKind::WrongReferentSort,
                };
                out.push(Violation {
                    kind,
                    subject: node.id.to_string(),
                    detail: err.to_string(),
                });
            }
        }
        let mut seen = HashSet::new();
        for (e, edge) in self.edges.iter().enumerate() {
            let (s, t) = self.endpoints[e];
            let subject = || edge_subject(&edge.source, &edge.label, &edge.target);
            if !(edge.weight.is_finite() && edge.weight >= 0.0) {
                out.push(Violation {
                    kind: ViolationKind::NegativeWeight,
                    subject: subject(),
                    detail: format!("weight {} is not finite and non-negative", edge.weight),
                });
            }
            if let Some(v) = self.schema_check(s, &edge.label, t) {
                out.push(v);
            }
            if !seen.insert((s, self.edge_labels[e], t)) {
                out.push(Violation {
                    kind: ViolationKind::DuplicateEdge,
                    subject: subject(),
                    detail: "parallel edge with the same label".into(),
                });
            }
        }
        out
    }

    // Index-level access for the traversal engine.

    pub(crate) fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn node_at(&self, ix: usize) -> &Node {
        &self.nodes[ix]
    }

    pub(crate) fn label_id(&self, label: &str) -> Option<u32> {
        self.label_index.get(label).copied()
    }

    /// `(target, weight, label)` of every outgoing edge of node `ix`.
    pub(crate) fn out_at(&self, ix: usize) -> impl Iterator<Item = (usize, f64, u32)> + '_ {
        self.out[ix]
            .iter()
            .map(move |&e| (self.endpoints[e].1, self.edges[e].weight, self.edge_labels[e]))
    }
}

/// Normalizes a weighted edge set into a probability distribution over its
/// targets.
pub fn normalize_distribution<T: Clone>(set: &[(T, f64)]) -> Result<Vec<(T, f64)>> {
    if set.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let total: f64 = set.iter().map(|(_, w)| *w).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(set.iter().map(|(t, w)| (t.clone(), w / total)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One human voting 0.6 / 0.4 on the two solutions of a problem.
    fn two_solution_graph() -> (Network, NodeId, NodeId, NodeId) {
        let mut g = Network::new(SchemaMode::MultipleDomains);
        let h1 = g.add_human();
        let p0 = g.add_problem();
        let s1 = g.add_solution(&p0, None).unwrap();
        let s2 = g.add_solution(&p0, None).unwrap();
        g.add_edge(&h1, labels::VOTED_ON, &s1, 0.6).unwrap();
        g.add_edge(&h1, labels::VOTED_ON, &s2, 0.4).unwrap();
        (g, h1, s1, s2)
    }

    #[test]
    fn add_node_assigns_fresh_ids() {
        let mut g = Network::new(SchemaMode::MultipleDomains);
        let h0 = g.add_human();
        assert_eq!(h0.as_str(), "h0");
        let d = g.add_domain(&h0, "SDSS").unwrap();
        let node = g.node(&d).unwrap();
        assert_eq!(node.owner.as_ref(), Some(&h0));
        assert_eq!(node.name.as_deref(), Some("SDSS"));
        g.insert_node(Node::new("h1", Sort::Human)).unwrap();
        assert_eq!(g.add_human().as_str(), "h2");
    }

    #[test]
    fn add_node_rejects_bad_referents() {
        let mut g = Network::new(SchemaMode::MultipleDomains);
        let h0 = g.add_human();
        assert!(matches!(
            g.add_node(Sort::Solution, Some(&h0), None, None),
            Err(Error::WrongReferentSort { expected: Sort::Problem, .. })
        ));
        assert!(matches!(
            g.add_node(Sort::Domain, None, Some("x"), None),
            Err(Error::MissingOwner { .. })
        ));
        assert!(matches!(
            g.add_node(Sort::Solution, None, None, None),
            Err(Error::MissingParent { .. })
        ));
        assert!(matches!(g.add_node(Sort::Domain, Some(&h0), None, None), Err(Error::MissingName)));
        assert!(matches!(
            g.add_node(Sort::Domain, Some(&NodeId::from("ghost")), Some("x"), None),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn add_edge_checks_schema() {
        let (mut g, h1, s1, _) = two_solution_graph();
        let d0 = g.add_domain(&h1, "SDSS").unwrap();
        let d1 = g.add_domain(&h1, "GDSS").unwrap();
        assert!(matches!(
            g.add_edge(&h1, labels::VOTED_ON, &d0, 1.0),
            Err(Error::SchemaViolation(_))
        ));
        g.add_edge(&d0, labels::SIMILAR_TO, &d1, 0.8).unwrap();
        assert!(matches!(
            g.add_edge(&h1, labels::VOTED_ON, &s1, 1.0),
            Err(Error::DuplicateEdge { .. })
        ));
        assert!(matches!(
            g.add_edge(&h1, labels::TRUSTS, &h1, -1.0),
            Err(Error::NegativeWeight(_))
        ));
        assert!(matches!(
            g.add_edge(&h1, "fly", &s1, 1.0),
            Err(Error::SchemaViolation(_))
        ));
        assert!(matches!(
            g.add_edge(&h1, labels::VOTED_ON, &NodeId::from("nope"), 1.0),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn uses_must_target_own_domain() {
        let mut g = Network::new(SchemaMode::MultipleDomains);
        let h0 = g.add_human();
        let h1 = g.add_human();
        let d = g.add_domain(&h1, "A").unwrap();
        assert!(g.add_edge(&h0, labels::USES, &d, 1.0).is_err());
        g.add_edge(&h1, labels::USES, &d, 1.0).unwrap();
    }

    #[test]
    fn single_domain_trust_is_between_humans() {
        let mut g = Network::new(SchemaMode::SingleDomain);
        let h0 = g.add_human();
        let h1 = g.add_human();
        g.add_edge(&h0, labels::TRUSTS, &h1, 1.0).unwrap();
        let d = g.add_domain(&h0, "A").unwrap();
        assert!(g.add_edge(&d, labels::TRUSTS, &h1, 1.0).is_err());
    }

    #[test]
    fn out_edges_filters_by_label_and_weight() {
        let (mut g, h1, s1, s2) = two_solution_graph();
        let got: Vec<_> = g
            .out_edges(&h1, &[labels::VOTED_ON])
            .unwrap()
            .into_iter()
            .map(|e| (e.target.clone(), e.weight))
            .collect();
        assert_eq!(got, vec![(s1.clone(), 0.6), (s2.clone(), 0.4)]);
        assert!(g.out_edges(&h1, &[labels::TRUSTS]).unwrap().is_empty());
        g.set_weight(&h1, labels::VOTED_ON, &s2, 0.0).unwrap();
        assert_eq!(g.out_edges(&h1, &[labels::VOTED_ON]).unwrap().len(), 1);
    }

    #[test]
    fn normalize_distribution_cases() {
        let d = normalize_distribution(&[("a", 2.0), ("b", 2.0)]).unwrap();
        assert_eq!(d, vec![("a", 0.5), ("b", 0.5)]);
        let d = normalize_distribution(&[("a", 0.6), ("b", 0.4)]).unwrap();
        assert!((d[0].1 - 0.6).abs() < 1e-15 && (d[1].1 - 0.4).abs() < 1e-15);
        assert!(matches!(
            normalize_distribution::<&str>(&[]),
            Err(Error::EmptyDistribution)
        ));
        assert!(matches!(
            normalize_distribution(&[("a", 0.0)]),
            Err(Error::ZeroTotalWeight)
        ));
    }

    #[test]
    fn validate_reports_injected_problems() {
        let (mut g, h1, _, _) = two_solution_graph();
        assert!(g.validate().is_empty());
        let d0 = g.add_domain(&h1, "SDSS").unwrap();
        g.insert_edge_unchecked(Edge {
            source: h1.clone(),
            label: labels::VOTED_ON.into(),
            target: d0,
            weight: 1.0,
        })
        .unwrap();
        let mut orphan = Node::new("s9", Sort::Solution);
        orphan.parent = Some("p9".into());
        g.insert_node_unchecked(orphan).unwrap();
        let kinds: Vec<_> = g.validate().into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::UnknownNode, ViolationKind::SchemaViolation]);
    }

    #[test]
    fn extension_labels_can_be_registered() {
        let (mut g, h1, s1, _) = two_solution_graph();
        assert!(g.add_edge(&h1, "pro", &s1, 1.0).is_err());
        g.schema_mut().register("pro", Sort::Human, Sort::Solution);
        g.add_edge(&h1, "pro", &s1, 1.0).unwrap();
        assert!(g.validate().is_empty());
    }
}

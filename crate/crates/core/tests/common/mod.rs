//! Test support: an exhaustive path-enumeration oracle and random scenarios.
//!
//! The oracle reads only the public network and grammar data and walks every
//! admissible path depth first. A path reaching depth `d` with probability
//! `q` deposits `q * (1 - δ)^d` on its node, exactly as one particle would in
//! expectation.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use swarmrank::grammar::{EdgeGuard, GrammarState};
use swarmrank::{labels, Context, Network, NodeId, SchemaMode, Sort, TraversalGrammar};

pub struct Oracle<'a> {
    network: &'a Network,
    grammar: &'a TraversalGrammar,
    context: &'a Context,
    sets: BTreeMap<String, BTreeSet<NodeId>>,
    voters: BTreeSet<NodeId>,
    delta: f64,
    threshold: f64,
    energy: BTreeMap<NodeId, f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(
        network: &'a Network,
        grammar: &'a TraversalGrammar,
        context: &'a Context,
        delta: f64,
        threshold: f64,
    ) -> Self {
        let mut sets = BTreeMap::new();
        if let Some(p) = &context.problem {
            sets.insert("problem".to_owned(), BTreeSet::from([p.clone()]));
            sets.insert("solutions".to_owned(), solutions(network, p).into_iter().collect());
        }
        for (k, v) in &context.sets {
            sets.insert(k.clone(), v.clone());
        }
        let mut oracle = Oracle {
            network,
            grammar,
            context,
            sets,
            voters: BTreeSet::new(),
            delta,
            threshold,
            energy: BTreeMap::new(),
        };
        oracle.voters = network
            .edges()
            .iter()
            .filter(|e| e.label == labels::VOTED_ON && e.weight > 0.0 && oracle.solution_in_scope(&e.target))
            .map(|e| e.source.clone())
            .collect();
        oracle
    }

    fn sort(&self, id: &NodeId) -> Sort {
        self.network.node(id).unwrap().sort
    }

    fn solution_in_scope(&self, id: &NodeId) -> bool {
        let node = self.network.node(id).unwrap();
        if node.sort != Sort::Solution {
            return true;
        }
        match &self.context.problem {
            Some(p) => node.parent.as_ref() == Some(p),
            None => true,
        }
    }

    fn state(&self, id: &str) -> &GrammarState {
        self.grammar.states().iter().find(|s| s.id == id).unwrap()
    }

    fn next_sort(&self, next: &str) -> Sort {
        match self.grammar.states().iter().find(|s| s.id == next) {
            Some(s) => s.sort,
            None => next.parse().unwrap(),
        }
    }

    fn in_set(&self, set: &str, id: &NodeId) -> bool {
        self.sets.get(set).is_some_and(|s| s.contains(id))
    }

    fn edges(&self, node: &NodeId, label: &str) -> Vec<(NodeId, f64)> {
        if label == labels::USES {
            if let Some(table) = &self.context.uses {
                return table.get(node).cloned().unwrap_or_default();
            }
        }
        self.network
            .edges()
            .iter()
            .filter(|e| &e.source == node && e.label == label)
            .map(|e| (e.target.clone(), e.weight))
            .collect()
    }

    /// The first rule with a nonempty admissible set, with its next state.
    fn choose(&self, state: &str, node: &NodeId) -> Option<(String, Vec<(NodeId, f64)>)> {
        for rule in &self.state(state).rules {
            if let EdgeGuard::CurrentInSet(set) = &rule.guard {
                if !self.in_set(set, node) {
                    continue;
                }
            }
            let want = self.next_sort(&rule.next);
            let admitted: Vec<(NodeId, f64)> = self
                .edges(node, &rule.label)
                .into_iter()
                .filter(|(t, w)| {
                    *w > 0.0
                        && self.sort(t) == want
                        && self.solution_in_scope(t)
                        && match &rule.guard {
                            EdgeGuard::TargetHasVotedOn => self.voters.contains(t),
                            EdgeGuard::TargetInSet(set) => self.in_set(set, t),
                            _ => true,
                        }
                })
                .collect();
            if !admitted.is_empty() {
                return Some((rule.next.clone(), admitted));
            }
        }
        None
    }

    fn walk(&mut self, node: &NodeId, state: &str, prob: f64, energy: f64) {
        *self.energy.entry(node.clone()).or_insert(0.0) += prob * energy;
        let after = energy * (1.0 - self.delta);
        if self.grammar.terminal().contains(&self.sort(node)) {
            return;
        }
        let Some((next, admitted)) = self.choose(state, node) else {
            return;
        };
        if after < self.threshold {
            return;
        }
        let total: f64 = admitted.iter().map(|(_, w)| w).sum();
        for (t, w) in admitted {
            self.walk(&t, &next, prob * w / total, after);
        }
    }

    /// Expected energy per node for one epoch from `inputs`.
    pub fn epoch(mut self, inputs: &[NodeId]) -> BTreeMap<NodeId, f64> {
        let start = self.grammar.start().to_owned();
        for src in inputs {
            self.walk(src, &start, 1.0, 1.0);
        }
        self.energy
    }
}

/// Oracle ranking over `outputs`, or `None` when no energy reaches them.
pub fn oracle_ranking(
    network: &Network,
    grammar: &TraversalGrammar,
    context: &Context,
    inputs: &[NodeId],
    outputs: &[NodeId],
    delta: f64,
    threshold: f64,
) -> Option<Vec<f64>> {
    let e = Oracle::new(network, grammar, context, delta, threshold).epoch(inputs);
    let values: Vec<f64> = outputs.iter().map(|o| e.get(o).copied().unwrap_or(0.0)).collect();
    let total: f64 = values.iter().sum();
    (total > 0.0).then(|| values.iter().map(|v| v / total).collect())
}

pub fn solutions(network: &Network, problem: &NodeId) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = network
        .nodes()
        .iter()
        .filter(|n| n.sort == Sort::Solution && n.parent.as_ref() == Some(problem))
        .map(|n| n.id.clone())
        .collect();
    out.sort();
    out
}

/// Domains with a positive categorizedAs edge to `problem`.
pub fn categorizers(network: &Network, problem: &NodeId) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = network
        .edges()
        .iter()
        .filter(|e| e.label == labels::CATEGORIZED_AS && &e.target == problem && e.weight > 0.0)
        .map(|e| e.source.clone())
        .collect();
    set.into_iter().collect()
}

/// Human `h`'s votedOn weights into `problem`, normalized.
pub fn normalized_votes(network: &Network, h: &NodeId, problem: &NodeId) -> BTreeMap<NodeId, f64> {
    let sols: BTreeSet<NodeId> = solutions(network, problem).into_iter().collect();
    let votes: Vec<(NodeId, f64)> = network
        .edges()
        .iter()
        .filter(|e| &e.source == h && e.label == labels::VOTED_ON && sols.contains(&e.target))
        .map(|e| (e.target.clone(), e.weight))
        .collect();
    let total: f64 = votes.iter().map(|(_, w)| w).sum();
    votes.into_iter().map(|(s, w)| (s, w / total)).collect()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A weight `k / 4` with `k` in `1..=8`.
pub fn rational_weight<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(1..=8) as f64 / 4.0
}

pub struct Scenario {
    pub network: Network,
    pub problem: NodeId,
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub humans: usize,
    pub domains: usize,
    pub solutions: usize,
    /// Chance that a human votes at all.
    pub vote_rate: f64,
    /// Cap on edges of one label leaving one node.
    pub max_out: usize,
    /// Add a second problem with one solution that stays out of scope.
    pub decoy_problem: bool,
    /// Only allow similarTo from later to earlier domains.
    pub acyclic_similarity: bool,
}

impl Shape {
    /// At most 12 nodes in total.
    pub fn small() -> Self {
        Shape {
            humans: 4,
            domains: 3,
            solutions: 3,
            vote_rate: 0.6,
            max_out: 2,
            decoy_problem: false,
            acyclic_similarity: false,
        }
    }
}

const NAMES: [&str; 3] = ["A", "B", "C"];

fn pick_targets<R: Rng>(rng: &mut R, pool: &[NodeId], max: usize, exclude: Option<&NodeId>) -> Vec<NodeId> {
    let mut pool: Vec<NodeId> = pool.iter().filter(|n| Some(*n) != exclude).cloned().collect();
    pool.shuffle(rng);
    let k = rng.random_range(0..=max.min(pool.len()));
    pool.truncate(k);
    pool
}

/// Random scenario with `shape.humans` humans and one active problem. In
/// multiple-domain mode each domain belongs to a random human.
pub fn random_scenario<R: Rng>(rng: &mut R, mode: SchemaMode, shape: Shape) -> Scenario {
    let mut g = Network::new(mode);
    let humans: Vec<NodeId> = (0..shape.humans).map(|_| g.add_human()).collect();
    let problem = g.add_problem();
    let sols: Vec<NodeId> = (0..shape.solutions)
        .map(|_| g.add_solution(&problem, None).unwrap())
        .collect();
    if shape.decoy_problem {
        let other = g.add_problem();
        let decoy = g.add_solution(&other, None).unwrap();
        let h = humans.choose(rng).unwrap();
        g.add_edge(h, labels::VOTED_ON, &decoy, 1.0).unwrap();
    }
    for h in &humans {
        if rng.random_bool(shape.vote_rate) {
            let mut targets = pick_targets(rng, &sols, shape.max_out, None);
            if targets.is_empty() {
                targets.push(sols.choose(rng).unwrap().clone());
            }
            for s in targets {
                g.add_edge(h, labels::VOTED_ON, &s, rational_weight(rng)).unwrap();
            }
        }
    }
    match mode {
        SchemaMode::SingleDomain => {
            for h in &humans {
                for t in pick_targets(rng, &humans, shape.max_out, Some(h)) {
                    g.add_edge(h, labels::TRUSTS, &t, rational_weight(rng)).unwrap();
                }
            }
        }
        SchemaMode::MultipleDomains => {
            let domains: Vec<NodeId> = (0..shape.domains)
                .map(|_| {
                    let owner = humans.choose(rng).unwrap().clone();
                    g.add_domain(&owner, NAMES.choose(rng).unwrap()).unwrap()
                })
                .collect();
            for (i, d) in domains.iter().enumerate() {
                let owner = g.node(d).unwrap().owner.clone().unwrap();
                for t in pick_targets(rng, &humans, shape.max_out, Some(&owner)) {
                    g.add_edge(d, labels::TRUSTS, &t, rational_weight(rng)).unwrap();
                }
                let pool = if shape.acyclic_similarity { &domains[..i] } else { &domains[..] };
                for t in pick_targets(rng, pool, shape.max_out.min(2), Some(d)) {
                    g.add_edge(d, labels::SIMILAR_TO, &t, rational_weight(rng)).unwrap();
                }
                if rng.random_bool(0.5) {
                    g.add_edge(d, labels::CATEGORIZED_AS, &problem, rational_weight(rng)).unwrap();
                }
                if rng.random_bool(0.5) {
                    g.add_edge(&owner, labels::USES, d, rational_weight(rng)).unwrap();
                }
            }
        }
    }
    Scenario { network: g, problem }
}

/// A random `uses` table over owned domains.
pub fn random_uses<R: Rng>(rng: &mut R, network: &Network) -> BTreeMap<NodeId, Vec<(NodeId, f64)>> {
    let mut table = BTreeMap::new();
    for h in network.humans() {
        let entries: Vec<(NodeId, f64)> = network
            .domains_of(&h)
            .into_iter()
            .map(|d| (d, if rng.random_bool(0.2) { 0.0 } else { rational_weight(rng) }))
            .collect();
        table.insert(h, entries);
    }
    table
}

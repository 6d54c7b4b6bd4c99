//! Decision procedures built on the swarm engine.
//!
//! [`rank_solutions`] runs one of the stock grammars from the humans of a
//! network to the solutions of a problem. Grammars that route non-voters
//! through their domains need `uses` weights, which [`compute_uses_weights`]
//! derives from how the problem was categorized, either by each human
//! directly or collectively through [`rank_domains`]. [`select_dictator`]
//! picks a representative from the trust graph and [`select_outcome`] turns
//! a ranking into a single decision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grammar::{builtin, Context, TraversalGrammar};
use crate::graph::{labels, Network, NodeId, SchemaMode, Sort};
use crate::swarm::{self, Mode, RunResult, SwarmConfig};

/// Relative tolerance under which two ranking weights count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Decay used by multi-hop grammars when none is given.
pub const DEFAULT_MULTI_HOP_DECAY: f64 = 0.15;

const EIGEN_TOLERANCE: f64 = 1e-10;
const EIGEN_MAX_ITERATIONS: usize = 10_000;
const EIGEN_TIE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CentralityMetric {
    InDegreeTrusts,
    EigenvectorCentrality,
}

impl FromStr for CentralityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "indegree" | "in-degree" => Ok(CentralityMetric::InDegreeTrusts),
            "eigenvector" | "eigen" => Ok(CentralityMetric::EigenvectorCentrality),
            _ => Err(Error::InvalidConfig(format!("unknown centrality metric {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dictator {
    Human(NodeId),
    Metric(CentralityMetric),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    DirectDemocracy,
    RepresentativeDemocracy,
    DynamicallyDistributed,
    Dictator(Dictator),
    Custom(TraversalGrammar),
}

impl Algorithm {
    pub fn name(&self) -> &str {
        match self {
            Algorithm::DirectDemocracy => "dd",
            Algorithm::RepresentativeDemocracy => "rd",
            Algorithm::DynamicallyDistributed => "ddd",
            Algorithm::Dictator(_) => "dictator",
            Algorithm::Custom(_) => "custom",
        }
    }

    /// Paths under dd and dictator are a single hop, so decay is moot there.
    pub fn default_decay(&self) -> f64 {
        match self {
            Algorithm::DirectDemocracy | Algorithm::Dictator(_) => 0.0,
            _ => DEFAULT_MULTI_HOP_DECAY,
        }
    }

    /// The grammar this algorithm runs under the given schema mode.
    pub fn grammar(&self, mode: SchemaMode) -> Result<TraversalGrammar> {
        let single = mode == SchemaMode::SingleDomain;
        match self {
            Algorithm::DirectDemocracy => builtin("dd"),
            Algorithm::RepresentativeDemocracy if single => builtin("rd_single"),
            Algorithm::RepresentativeDemocracy => builtin("rd"),
            Algorithm::DynamicallyDistributed if single => builtin("ddd_single"),
            Algorithm::DynamicallyDistributed => builtin("ddd"),
            Algorithm::Dictator(_) => builtin("dictator"),
            Algorithm::Custom(g) => Ok(g.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CategorizationMethod {
    Direct,
    #[default]
    Recursive,
}

impl CategorizationMethod {
    pub fn name(self) -> &'static str {
        match self {
            CategorizationMethod::Direct => "direct",
            CategorizationMethod::Recursive => "recursive",
        }
    }

    fn grammar(self) -> TraversalGrammar {
        builtin(match self {
            CategorizationMethod::Direct => "domain_direct",
            CategorizationMethod::Recursive => "domain_recursive",
        })
        .expect("builtin exists")
    }
}

/// Engine settings shared by every procedure in this module. `decay: None`
/// picks the algorithm's default.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOptions {
    pub decay: Option<f64>,
    pub mode: Mode,
    pub energy_threshold: f64,
    pub max_epochs: usize,
    pub convergence_tolerance: Option<f64>,
    pub max_hops: usize,
    pub workers: Option<usize>,
    pub categorization: CategorizationMethod,
    /// Extra named node sets for guards in custom grammars.
    pub sets: BTreeMap<String, BTreeSet<NodeId>>,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions {
            decay: None,
            mode: Mode::default(),
            energy_threshold: swarm::DEFAULT_ENERGY_THRESHOLD,
            max_epochs: swarm::DEFAULT_MAX_EPOCHS,
            convergence_tolerance: Some(swarm::DEFAULT_TOLERANCE),
            max_hops: swarm::DEFAULT_MAX_HOPS,
            workers: None,
            categorization: CategorizationMethod::default(),
            sets: BTreeMap::new(),
        }
    }
}

impl RankOptions {
    pub fn config(&self, default_decay: f64, inputs: Vec<NodeId>, outputs: Vec<NodeId>) -> SwarmConfig {
        SwarmConfig {
            decay: self.decay.unwrap_or(default_decay),
            energy_threshold: self.energy_threshold,
            max_epochs: self.max_epochs,
            convergence_tolerance: self.convergence_tolerance,
            max_hops: self.max_hops,
            mode: self.mode.clone(),
            inputs,
            outputs,
            workers: self.workers,
        }
    }
}

/// Normalized weights in descending order; equal weights are ordered by id.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    entries: Vec<(NodeId, f64)>,
    ties: Vec<Vec<NodeId>>,
}

fn nearly_equal(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

impl Ranking {
    /// Normalizes `weights` to sum to one and sorts them.
    pub fn new(weights: impl IntoIterator<Item = (NodeId, f64)>) -> Result<Self> {
        let mut entries: Vec<(NodeId, f64)> = weights.into_iter().collect();
        if entries.iter().any(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig("ranking weights must be finite and non-negative".into()));
        }
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTotalWeight);
        }
        for (_, w) in &mut entries {
            *w /= total;
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        // A run of nearly equal weights may not be contiguous after the
        // float sort, so regroup each run and re-sort it by id.
        let mut ties = Vec::new();
        let mut i = 0;
        while i < entries.len() {
            let mut j = i + 1;
            while j < entries.len() && nearly_equal(entries[i].1, entries[j].1, TIE_TOLERANCE) {
                j += 1;
            }
            if j - i > 1 {
                entries[i..j].sort_by(|a, b| a.0.cmp(&b.0));
                ties.push(entries[i..j].iter().map(|(id, _)| id.clone()).collect());
            }
            i = j;
        }
        Ok(Ranking { entries, ties })
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    /// Groups of nodes whose weights are equal up to [`TIE_TOLERANCE`].
    pub fn ties(&self) -> &[Vec<NodeId>] {
        &self.ties
    }

    pub fn get(&self, node: &NodeId) -> Option<f64> {
        self.entries.iter().find(|(id, _)| id == node).map(|(_, w)| *w)
    }

    pub fn top(&self) -> &(NodeId, f64) {
        &self.entries[0]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weights in the order of `ids`, zero for absent nodes.
    pub fn vector(&self, ids: &[NodeId]) -> Vec<f64> {
        ids.iter().map(|id| self.get(id).unwrap_or(0.0)).collect()
    }
}

/// Rounds to 12 significant digits for stable textual output.
pub fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Human → `(owned domain, weight)` table.
pub type UsesWeights = BTreeMap<NodeId, Vec<(NodeId, f64)>>;

/// The problem under decision, its solutions, and derived `uses` weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemContext {
    pub problem: NodeId,
    pub solutions: Vec<NodeId>,
    pub uses: Option<UsesWeights>,
}

impl ProblemContext {
    pub fn new(network: &Network, problem: &NodeId) -> Result<Self> {
        check_problem(network, problem)?;
        let solutions = network.solutions_of(problem);
        if solutions.is_empty() {
            return Err(Error::NoSolutions(problem.clone()));
        }
        Ok(ProblemContext {
            problem: problem.clone(),
            solutions,
            uses: None,
        })
    }

    pub fn context(&self) -> Context {
        let ctx = Context::for_problem(&self.problem);
        match &self.uses {
            Some(uses) => ctx.with_uses(uses.clone()),
            None => ctx,
        }
    }
}

fn check_problem(network: &Network, problem: &NodeId) -> Result<()> {
    match network.node(problem) {
        Some(node) if node.sort == Sort::Problem => Ok(()),
        _ => Err(Error::UnknownProblem(problem.clone())),
    }
}

#[derive(Clone, Debug)]
pub struct DictatorChoice {
    pub human: NodeId,
    pub tied: bool,
    /// Metric value per human, sorted by id.
    pub scores: Vec<(NodeId, f64)>,
}

#[derive(Clone, Debug)]
pub struct SolutionRanking {
    pub problem: ProblemContext,
    pub algorithm: String,
    pub ranking: Ranking,
    pub run: RunResult,
    pub dictator: Option<DictatorChoice>,
}

pub fn rank_solutions(
    network: &Network,
    problem: &NodeId,
    algorithm: &Algorithm,
    options: &RankOptions,
) -> Result<SolutionRanking> {
    let mut pc = ProblemContext::new(network, problem)?;
    let grammar = algorithm.grammar(network.schema().mode())?;
    if grammar.uses_label(labels::USES) && network.schema().mode() == SchemaMode::MultipleDomains {
        pc.uses = Some(compute_uses_weights(network, problem, options.categorization, options)?);
    }
    let mut context = pc.context();
    for (name, ids) in &options.sets {
        context = context.with_set(name, ids.iter().cloned());
    }
    let mut dictator = None;
    let inputs = match algorithm {
        Algorithm::Dictator(spec) => {
            let choice = match spec {
                Dictator::Human(h) => {
                    if network.node(h).map(|n| n.sort) != Some(Sort::Human) {
                        return Err(Error::UnknownNode(h.clone()));
                    }
                    DictatorChoice {
                        human: h.clone(),
                        tied: false,
                        scores: Vec::new(),
                    }
                }
                Dictator::Metric(m) => select_dictator(network, *m)?,
            };
            context = context.with_set("dictators", [choice.human.clone()]);
            let inputs = vec![choice.human.clone()];
            dictator = Some(choice);
            inputs
        }
        _ => network.ids_of(grammar.start_sort()),
    };
    if inputs.is_empty() {
        return Err(Error::NoHumans);
    }
    let config = options.config(algorithm.default_decay(), inputs, pc.solutions.clone());
    let run = swarm::run(network, &grammar, &context, config)?;
    let ranking = Ranking::new(run.ranking.iter().cloned())?;
    Ok(SolutionRanking {
        problem: pc,
        algorithm: algorithm.name().to_owned(),
        ranking,
        run,
        dictator,
    })
}

#[derive(Clone, Debug)]
pub struct DomainRanking {
    pub problem: NodeId,
    pub method: CategorizationMethod,
    /// Over the domains that categorize the problem.
    pub ranking: Ranking,
    /// Output energy summed over domains sharing a name, normalized.
    pub names: Ranking,
    pub name_of: BTreeMap<NodeId, String>,
    pub run: RunResult,
}

impl DomainRanking {
    pub fn name_weight(&self, name: &str) -> f64 {
        self.names.get(&NodeId::new(name)).unwrap_or(0.0)
    }
}

/// Domains with a positive `categorizedAs` edge to `problem`, sorted by id.
pub fn categorizing_domains(network: &Network, problem: &NodeId) -> Vec<NodeId> {
    network
        .ids_of(Sort::Domain)
        .into_iter()
        .filter(|d| {
            network
                .out_edges(d, &[labels::CATEGORIZED_AS])
                .is_ok_and(|es| es.iter().any(|e| &e.target == problem))
        })
        .collect()
}

pub fn rank_domains(
    network: &Network,
    problem: &NodeId,
    method: CategorizationMethod,
    options: &RankOptions,
) -> Result<DomainRanking> {
    check_problem(network, problem)?;
    let outputs = categorizing_domains(network, problem);
    if outputs.is_empty() {
        return Err(Error::NoCategorizations(problem.clone()));
    }
    let config = options.config(DEFAULT_MULTI_HOP_DECAY, network.ids_of(Sort::Domain), outputs);
    let run = swarm::run(network, &method.grammar(), &Context::for_problem(problem), config)?;
    let ranking = Ranking::new(run.ranking.iter().cloned())?;

    let mut name_of = BTreeMap::new();
    let mut by_name: BTreeMap<String, f64> = BTreeMap::new();
    for (id, w) in &run.ranking {
        let name = network.node(id).and_then(|n| n.name.clone()).unwrap_or_default();
        *by_name.entry(name.clone()).or_insert(0.0) += w;
        name_of.insert(id.clone(), name);
    }
    let names = Ranking::new(by_name.into_iter().map(|(n, w)| (NodeId::new(n), w)))?;
    Ok(DomainRanking {
        problem: problem.clone(),
        method,
        ranking,
        names,
        name_of,
        run,
    })
}

/// `uses` weights for every human owning at least one domain.
///
/// A human who categorized the problem through any owned domain enters each
/// owned domain with that domain's own `categorizedAs` weight. Everyone else
/// follows the collective name-level categorization, renormalized over the
/// names they own. Without any categorization at all every weight is zero.
pub fn compute_uses_weights(
    network: &Network,
    problem: &NodeId,
    method: CategorizationMethod,
    options: &RankOptions,
) -> Result<UsesWeights> {
    check_problem(network, problem)?;
    let collective = match rank_domains(network, problem, method, options) {
        Ok(r) => Some(r),
        Err(Error::NoCategorizations(_)) => None,
        Err(e) => return Err(e),
    };
    let categorized = |d: &NodeId| -> f64 {
        network
            .out_edges(d, &[labels::CATEGORIZED_AS])
            .ok()
            .and_then(|es| es.iter().find(|e| &e.target == problem).map(|e| e.weight))
            .unwrap_or(0.0)
    };
    let mut table = UsesWeights::new();
    for human in network.humans() {
        let owned = network.domains_of(&human);
        if owned.is_empty() {
            continue;
        }
        let own: Vec<f64> = owned.iter().map(categorized).collect();
        let weights: Vec<f64> = if own.iter().any(|&w| w > 0.0) {
            own
        } else {
            let raw: Vec<f64> = owned
                .iter()
                .map(|d| {
                    let name = network.node(d).and_then(|n| n.name.as_deref()).unwrap_or("");
                    collective.as_ref().map_or(0.0, |c| c.name_weight(name))
                })
                .collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                raw.iter().map(|w| w / total).collect()
            } else {
                raw
            }
        };
        table.insert(human, owned.into_iter().zip(weights).collect());
    }
    Ok(table)
}

/// Trust between humans: `(truster, trusted, weight)` with domain-sourced
/// edges attributed to the domain owner.
fn human_trusts(network: &Network) -> Vec<(NodeId, NodeId, f64)> {
    network
        .edges()
        .iter()
        .filter(|e| e.label == labels::TRUSTS && e.weight > 0.0)
        .filter_map(|e| {
            let src = network.node(&e.source)?;
            let truster = match src.sort {
                Sort::Human => src.id.clone(),
                Sort::Domain => src.owner.clone()?,
                _ => return None,
            };
            (network.node(&e.target)?.sort == Sort::Human).then(|| (truster, e.target.clone(), e.weight))
        })
        .collect()
}

/// The human maximizing `metric` on the trust graph; ties go to the
/// smallest id and are flagged.
pub fn select_dictator(network: &Network, metric: CentralityMetric) -> Result<DictatorChoice> {
    let humans = network.humans();
    if humans.is_empty() {
        return Err(Error::NoHumans);
    }
    let index: BTreeMap<&NodeId, usize> = humans.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let trusts = human_trusts(network);
    let n = humans.len();
    let (scores, tol) = match metric {
        CentralityMetric::InDegreeTrusts => {
            let mut deg = vec![0.0; n];
            for (_, trusted, _) in &trusts {
                deg[index[trusted]] += 1.0;
            }
            (deg, 0.0)
        }
        CentralityMetric::EigenvectorCentrality => {
            let mut x = vec![1.0 / n as f64; n];
            for _ in 0..EIGEN_MAX_ITERATIONS {
                // x' = (Aᵀ + I) x, rescaled to unit sum.
                let mut next = x.clone();
                for (truster, trusted, w) in &trusts {
                    next[index[trusted]] += w * x[index[truster]];
                }
                let total: f64 = next.iter().sum();
                next.iter_mut().for_each(|v| *v /= total);
                let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
                x = next;
                if diff <= EIGEN_TOLERANCE {
                    break;
                }
            }
            (x, EIGEN_TIE_TOLERANCE)
        }
    };
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let leaders: Vec<usize> = (0..n)
        .filter(|&i| best - scores[i] <= tol * best.abs())
        .collect();
    Ok(DictatorChoice {
        human: humans[leaders[0]].clone(),
        tied: leaders.len() > 1,
        scores: humans.into_iter().zip(scores).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectionRule {
    Plurality,
    NumericAverage,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Winner { solution: NodeId, tied: bool },
    Value(f64),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Winner { solution, tied: false } => write!(f, "{solution}"),
            Outcome::Winner { solution, tied: true } => write!(f, "{solution} (tie)"),
            Outcome::Value(v) => write!(f, "{v}"),
        }
    }
}

pub fn select_outcome(
    ranking: &Ranking,
    rule: SelectionRule,
    payload: impl Fn(&NodeId) -> Option<f64>,
) -> Result<Outcome> {
    if ranking.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    match rule {
        SelectionRule::Plurality => {
            let (top, _) = ranking.top();
            let tied = ranking.ties().first().is_some_and(|g| g.contains(top));
            Ok(Outcome::Winner {
                solution: top.clone(),
                tied,
            })
        }
        SelectionRule::NumericAverage => {
            let mut sum = 0.0;
            for (id, w) in ranking.entries() {
                sum += w * payload(id).ok_or_else(|| Error::MissingPayload(id.clone()))?;
            }
            Ok(Outcome::Value(sum))
        }
    }
}

/// Payload lookup against a network.
pub fn payload_of(network: &Network) -> impl Fn(&NodeId) -> Option<f64> + '_ {
    |id| network.node(id).and_then(|n| n.payload)
}

#[derive(Serialize)]
struct WeightRecord<'a> {
    solution: &'a NodeId,
    weight: f64,
}

#[derive(Serialize)]
struct RankingReport<'a> {
    problem: &'a NodeId,
    algorithm: &'a str,
    ranking: Vec<WeightRecord<'a>>,
    ties: &'a [Vec<NodeId>],
    epochs: usize,
    converged: bool,
}

impl SolutionRanking {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RankingReport {
            problem: &self.problem.problem,
            algorithm: &self.algorithm,
            ranking: self
                .ranking
                .entries()
                .iter()
                .map(|(id, w)| WeightRecord {
                    solution: id,
                    weight: round_sig(*w),
                })
                .collect(),
            ties: self.ranking.ties(),
            epochs: self.run.epochs,
            converged: self.run.converged,
        })
        .expect("report serializes")
    }
}

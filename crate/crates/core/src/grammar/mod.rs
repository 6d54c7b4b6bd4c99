//! Traversal grammars.
//!
//! A grammar is a finite state machine over node sorts. Each state lists
//! edge-label rules in priority order; a particle takes the first rule that
//! has at least one admissible edge and dies when none has. Reaching a node
//! whose sort is terminal ends the walk after the deposit there.

mod builtin;
mod dsl;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub use builtin::{builtin, BUILTIN_NAMES};
pub use dsl::{parse_grammar, parse_grammar_with_schema, serialize_grammar};

use crate::error::{Error, Result};
use crate::graph::{labels, Network, NodeId, Sort};

/// Filter applied to the candidate edges of a rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EdgeGuard {
    None,
    /// The target human has a positive `votedOn` edge into the active
    /// problem's solution set.
    TargetHasVotedOn,
    /// The particle's current node belongs to the named set.
    CurrentInSet(String),
    /// The edge target belongs to the named set.
    TargetInSet(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub guard: EdgeGuard,
    /// A state id, or the name of a terminal sort.
    pub next: String,
}

impl Rule {
    pub fn new(label: &str, guard: EdgeGuard, next: &str) -> Self {
        Rule {
            label: label.to_owned(),
            guard,
            next: next.to_owned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarState {
    pub id: String,
    pub sort: Sort,
    pub rules: Vec<Rule>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrammarErrorKind {
    SyntaxError,
    UnknownLabel,
    UnknownGuard,
    UnknownSort,
    DanglingState,
    DuplicateState,
    TerminalState,
}

/// A grammar diagnostic. Line and column are 1-based; both are 0 for
/// grammars assembled in code.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind:?}: {message}")]
pub struct GrammarError {
    pub kind: GrammarErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl GrammarError {
    pub(crate) fn at(kind: GrammarErrorKind, (line, column): (usize, usize), message: String) -> Self {
        GrammarError {
            kind,
            line,
            column,
            message,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraversalGrammar {
    name: String,
    start: String,
    terminal: Vec<Sort>,
    states: Vec<GrammarState>,
}

impl TraversalGrammar {
    pub fn new(
        name: &str,
        start: &str,
        terminal: Vec<Sort>,
        states: Vec<GrammarState>,
    ) -> Result<Self, GrammarError> {
        let g = TraversalGrammar {
            name: name.to_owned(),
            start: start.to_owned(),
            terminal,
            states,
        };
        g.check(|_| (0, 0))?;
        Ok(g)
    }

    /// Structural checks. `locate` maps a reference description to a source
    /// position for diagnostics.
    pub(crate) fn check(
        &self,
        locate: impl Fn(Reference) -> (usize, usize),
    ) -> Result<(), GrammarError> {
        let mut seen = BTreeSet::new();
        for (si, st) in self.states.iter().enumerate() {
            if !seen.insert(st.id.as_str()) {
                return Err(GrammarError::at(
                    GrammarErrorKind::DuplicateState,
                    locate(Reference::State(si)),
                    format!("state {} declared twice", st.id),
                ));
            }
            if self.terminal.contains(&st.sort) {
                return Err(GrammarError::at(
                    GrammarErrorKind::TerminalState,
                    locate(Reference::State(si)),
                    format!("state {} applies to terminal sort {}", st.id, st.sort),
                ));
            }
        }
        if self.state(&self.start).is_none() {
            return Err(GrammarError::at(
                GrammarErrorKind::DanglingState,
                locate(Reference::Start),
                format!("start state {} is not declared", self.start),
            ));
        }
        for (si, st) in self.states.iter().enumerate() {
            for (ri, rule) in st.rules.iter().enumerate() {
                if self.target_sort(&rule.next).is_none() {
                    return Err(GrammarError::at(
                        GrammarErrorKind::DanglingState,
                        locate(Reference::Next(si, ri)),
                        format!("{} is neither a declared state nor a terminal sort", rule.next),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn terminal(&self) -> &[Sort] {
        &self.terminal
    }

    pub fn states(&self) -> &[GrammarState] {
        &self.states
    }

    pub fn state(&self, id: &str) -> Option<&GrammarState> {
        self.states.iter().find(|s| s.id == id)
    }

    /// Sort of the node a particle lands on when following a rule to `next`.
    pub fn target_sort(&self, next: &str) -> Option<Sort> {
        if let Some(st) = self.state(next) {
            return Some(st.sort);
        }
        self.terminal.iter().copied().find(|s| s.name() == next)
    }

    /// Sort the particles of this grammar must start on.
    pub fn start_sort(&self) -> Sort {
        self.state(&self.start).expect("checked at construction").sort
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.states
            .iter()
            .flat_map(|s| s.rules.iter().map(|r| r.label.as_str()))
    }

    pub fn uses_label(&self, label: &str) -> bool {
        self.labels().any(|l| l == label)
    }
}

impl fmt::Display for TraversalGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_grammar(self))
    }
}

pub(crate) enum Reference {
    Start,
    State(usize),
    Next(usize, usize),
}

/// Run-time inputs that guards and scoping read: the active problem, named
/// node sets, and derived `uses` weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    /// Solution-targeted edges only count when the solution belongs to this
    /// problem.
    pub problem: Option<NodeId>,
    /// Named node sets for `current_in` / `target_in` guards. `problem` and
    /// `solutions` are bound automatically when a problem is set.
    pub sets: BTreeMap<String, BTreeSet<NodeId>>,
    /// Human → `(domain, weight)` entries. When present these replace any
    /// stored `uses` edges.
    pub uses: Option<BTreeMap<NodeId, Vec<(NodeId, f64)>>>,
}

impl Context {
    pub fn for_problem(problem: &NodeId) -> Self {
        Context {
            problem: Some(problem.clone()),
            ..Context::default()
        }
    }

    pub fn with_set(mut self, name: &str, ids: impl IntoIterator<Item = NodeId>) -> Self {
        self.sets.insert(name.to_owned(), ids.into_iter().collect());
        self
    }

    pub fn with_uses(mut self, uses: BTreeMap<NodeId, Vec<(NodeId, f64)>>) -> Self {
        self.uses = Some(uses);
        self
    }
}

/// A context resolved against one network: membership tables indexed by
/// node position.
#[derive(Debug)]
pub(crate) struct Scope {
    pub(crate) sorts: Vec<Sort>,
    active_solution: Option<Vec<bool>>,
    voters: Vec<bool>,
    set_slots: HashMap<String, usize>,
    sets: Vec<Vec<bool>>,
    uses: Option<Vec<Vec<(usize, f64)>>>,
}

impl Scope {
    pub(crate) fn new(network: &Network, context: &Context) -> Result<Self> {
        let n = network.node_count();
        let sorts: Vec<Sort> = network.nodes().iter().map(|node| node.sort).collect();
        let lookup = |id: &NodeId| {
            network
                .index_of(id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))
        };
        let mut set_slots = HashMap::new();
        let mut sets = Vec::new();
        let mut active_solution = None;
        if let Some(problem) = &context.problem {
            let p = lookup(problem)?;
            if sorts[p] != Sort::Problem {
                return Err(Error::UnknownProblem(problem.clone()));
            }
            let member: Vec<bool> = network
                .nodes()
                .iter()
                .map(|node| node.sort == Sort::Solution && node.parent.as_ref() == Some(problem))
                .collect();
            let mut just_problem = vec![false; n];
            just_problem[p] = true;
            set_slots.insert("problem".to_owned(), 0);
            sets.push(just_problem);
            set_slots.insert("solutions".to_owned(), 1);
            sets.push(member.clone());
            active_solution = Some(member);
        }
        for (name, ids) in &context.sets {
            let mut member = vec![false; n];
            for id in ids {
                member[lookup(id)?] = true;
            }
            let slot = *set_slots.entry(name.clone()).or_insert(sets.len());
            if slot == sets.len() {
                sets.push(member);
            } else {
                sets[slot] = member;
            }
        }

        let voted_on = network.label_id(labels::VOTED_ON);
        let voters = (0..n)
            .map(|ix| {
                sorts[ix] == Sort::Human
                    && network.out_at(ix).any(|(t, w, l)| {
                        Some(l) == voted_on
                            && w > 0.0
                            && sorts[t] == Sort::Solution
                            && active_solution.as_ref().is_none_or(|m| m[t])
                    })
            })
            .collect();

        let uses = match &context.uses {
            None => None,
            Some(map) => {
                let mut table = vec![Vec::new(); n];
                for (human, entries) in map {
                    let h = lookup(human)?;
                    for (domain, w) in entries {
                        table[h].push((lookup(domain)?, *w));
                    }
                }
                Some(table)
            }
        };

        Ok(Scope {
            sorts,
            active_solution,
            voters,
            set_slots,
            sets,
            uses,
        })
    }

    fn slot(&self, name: &str) -> Result<usize> {
        self.set_slots
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundSet(name.to_owned()))
    }

    fn resolve_guard(&self, guard: &EdgeGuard) -> Result<CGuard> {
        Ok(match guard {
            EdgeGuard::None => CGuard::None,
            EdgeGuard::TargetHasVotedOn => CGuard::TargetVoted,
            EdgeGuard::CurrentInSet(s) => CGuard::CurrentIn(self.slot(s)?),
            EdgeGuard::TargetInSet(s) => CGuard::TargetIn(self.slot(s)?),
        })
    }

    #[inline]
    fn in_scope(&self, target: usize) -> bool {
        match &self.active_solution {
            Some(member) if self.sorts[target] == Sort::Solution => member[target],
            _ => true,
        }
    }

    /// Pushes the admissible `(target, weight)` pairs of one rule into `buf`.
    #[inline]
    fn collect(
        &self,
        network: &Network,
        node: usize,
        label: LabelRef,
        target_sort: Option<Sort>,
        guard: CGuard,
        buf: &mut Vec<(usize, f64)>,
    ) {
        if let CGuard::CurrentIn(slot) = guard {
            if !self.sets[slot][node] {
                return;
            }
        }
        let passes = |t: usize, w: f64| {
            w > 0.0
                && target_sort.is_none_or(|s| self.sorts[t] == s)
                && self.in_scope(t)
                && match guard {
                    CGuard::TargetVoted => self.voters[t],
                    CGuard::TargetIn(slot) => self.sets[slot][t],
                    CGuard::None | CGuard::CurrentIn(_) => true,
                }
        };
        match label {
            LabelRef::Missing => {}
            LabelRef::VirtualUses => {
                let table = self.uses.as_ref().expect("virtual uses need a table");
                buf.extend(table[node].iter().copied().filter(|&(t, w)| passes(t, w)));
            }
            LabelRef::Stored(label) => buf.extend(
                network
                    .out_at(node)
                    .filter(|&(t, w, l)| l == label && passes(t, w))
                    .map(|(t, w, _)| (t, w)),
            ),
        }
    }

    fn label_ref(&self, network: &Network, label: &str) -> LabelRef {
        if label == labels::USES && self.uses.is_some() {
            return LabelRef::VirtualUses;
        }
        match network.label_id(label) {
            Some(id) => LabelRef::Stored(id),
            None => LabelRef::Missing,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum LabelRef {
    Stored(u32),
    VirtualUses,
    Missing,
}

#[derive(Clone, Copy, Debug)]
enum CGuard {
    None,
    TargetVoted,
    CurrentIn(usize),
    TargetIn(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Next {
    State(usize),
    Terminal,
}

#[derive(Debug)]
struct CRule {
    label: LabelRef,
    target_sort: Sort,
    guard: CGuard,
    next: Next,
}

#[derive(Debug)]
struct CState {
    sort: Sort,
    rules: Vec<CRule>,
}

/// A grammar bound to one network and context, ready for traversal.
#[derive(Debug)]
pub(crate) struct Compiled<'a> {
    pub(crate) grammar: &'a TraversalGrammar,
    pub(crate) network: &'a Network,
    pub(crate) scope: Scope,
    states: Vec<CState>,
    pub(crate) start: usize,
    terminal: [bool; 4],
}

impl<'a> Compiled<'a> {
    pub(crate) fn new(
        grammar: &'a TraversalGrammar,
        network: &'a Network,
        context: &Context,
    ) -> Result<Self> {
        let scope = Scope::new(network, context)?;
        let position = |id: &str| grammar.states.iter().position(|s| s.id == id);
        let mut states = Vec::with_capacity(grammar.states.len());
        for st in &grammar.states {
            let mut rules = Vec::with_capacity(st.rules.len());
            for rule in &st.rules {
                let next = match position(&rule.next) {
                    Some(ix) => Next::State(ix),
                    None => Next::Terminal,
                };
                rules.push(CRule {
                    label: scope.label_ref(network, &rule.label),
                    target_sort: grammar.target_sort(&rule.next).expect("checked"),
                    guard: scope.resolve_guard(&rule.guard)?,
                    next,
                });
            }
            states.push(CState {
                sort: st.sort,
                rules,
            });
        }
        let mut terminal = [false; 4];
        for s in &grammar.terminal {
            terminal[s.index()] = true;
        }
        Ok(Compiled {
            grammar,
            network,
            start: position(&grammar.start).expect("checked"),
            scope,
            states,
            terminal,
        })
    }

    #[inline]
    pub(crate) fn is_terminal(&self, node: usize) -> bool {
        self.terminal[self.scope.sorts[node].index()]
    }

    #[inline]
    pub(crate) fn next(&self, state: usize, rule: usize) -> Next {
        self.states[state].rules[rule].next
    }

    /// Fills `buf` with the admissible edge set of the first rule that has
    /// one and returns that rule's index; `None` means the particle dies.
    #[inline]
    pub(crate) fn admissible(
        &self,
        state: usize,
        node: usize,
        buf: &mut Vec<(usize, f64)>,
    ) -> Option<usize> {
        for (ri, rule) in self.states[state].rules.iter().enumerate() {
            buf.clear();
            self.scope.collect(
                self.network,
                node,
                rule.label,
                Some(rule.target_sort),
                rule.guard,
                buf,
            );
            if !buf.is_empty() {
                return Some(ri);
            }
        }
        buf.clear();
        None
    }

    pub(crate) fn check_sort(&self, state: usize, node: usize) -> Result<()> {
        let expected = self.states[state].sort;
        let found = self.scope.sorts[node];
        if expected != found {
            return Err(Error::SortMismatch {
                node: self.network.node_at(node).id.clone(),
                state: self.grammar.states[state].id.clone(),
                expected,
                found,
            });
        }
        Ok(())
    }

    pub(crate) fn state_index(&self, id: &str) -> Option<usize> {
        self.grammar.states.iter().position(|s| s.id == id)
    }

    pub(crate) fn state_id(&self, state: usize) -> &str {
        &self.grammar.states[state].id
    }
}

/// Result of evaluating one grammar state at one node.
#[derive(Clone, Debug, PartialEq)]
pub enum Admissible {
    Rule {
        index: usize,
        /// Next state id, or the terminal sort name.
        next: String,
        edges: Vec<(NodeId, f64)>,
    },
    Die,
}

/// The first rule of `state` with a nonempty guarded edge set at `node`.
pub fn admissible_edges(
    grammar: &TraversalGrammar,
    state: &str,
    node: &NodeId,
    network: &Network,
    context: &Context,
) -> Result<Admissible> {
    let compiled = Compiled::new(grammar, network, context)?;
    let si = compiled
        .state_index(state)
        .ok_or_else(|| Error::InvalidConfig(format!("grammar has no state {state:?}")))?;
    let ni = network
        .index_of(node)
        .ok_or_else(|| Error::UnknownNode(node.clone()))?;
    compiled.check_sort(si, ni)?;
    let mut buf = Vec::new();
    Ok(match compiled.admissible(si, ni, &mut buf) {
        Some(index) => Admissible::Rule {
            index,
            next: grammar.states[si].rules[index].next.clone(),
            edges: buf
                .into_iter()
                .map(|(t, w)| (network.node_at(t).id.clone(), w))
                .collect(),
        },
        None => Admissible::Die,
    })
}

/// Outgoing edges of `node` with a label in `labels` that pass `guard`
/// under `context`. Zero-weight edges and solutions of other problems are
/// left out.
pub fn guarded_out_edges(
    network: &Network,
    node: &NodeId,
    labels: &[&str],
    guard: &EdgeGuard,
    context: &Context,
) -> Result<Vec<(NodeId, f64)>> {
    let scope = Scope::new(network, context)?;
    let ni = network
        .index_of(node)
        .ok_or_else(|| Error::UnknownNode(node.clone()))?;
    let guard = scope.resolve_guard(guard)?;
    let mut buf = Vec::new();
    for label in labels {
        scope.collect(network, ni, scope.label_ref(network, label), None, guard, &mut buf);
    }
    Ok(buf
        .into_iter()
        .map(|(t, w)| (network.node_at(t).id.clone(), w))
        .collect())
}

//! Grammar-constrained particle swarm.
//!
//! Every epoch places particles with energy 1.0 on each input node. A
//! particle deposits its energy on the node it stands on, decays by `1 - δ`,
//! and then moves along an edge drawn from the admissible set of the current
//! grammar state, weighted by edge weight. It dies on a terminal node, when
//! no rule admits an edge, or when its energy falls below the threshold.
//! Energy accumulates across epochs; the ranking is the accumulated energy
//! on the output set, normalized to sum to one, and epochs stop once the
//! cosine between successive rankings is within tolerance of 1.
//!
//! Two execution modes share the stepping rules:
//!
//! * [`Mode::MonteCarlo`] samples each move. Randomness for a batch of
//!   particles comes from a ChaCha stream keyed by `(seed, origin, epoch,
//!   batch)`, and batch deposits are merged in a fixed order, so results do
//!   not depend on the worker count.
//! * [`Mode::Deterministic`] splits each particle across the whole
//!   admissible distribution, carrying probability mass instead of sampling.
//!   Fragments at the same node, state and depth are merged, which computes
//!   the Monte Carlo expectation exactly.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grammar::{Compiled, Context, Next, TraversalGrammar};
use crate::graph::{Network, NodeId};

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_MAX_HOPS: usize = 10_000;
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.0;

/// Particles drawn from one random stream.
const BATCH: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    MonteCarlo { seed: u64, particles_per_source: usize },
    /// Fragments whose deposit would fall below `prune_threshold` are
    /// dropped.
    Deterministic { prune_threshold: f64 },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Deterministic {
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig {
    /// Fraction of energy lost per step, in `[0, 1]`.
    pub decay: f64,
    /// Particles with less energy than this after decaying die.
    pub energy_threshold: f64,
    pub max_epochs: usize,
    /// Stop once `1 - cosine` between successive rankings is at most this.
    /// `None` always runs `max_epochs`.
    pub convergence_tolerance: Option<f64>,
    /// Cap on moves per particle; walks cut here count as alive at epoch end.
    pub max_hops: usize,
    pub mode: Mode,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    /// Worker threads for Monte Carlo epochs. `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SwarmConfig {
    pub fn new(inputs: Vec<NodeId>, outputs: Vec<NodeId>) -> Self {
        SwarmConfig {
            decay: 0.0,
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            max_epochs: DEFAULT_MAX_EPOCHS,
            convergence_tolerance: Some(DEFAULT_TOLERANCE),
            max_hops: DEFAULT_MAX_HOPS,
            mode: Mode::default(),
            inputs,
            outputs,
            workers: None,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn monte_carlo(self, seed: u64, particles_per_source: usize) -> Self {
        self.with_mode(Mode::MonteCarlo {
            seed,
            particles_per_source,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if !(0.0..=1.0).contains(&self.decay) {
            return bad("decay must lie in [0, 1]");
        }
        if !(self.energy_threshold > 0.0 && self.energy_threshold.is_finite()) {
            return bad("energy threshold must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max epochs must be positive");
        }
        if self.convergence_tolerance.is_some_and(|t| !(t >= 0.0)) {
            return bad("convergence tolerance must be non-negative");
        }
        if self.inputs.is_empty() {
            return bad("input set is empty");
        }
        if self.outputs.is_empty() {
            return bad("output set is empty");
        }
        if self.workers == Some(0) {
            return bad("worker count must be positive");
        }
        match self.mode {
            Mode::MonteCarlo {
                particles_per_source: 0,
                ..
            } => bad("particles per source must be positive"),
            Mode::Deterministic { prune_threshold } if !(prune_threshold >= 0.0) => {
                bad("prune threshold must be non-negative")
            }
            _ => Ok(()),
        }
    }
}

/// Accumulated activation per node, with compensated summation.
#[derive(Clone, Debug)]
pub struct EnergyVector {
    ids: Vec<NodeId>,
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl EnergyVector {
    pub fn new(network: &Network) -> Self {
        let n = network.node_count();
        EnergyVector {
            ids: network.nodes().iter().map(|node| node.id.clone()).collect(),
            sum: vec![0.0; n],
            comp: vec![0.0; n],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, ix: usize, value: f64) {
        // Neumaier summation.
        let s = self.sum[ix];
        let t = s + value;
        if s.abs() >= value.abs() {
            self.comp[ix] += (s - t) + value;
        } else {
            self.comp[ix] += (value - t) + s;
        }
        self.sum[ix] = t;
    }

    pub(crate) fn value(&self, ix: usize) -> f64 {
        self.sum[ix] + self.comp[ix]
    }

    pub fn deposit(&mut self, node: &NodeId, amount: f64) -> Result<()> {
        let ix = self
            .ids
            .iter()
            .position(|id| id == node)
            .ok_or_else(|| Error::UnknownNode(node.clone()))?;
        self.add(ix, amount);
        Ok(())
    }

    pub fn get(&self, node: &NodeId) -> f64 {
        self.ids
            .iter()
            .position(|id| id == node)
            .map_or(0.0, |ix| self.value(ix))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, f64)> {
        self.ids.iter().enumerate().map(|(ix, id)| (id, self.value(ix)))
    }

    pub fn total(&self) -> f64 {
        (0..self.ids.len()).map(|ix| self.value(ix)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub current: NodeId,
    pub energy: f64,
    pub state: String,
    pub origin: NodeId,
    /// Moves taken so far, which is also the number of decays applied.
    pub hops: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Death {
    Terminal,
    NoEdge,
    Exhausted,
    HopLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Moved(Particle),
    Died(Death),
}

#[inline]
fn decayed(energy: f64, decay: f64) -> f64 {
    energy * (1.0 - decay)
}

/// Adds the particle's energy to its current node, then decays it.
pub fn deposit_and_decay(p: &mut Particle, e: &mut EnergyVector, decay: f64) -> Result<()> {
    e.deposit(&p.current, p.energy)?;
    p.energy = decayed(p.energy, decay);
    Ok(())
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Restricts `e` to `outputs` and scales it to sum to one.
pub fn normalize_output(e: &EnergyVector, outputs: &[NodeId]) -> Result<Vec<(NodeId, f64)>> {
    let values: Vec<f64> = outputs.iter().map(|id| e.get(id)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(outputs
        .iter()
        .cloned()
        .zip(values.into_iter().map(|v| v / total))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Cosine against the previous epoch's ranking; absent for the first
    /// epoch and whenever either ranking is undefined.
    pub cosine: Option<f64>,
    pub steps: u64,
    pub alive_end: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpochStats {
    pub steps: u64,
    pub alive_end: u64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// Normalized energy over the output set, in output-set order.
    pub ranking: Vec<(NodeId, f64)>,
    pub energy: EnergyVector,
    pub epochs: usize,
    pub converged: bool,
    pub trace: Vec<EpochTrace>,
    pub steps: u64,
}

impl RunResult {
    pub fn weight(&self, node: &NodeId) -> Option<f64> {
        self.ranking.iter().find(|(id, _)| id == node).map(|(_, w)| *w)
    }
}

/// Writes the convergence trace as
/// `epoch,cosine,total_steps,alive_particles_end` CSV.
pub fn write_trace_csv<W: Write>(trace: &[EpochTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "cosine", "total_steps", "alive_particles_end"])?;
    for t in trace {
        w.write_record([
            t.epoch.to_string(),
            t.cosine.map(|c| format!("{c:.17}")).unwrap_or_default(),
            t.steps.to_string(),
            t.alive_end.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const TERMINAL_STATE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Walker {
    node: usize,
    state: usize,
    energy: f64,
    hops: usize,
}

enum Advance {
    Moved,
    Died(Death),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// A grammar, network, context and configuration bound together for runs.
pub struct Swarm<'a> {
    compiled: Compiled<'a>,
    config: SwarmConfig,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Swarm<'a> {
    pub fn new(
        network: &'a Network,
        grammar: &'a TraversalGrammar,
        context: &Context,
        config: SwarmConfig,
    ) -> Result<Self> {
        config.validate()?;
        let compiled = Compiled::new(grammar, network, context)?;
        let lookup = |id: &NodeId| {
            network
                .index_of(id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))
        };
        let inputs = config.inputs.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        for &ix in &inputs {
            compiled.check_sort(compiled.start, ix)?;
        }
        let outputs = config.outputs.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let pool = match config.workers {
            Some(n) if n > 1 => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            ),
            _ => None,
        };
        Ok(Swarm {
            compiled,
            config,
            inputs,
            outputs,
            pool,
        })
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    /// A fresh particle at `origin` in the start state.
    pub fn spawn(&self, origin: &NodeId) -> Particle {
        Particle {
            current: origin.clone(),
            energy: 1.0,
            state: self.compiled.grammar.start().to_owned(),
            origin: origin.clone(),
            hops: 0,
        }
    }

    /// One deposit, decay and move.
    #[inline]
    fn advance<R: Rng>(
        &self,
        w: &mut Walker,
        deposit: &mut impl FnMut(usize, f64),
        buf: &mut Vec<(usize, f64)>,
        rng: &mut R,
    ) -> Advance {
        deposit(w.node, w.energy);
        w.energy = decayed(w.energy, self.config.decay);
        if self.compiled.is_terminal(w.node) {
            return Advance::Died(Death::Terminal);
        }
        let Some(rule) = self.compiled.admissible(w.state, w.node, buf) else {
            return Advance::Died(Death::NoEdge);
        };
        if w.energy < self.config.energy_threshold {
            return Advance::Died(Death::Exhausted);
        }
        if w.hops >= self.config.max_hops {
            return Advance::Died(Death::HopLimit);
        }
        let total: f64 = buf.iter().map(|(_, wt)| wt).sum();
        let mut u = rng.random::<f64>() * total;
        let mut target = buf[buf.len() - 1].0;
        for &(t, wt) in buf.iter() {
            if u < wt {
                target = t;
                break;
            }
            u -= wt;
        }
        w.node = target;
        w.state = match self.compiled.next(w.state, rule) {
            Next::State(s) => s,
            Next::Terminal => TERMINAL_STATE,
        };
        w.hops += 1;
        Advance::Moved
    }

    /// Advances one particle by a single step with the given sampler.
    pub fn step<R: Rng>(&self, p: &Particle, e: &mut EnergyVector, rng: &mut R) -> Result<Step> {
        let network = self.compiled.network;
        let node = network
            .index_of(&p.current)
            .ok_or_else(|| Error::UnknownNode(p.current.clone()))?;
        let state = match self.compiled.state_index(&p.state) {
            Some(s) => {
                if !self.compiled.is_terminal(node) {
                    self.compiled.check_sort(s, node)?;
                }
                s
            }
            None if self.compiled.is_terminal(node) => TERMINAL_STATE,
            None => {
                return Err(Error::InvalidConfig(format!("grammar has no state {:?}", p.state)));
            }
        };
        let mut w = Walker {
            node,
            state,
            energy: p.energy,
            hops: p.hops,
        };
        let mut buf = Vec::new();
        let outcome = self.advance(&mut w, &mut |ix, v| e.add(ix, v), &mut buf, rng);
        Ok(match outcome {
            Advance::Died(d) => Step::Died(d),
            Advance::Moved => Step::Moved(Particle {
                current: network.node_at(w.node).id.clone(),
                energy: w.energy,
                state: if w.state == TERMINAL_STATE {
                    network.node_at(w.node).sort.name().to_owned()
                } else {
                    self.compiled.state_id(w.state).to_owned()
                },
                origin: p.origin.clone(),
                hops: w.hops,
            }),
        })
    }

    /// One epoch: distribute particles to the input set and propagate them
    /// until all have died.
    pub fn run_epoch(&self, epoch: usize, e: &mut EnergyVector) -> EpochStats {
        match self.config.mode {
            Mode::Deterministic { prune_threshold } => self.expectation_epoch(prune_threshold, e),
            Mode::MonteCarlo {
                seed,
                particles_per_source,
            } => self.monte_carlo_epoch(seed, particles_per_source, epoch, e),
        }
    }

    fn expectation_epoch(&self, prune: f64, e: &mut EnergyVector) -> EpochStats {
        let mut stats = EpochStats::default();
        let mut frontier: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &src in &self.inputs {
            *frontier.entry((src, self.compiled.start)).or_insert(0.0) += 1.0;
        }
        let mut energy = 1.0;
        let mut buf = Vec::new();
        let mut depth = 0;
        while !frontier.is_empty() {
            let post = decayed(energy, self.config.decay);
            let mut next: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (&(node, state), &mass) in &frontier {
                e.add(node, mass * energy);
                stats.steps += 1;
                if self.compiled.is_terminal(node) {
                    continue;
                }
                let Some(rule) = self.compiled.admissible(state, node, &mut buf) else {
                    continue;
                };
                if post < self.config.energy_threshold {
                    continue;
                }
                if depth >= self.config.max_hops {
                    stats.alive_end += 1;
                    continue;
                }
                let next_state = match self.compiled.next(state, rule) {
                    Next::State(s) => s,
                    Next::Terminal => TERMINAL_STATE,
                };
                let total: f64 = buf.iter().map(|(_, w)| w).sum();
                for &(t, w) in &buf {
                    let m = mass * (w / total);
                    if m * post < prune {
                        continue;
                    }
                    *next.entry((t, next_state)).or_insert(0.0) += m;
                }
            }
            frontier = next;
            energy = post;
            depth += 1;
        }
        stats
    }

    fn monte_carlo_epoch(
        &self,
        seed: u64,
        per_source: usize,
        epoch: usize,
        e: &mut EnergyVector,
    ) -> EpochStats {
        let network = self.compiled.network;
        let items: Vec<(usize, u64, usize)> = self
            .inputs
            .iter()
            .flat_map(|&src| {
                (0..per_source.div_ceil(BATCH)).map(move |b| {
                    let count = BATCH.min(per_source - b * BATCH);
                    (src, b as u64, count)
                })
            })
            .collect();

        let run_batch = |scratch: &mut Scratch, &(src, batch, count): &(usize, u64, usize)| {
            let origin = network.node_at(src).id.as_str().as_bytes();
            let key = splitmix64(splitmix64(seed ^ fnv1a(origin)) ^ epoch as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(batch);
            let mut stats = EpochStats::default();
            let mut buf = Vec::new();
            for _ in 0..count {
                let mut w = Walker {
                    node: src,
                    state: self.compiled.start,
                    energy: 1.0,
                    hops: 0,
                };
                loop {
                    stats.steps += 1;
                    let outcome =
                        self.advance(&mut w, &mut |ix, v| scratch.add(ix, v), &mut buf, &mut rng);
                    match outcome {
                        Advance::Moved => {}
                        Advance::Died(Death::HopLimit) => {
                            stats.alive_end += 1;
                            break;
                        }
                        Advance::Died(_) => break,
                    }
                }
            }
            (scratch.drain(), stats)
        };

        let n = network.node_count();
        let partials: Vec<(Vec<(usize, f64)>, EpochStats)> = match &self.pool {
            Some(pool) => pool.install(|| {
                items
                    .par_iter()
                    .map_init(|| Scratch::new(n), run_batch)
                    .collect()
            }),
            None if self.config.workers.is_none() => items
                .par_iter()
                .map_init(|| Scratch::new(n), run_batch)
                .collect(),
            None => {
                let mut scratch = Scratch::new(n);
                items.iter().map(|item| run_batch(&mut scratch, item)).collect()
            }
        };
        let mut stats = EpochStats::default();
        for (deposits, s) in partials {
            for (ix, v) in deposits {
                e.add(ix, v);
            }
            stats.steps += s.steps;
            stats.alive_end += s.alive_end;
        }
        stats
    }

    fn output_ranking(&self, e: &EnergyVector) -> Option<Vec<f64>> {
        let values: Vec<f64> = self.outputs.iter().map(|&ix| e.value(ix)).collect();
        let total: f64 = values.iter().sum();
        (total > 0.0).then(|| values.into_iter().map(|v| v / total).collect())
    }

    pub fn run(&self) -> Result<RunResult> {
        let mut e = EnergyVector::new(self.compiled.network);
        let deterministic = matches!(self.config.mode, Mode::Deterministic { .. });
        let mut trace = Vec::new();
        let mut prev: Option<Vec<f64>> = None;
        let mut current = None;
        let mut converged = false;
        let mut steps = 0;
        for epoch in 0..self.config.max_epochs {
            let stats = self.run_epoch(epoch, &mut e);
            steps += stats.steps;
            current = self.output_ranking(&e);
            if deterministic && current.is_none() {
                // Every later epoch repeats this one exactly.
                return Err(Error::NoOutputEnergy);
            }
            let cosine = match (&prev, &current) {
                (Some(p), Some(c)) => cosine_similarity(p, c).ok(),
                _ => None,
            };
            trace.push(EpochTrace {
                epoch: epoch + 1,
                cosine,
                steps: stats.steps,
                alive_end: stats.alive_end,
            });
            if let (Some(c), Some(tol)) = (cosine, self.config.convergence_tolerance) {
                if 1.0 - c <= tol {
                    converged = true;
                    break;
                }
            }
            prev = current.clone();
        }
        let ranking = current.ok_or(Error::NoOutputEnergy)?;
        Ok(RunResult {
            ranking: self.config.outputs.iter().cloned().zip(ranking).collect(),
            energy: e,
            epochs: trace.len(),
            converged,
            trace,
            steps,
        })
    }
}

/// Dense per-batch deposit buffer that remembers which entries it touched.
struct Scratch {
    values: Vec<f64>,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            values: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    #[inline]
    fn add(&mut self, ix: usize, v: f64) {
        if self.values[ix] == 0.0 {
            self.touched.push(ix);
        }
        self.values[ix] += v;
    }

    fn drain(&mut self) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        self.touched.dedup();
        let out = self
            .touched
            .iter()
            .map(|&ix| (ix, std::mem::take(&mut self.values[ix])))
            .collect();
        self.touched.clear();
        out
    }
}

/// Runs one epoch of `grammar` from the configured inputs.
pub fn run_epoch(
    network: &Network,
    grammar: &TraversalGrammar,
    context: &Context,
    config: &SwarmConfig,
    e: &mut EnergyVector,
) -> Result<EpochStats> {
    let swarm = Swarm::new(network, grammar, context, config.clone())?;
    Ok(swarm.run_epoch(0, e))
}

/// Runs epochs until convergence or the epoch cap.
pub fn run(
    network: &Network,
    grammar: &TraversalGrammar,
    context: &Context,
    config: SwarmConfig,
) -> Result<RunResult> {
    Swarm::new(network, grammar, context, config)?.run()
}

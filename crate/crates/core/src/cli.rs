//! The `swarmrank` command line.
//!
//! Exit status: 0 on success, 1 for validation and decision failures, 2 for
//! usage errors, 3 for unreadable or malformed input files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::aggregation::{
    payload_of, rank_domains, rank_solutions, round_sig, select_outcome, Algorithm,
    CategorizationMethod, CentralityMetric, Dictator, RankOptions, SelectionRule, SolutionRanking,
};
use crate::error::Error;
use crate::grammar::{builtin, parse_grammar_with_schema, serialize_grammar, TraversalGrammar, BUILTIN_NAMES};
use crate::graph::{Network, NodeId, Schema, SchemaMode};
use crate::scenario;
use crate::swarm::{self, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "swarmrank", version, about = "Rank solutions on social decision networks with grammar-constrained particle swarms")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, env = "SWARMRANK_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file against the schema.
    Validate {
        graph: PathBuf,
    },
    /// Rank the solutions of a problem.
    Rank {
        graph: PathBuf,
        #[command(flatten)]
        alg: AlgorithmArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Write the per-epoch convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Rank the domains that categorize a problem and derive uses weights.
    Categorize {
        graph: PathBuf,
        #[arg(long)]
        problem: String,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rank, then reduce the ranking to one outcome.
    Decide {
        graph: PathBuf,
        #[command(flatten)]
        alg: AlgorithmArgs,
        #[arg(long, value_enum, default_value_t = Selection::Plurality)]
        selection: Selection,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Parse a grammar and print its canonical form.
    GrammarCheck {
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        path: Option<PathBuf>,
        /// Print a built-in grammar instead.
        #[arg(long)]
        builtin: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct AlgorithmArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, value_enum, default_value_t = AlgName::Dd)]
    pub alg: AlgName,
    /// Grammar file or built-in name, for `--alg custom`.
    #[arg(long, required_if_eq("alg", "custom"))]
    pub grammar: Option<String>,
    /// Dictator id; defaults to the most trusted human.
    #[arg(long)]
    pub dictator: Option<String>,
    #[arg(long, value_enum, default_value_t = Metric::Indegree)]
    pub dictator_metric: Metric,
    /// Bind a node set for grammar guards, as `name=id,id,...`. Repeatable.
    #[arg(long = "set", value_parser = parse_set)]
    pub sets: Vec<(String, Vec<String>)>,
}

fn parse_set(s: &str) -> Result<(String, Vec<String>), String> {
    let (name, ids) = s.split_once('=').ok_or("expected name=id,id,...")?;
    if name.is_empty() {
        return Err("set name is empty".into());
    }
    let ids = ids.split(',').filter(|id| !id.is_empty()).map(str::to_owned).collect();
    Ok((name.to_owned(), ids))
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Det)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo particles per source node.
    #[arg(long, default_value_t = 10_000)]
    pub particles: usize,
    /// Per-step energy decay. Defaults to 0 for dd and dictator and 0.15
    /// otherwise; these are implementation choices, not model constants.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Particles below this energy die.
    #[arg(long, default_value_t = swarm::DEFAULT_ENERGY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = swarm::DEFAULT_MAX_EPOCHS)]
    pub max_epochs: usize,
    /// Stop once 1 - cosine between successive rankings is at most this.
    #[arg(long, default_value_t = swarm::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Deterministic mode drops fragments depositing less than this.
    #[arg(long, default_value_t = swarm::DEFAULT_PRUNE_THRESHOLD)]
    pub prune: f64,
    #[arg(long, default_value_t = swarm::DEFAULT_MAX_HOPS)]
    pub max_hops: usize,
    /// How problem categorization derives uses weights.
    #[arg(long, value_enum, default_value_t = Method::Recursive)]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print a table instead of JSON.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgName {
    Dd,
    Rd,
    Ddd,
    Dictator,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Det,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Recursive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Indegree,
    Eigenvector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    Plurality,
    Average,
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_INPUT,
            Error::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn failure(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "swarmrank: {}", f.message);
            f.code
        }
    }
}

fn load_valid_network(path: &Path) -> CliResult<Network> {
    let text = fs::read_to_string(path)
        .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    let loaded = scenario::from_json_str(&text)
        .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    let violations = loaded.violations();
    if let Some(first) = violations.first() {
        return Err(failure(
            EXIT_DOMAIN,
            format!("{}: {} violation(s), first: {first}", path.display(), violations.len()),
        ));
    }
    Ok(loaded.network)
}

fn load_grammar(spec: &str, schema: &Schema) -> CliResult<TraversalGrammar> {
    let path = Path::new(spec);
    if !path.exists() && BUILTIN_NAMES.contains(&spec) {
        return Ok(builtin(spec)?);
    }
    let text = fs::read_to_string(path).map_err(|e| failure(EXIT_INPUT, format!("{spec}: {e}")))?;
    parse_grammar_with_schema(&text, schema).map_err(|e| failure(EXIT_DOMAIN, format!("{spec}:{e}")))
}

fn options(engine: &EngineArgs, threads: Option<usize>) -> RankOptions {
    RankOptions {
        sets: Default::default(),
        decay: engine.delta,
        mode: match engine.mode {
            ModeArg::Det => Mode::Deterministic {
                prune_threshold: engine.prune,
            },
            ModeArg::Mc => Mode::MonteCarlo {
                seed: engine.seed,
                particles_per_source: engine.particles,
            },
        },
        energy_threshold: engine.threshold,
        max_epochs: engine.max_epochs,
        convergence_tolerance: Some(engine.tolerance),
        max_hops: engine.max_hops,
        workers: threads,
        categorization: match engine.method {
            Method::Direct => CategorizationMethod::Direct,
            Method::Recursive => CategorizationMethod::Recursive,
        },
    }
}

fn rank_options(alg: &AlgorithmArgs, engine: &EngineArgs, threads: Option<usize>) -> RankOptions {
    let mut opts = options(engine, threads);
    for (name, ids) in &alg.sets {
        opts.sets
            .entry(name.clone())
            .or_default()
            .extend(ids.iter().map(|id| NodeId::new(id.as_str())));
    }
    opts
}

fn algorithm(args: &AlgorithmArgs, network: &Network) -> CliResult<Algorithm> {
    Ok(match args.alg {
        AlgName::Dd => Algorithm::DirectDemocracy,
        AlgName::Rd => Algorithm::RepresentativeDemocracy,
        AlgName::Ddd => Algorithm::DynamicallyDistributed,
        AlgName::Dictator => Algorithm::Dictator(match &args.dictator {
            Some(h) => Dictator::Human(NodeId::new(h.as_str())),
            None => Dictator::Metric(match args.dictator_metric {
                Metric::Indegree => CentralityMetric::InDegreeTrusts,
                Metric::Eigenvector => CentralityMetric::EigenvectorCentrality,
            }),
        }),
        AlgName::Custom => {
            let spec = args.grammar.as_deref().expect("clap requires --grammar");
            Algorithm::Custom(load_grammar(spec, network.schema())?)
        }
    })
}

fn emit(output: &OutputArgs, value: &serde_json::Value, table: String, out: &mut dyn Write) -> CliResult {
    let text = if output.pretty {
        table
    } else {
        let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
        s.push('\n');
        s
    };
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| failure(EXIT_INPUT, e.to_string())),
    }
}

fn ranking_table(r: &SolutionRanking) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "problem {}  algorithm {}", r.problem.problem, r.algorithm);
    if let Some(d) = &r.dictator {
        let _ = writeln!(t, "dictator {}{}", d.human, if d.tied { " (tie)" } else { "" });
    }
    for (id, w) in r.ranking.entries() {
        let _ = writeln!(t, "  {:<12} {:.6}", id.as_str(), w);
    }
    for group in r.ranking.ties() {
        let ids: Vec<&str> = group.iter().map(|id| id.as_str()).collect();
        let _ = writeln!(t, "  tie: {}", ids.join(", "));
    }
    let _ = writeln!(
        t,
        "epochs {}{}",
        r.run.epochs,
        if r.run.converged { " (converged)" } else { "" }
    );
    t
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    if cli.threads == Some(0) {
        return Err(failure(EXIT_USAGE, "thread count must be positive"));
    }
    match &cli.command {
        Command::Validate { graph } => {
            let text = fs::read_to_string(graph)
                .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", graph.display())))?;
            let loaded = scenario::from_json_str(&text)
                .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", graph.display())))?;
            let violations = loaded.violations();
            let mut report = String::new();
            for v in &violations {
                let _ = writeln!(report, "{v}");
            }
            if violations.is_empty() {
                let _ = writeln!(
                    report,
                    "OK, {} nodes, {} edges",
                    loaded.network.node_count(),
                    loaded.network.edge_count()
                );
            }
            out.write_all(report.as_bytes())
                .map_err(|e| failure(EXIT_INPUT, e.to_string()))?;
            if violations.is_empty() {
                Ok(())
            } else {
                Err(failure(EXIT_DOMAIN, format!("{} violation(s)", violations.len())))
            }
        }
        Command::Rank {
            graph,
            alg,
            engine,
            output,
            trace,
        } => {
            let network = load_valid_network(graph)?;
            let algorithm = algorithm(alg, &network)?;
            let r = rank_solutions(&network, &NodeId::new(alg.problem.as_str()), &algorithm, &rank_options(alg, engine, cli.threads))?;
            if let Some(path) = trace {
                let file = fs::File::create(path)
                    .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", path.display())))?;
                swarm::write_trace_csv(&r.run.trace, file)?;
            }
            emit(output, &r.to_json(), ranking_table(&r), out)
        }
        Command::Categorize {
            graph,
            problem,
            engine,
            output,
        } => {
            let network = load_valid_network(graph)?;
            let opts = options(engine, cli.threads);
            let problem = NodeId::new(problem.as_str());
            let d = rank_domains(&network, &problem, opts.categorization, &opts)?;
            let uses = if network.schema().mode() == SchemaMode::MultipleDomains {
                crate::aggregation::compute_uses_weights(&network, &problem, opts.categorization, &opts)?
            } else {
                Default::default()
            };
            let value = json!({
                "problem": problem,
                "method": d.method.name(),
                "domains": d.ranking.entries().iter().map(|(id, w)| json!({
                    "domain": id,
                    "name": d.name_of[id],
                    "weight": round_sig(*w),
                })).collect::<Vec<_>>(),
                "names": d.names.entries().iter().map(|(n, w)| json!({
                    "name": n,
                    "weight": round_sig(*w),
                })).collect::<Vec<_>>(),
                "uses": uses.iter().flat_map(|(h, entries)| entries.iter().map(move |(dom, w)| json!({
                    "human": h,
                    "domain": dom,
                    "weight": round_sig(*w),
                }))).collect::<Vec<_>>(),
                "epochs": d.run.epochs,
                "converged": d.run.converged,
            });
            let mut t = String::new();
            let _ = writeln!(t, "problem {}  method {}", problem, d.method.name());
            for (n, w) in d.names.entries() {
                let _ = writeln!(t, "  {:<16} {:.6}", n.as_str(), w);
            }
            let _ = writeln!(t, "uses weights");
            for (h, entries) in &uses {
                for (dom, w) in entries {
                    let _ = writeln!(t, "  {:<8} {:<8} {:.6}", h.as_str(), dom.as_str(), w);
                }
            }
            emit(output, &value, t, out)
        }
        Command::Decide {
            graph,
            alg,
            selection,
            engine,
            output,
        } => {
            let network = load_valid_network(graph)?;
            let algorithm = algorithm(alg, &network)?;
            let r = rank_solutions(&network, &NodeId::new(alg.problem.as_str()), &algorithm, &rank_options(alg, engine, cli.threads))?;
            let rule = match selection {
                Selection::Plurality => SelectionRule::Plurality,
                Selection::Average => SelectionRule::NumericAverage,
            };
            let outcome = select_outcome(&r.ranking, rule, payload_of(&network))?;
            let mut value = r.to_json();
            match &outcome {
                crate::aggregation::Outcome::Winner { solution, tied } => {
                    value["selection"] = json!("plurality");
                    value["winner"] = json!(solution);
                    value["tied"] = json!(tied);
                }
                crate::aggregation::Outcome::Value(v) => {
                    value["selection"] = json!("average");
                    value["value"] = json!(round_sig(*v));
                }
            }
            let mut t = ranking_table(&r);
            let _ = writeln!(t, "outcome {outcome}");
            emit(output, &value, t, out)
        }
        Command::GrammarCheck { path, builtin: name } => {
            let grammar = match (path, name) {
                (_, Some(name)) => builtin(name)?,
                (Some(path), None) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| failure(EXIT_INPUT, format!("{}: {e}", path.display())))?;
                    parse_grammar_with_schema(&text, &Schema::new(SchemaMode::MultipleDomains))
                        .map_err(|e| failure(EXIT_DOMAIN, format!("{}:{e}", path.display())))?
                }
                (None, None) => unreachable!("clap requires a path or --builtin"),
            };
            out.write_all(serialize_grammar(&grammar).as_bytes())
                .map_err(|e| failure(EXIT_INPUT, e.to_string()))
        }
    }
}

//! Monte Carlo sampling against the exact expectation, with a trace.

use std::io;

use swarmrank::aggregation::{rank_solutions, Algorithm, RankOptions};
use swarmrank::scenario;
use swarmrank::swarm::{write_trace_csv, Mode};
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/categorization.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");
    let alg = Algorithm::DynamicallyDistributed;

    let exact = rank_solutions(&network, &p0, &alg, &RankOptions::default())?;
    println!("expectation: {:?}", exact.ranking.entries());

    for particles in [100, 1_000, 10_000, 100_000] {
        let options = RankOptions {
            mode: Mode::MonteCarlo {
                seed: 7,
                particles_per_source: particles,
            },
            ..RankOptions::default()
        };
        let mc = rank_solutions(&network, &p0, &alg, &options)?;
        let l1: f64 = exact
            .ranking
            .entries()
            .iter()
            .map(|(id, w)| (w - mc.ranking.get(id).unwrap_or(0.0)).abs())
            .sum();
        println!("{particles:>7} particles/source: L1 {l1:.5} after {} epochs", mc.run.epochs);
        if particles == 1_000 {
            write_trace_csv(&mc.run.trace, io::stdout())?;
        }
    }
    Ok(())
}

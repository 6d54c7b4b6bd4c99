//! One human splitting a vote 60/40 between two solutions.
//!
//! Deterministic mode gives the split exactly; Monte Carlo with enough
//! particles lands close to it.

use swarmrank::aggregation::{rank_solutions, Algorithm, RankOptions};
use swarmrank::scenario;
use swarmrank::swarm::Mode;
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fig10.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");

    let exact = rank_solutions(&network, &p0, &Algorithm::DirectDemocracy, &RankOptions::default())?;
    println!("deterministic:");
    for (id, w) in exact.ranking.entries() {
        println!("  {id}  {w:.6}");
    }

    let options = RankOptions {
        mode: Mode::MonteCarlo {
            seed: 42,
            particles_per_source: 100,
        },
        max_epochs: 1,
        ..RankOptions::default()
    };
    let sampled = rank_solutions(&network, &p0, &Algorithm::DirectDemocracy, &options)?;
    println!("100 particles, one epoch:");
    for (id, w) in sampled.ranking.entries() {
        println!("  {id}  {w:.2}  (~{} arrivals)", (w * 100.0).round());
    }
    Ok(())
}

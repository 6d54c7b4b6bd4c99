//! Trust passed along a chain until it reaches someone who voted.
//!
//! h0 trusts h1, h1 trusts h2, and h2 votes for s1; h3 votes for s2. With
//! no decay three of the four particles end on s1. Decay discounts the long
//! delegation path.

use swarmrank::aggregation::{rank_solutions, Algorithm, RankOptions};
use swarmrank::scenario;
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/delegation.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");
    let s1 = NodeId::new("s1");

    for delta in [0.0, 0.15, 0.5] {
        let options = RankOptions {
            decay: Some(delta),
            ..RankOptions::default()
        };
        let ddd = rank_solutions(&network, &p0, &Algorithm::DynamicallyDistributed, &options)?;
        let rd = rank_solutions(&network, &p0, &Algorithm::RepresentativeDemocracy, &options)?;
        println!(
            "delta {delta:<4}  ddd s1={:.4}  rd s1={:.4}",
            ddd.ranking.get(&s1).unwrap_or(0.0),
            rd.ranking.get(&s1).unwrap_or(0.0)
        );
    }
    Ok(())
}

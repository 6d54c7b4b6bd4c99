//! Turning a ranking into a decision: a winner, or a weighted estimate.

use swarmrank::aggregation::{payload_of, rank_solutions, select_outcome, Algorithm, RankOptions, SelectionRule};
use swarmrank::scenario;
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/estimates.json");
    let network = scenario::load(path)?.network;
    let r = rank_solutions(&network, &NodeId::new("p0"), &Algorithm::DynamicallyDistributed, &RankOptions::default())?;
    println!("ranking {:?}", r.ranking.entries());
    for rule in [SelectionRule::Plurality, SelectionRule::NumericAverage] {
        let outcome = select_outcome(&r.ranking, rule, payload_of(&network))?;
        println!("{rule:?}: {outcome}");
    }
    Ok(())
}

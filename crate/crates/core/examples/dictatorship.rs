//! Picking a single representative from the trust graph.

use swarmrank::aggregation::{rank_solutions, select_dictator, Algorithm, CentralityMetric, Dictator, RankOptions};
use swarmrank::scenario;
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/dictator.json");
    let network = scenario::load(path)?.network;

    for metric in [CentralityMetric::InDegreeTrusts, CentralityMetric::EigenvectorCentrality] {
        let choice = select_dictator(&network, metric)?;
        print!("{metric:?}: {}{}  scores", choice.human, if choice.tied { " (tie)" } else { "" });
        for (h, s) in &choice.scores {
            print!(" {h}={s:.3}");
        }
        println!();
    }

    let alg = Algorithm::Dictator(Dictator::Metric(CentralityMetric::InDegreeTrusts));
    let r = rank_solutions(&network, &NodeId::new("p0"), &alg, &RankOptions::default())?;
    for (id, w) in r.ranking.entries() {
        println!("  {id}  {w:.3}");
    }
    Ok(())
}

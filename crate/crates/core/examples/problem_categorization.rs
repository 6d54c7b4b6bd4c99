//! Categorizing a problem into domains and deriving `uses` weights.
//!
//! h0 categorized the problem directly and keeps that split. h3 did not,
//! so h3 inherits the collective split between the domain names it owns.

use swarmrank::aggregation::{compute_uses_weights, rank_domains, CategorizationMethod, RankOptions};
use swarmrank::scenario;
use swarmrank::NodeId;

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/categorization.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");
    let options = RankOptions::default();

    for method in [CategorizationMethod::Direct, CategorizationMethod::Recursive] {
        let d = rank_domains(&network, &p0, method, &options)?;
        print!("{:<9}", method.name());
        for (name, w) in d.names.entries() {
            print!("  {name}={w:.4}");
        }
        println!();
    }

    let uses = compute_uses_weights(&network, &p0, CategorizationMethod::Recursive, &options)?;
    for (human, entries) in &uses {
        for (domain, w) in entries {
            let name = network.node(domain).and_then(|n| n.name.as_deref()).unwrap_or("");
            println!("uses({human}, {domain} \"{name}\") = {w:.4}");
        }
    }
    Ok(())
}

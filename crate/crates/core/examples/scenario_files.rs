//! Building a network in code, saving it, and checking it on reload.

use swarmrank::graph::{Edge, Sort};
use swarmrank::{labels, scenario, Network, SchemaMode};

fn main() -> swarmrank::Result<()> {
    let mut g = Network::new(SchemaMode::MultipleDomains);
    let alice = g.add_human();
    let bob = g.add_human();
    let astro = g.add_domain(&alice, "astronomy")?;
    let p = g.add_problem();
    let s = g.add_solution(&p, Some(3.0))?;
    g.add_edge(&astro, labels::TRUSTS, &bob, 0.8)?;
    g.add_edge(&bob, labels::VOTED_ON, &s, 1.0)?;

    // Checked insertion refuses a human-to-human trust in this mode.
    println!("rejected: {}", g.add_edge(&alice, labels::TRUSTS, &bob, 1.0).unwrap_err());

    let dir = std::env::temp_dir().join("swarmrank-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("small.json");
    scenario::save(&g, &path)?;
    let loaded = scenario::load(&path)?;
    println!("reloaded {} nodes, {} violations", loaded.network.node_count(), loaded.violations().len());

    // The unchecked path keeps bad edges so validation can report them.
    let mut raw = loaded.network;
    raw.insert_edge_unchecked(Edge {
        source: alice,
        label: labels::TRUSTS.into(),
        target: bob,
        weight: 1.0,
    })?;
    for v in raw.validate() {
        println!("{v}");
    }
    println!("humans: {:?}", raw.ids_of(Sort::Human));
    Ok(())
}

//! Writing a grammar in the text format and running it directly.

use swarmrank::grammar::{admissible_edges, Admissible};
use swarmrank::swarm::{run, SwarmConfig};
use swarmrank::{parse_grammar, scenario, serialize_grammar, Context, NodeId};

const LIQUID: &str = "
grammar liquid {
  state Human {
    try votedOn -> Solution;
    try trusts where target_in(council) -> Human;
  }
  terminal Solution;
}
";

fn main() -> swarmrank::Result<()> {
    let grammar = parse_grammar(LIQUID)?;
    print!("{}", serialize_grammar(&grammar));

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/delegation.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");

    for council in [vec!["h1", "h2"], vec!["h1"]] {
        let ctx = Context::for_problem(&p0).with_set("council", council.iter().map(|&h| NodeId::new(h)));
        match admissible_edges(&grammar, "Human", &NodeId::new("h1"), &network, &ctx)? {
            Admissible::Rule { index, edges, .. } => println!("h1 uses rule {index}: {edges:?}"),
            Admissible::Die => println!("h1's particle dies"),
        }
        let config = SwarmConfig::new(network.humans(), network.solutions_of(&p0)).with_decay(0.15);
        let result = run(&network, &grammar, &ctx, config)?;
        println!("council {council:?}: {:?}", result.ranking);
    }
    Ok(())
}

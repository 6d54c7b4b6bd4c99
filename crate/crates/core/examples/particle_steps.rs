//! Following single particles step by step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmrank::swarm::{EnergyVector, Step, Swarm, SwarmConfig};
use swarmrank::{builtin, scenario, Context, NodeId};

fn main() -> swarmrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/delegation.json");
    let network = scenario::load(path)?.network;
    let p0 = NodeId::new("p0");
    let grammar = builtin("ddd_single")?;
    let ctx = Context::for_problem(&p0);
    let config = SwarmConfig::new(network.humans(), network.solutions_of(&p0)).with_decay(0.5);
    let swarm = Swarm::new(&network, &grammar, &ctx, config)?;

    let mut energy = EnergyVector::new(&network);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = swarm.spawn(&NodeId::new("h0"));
    loop {
        print!("at {} ({}) energy {:.4}", p.current, p.state, p.energy);
        match swarm.step(&p, &mut energy, &mut rng)? {
            Step::Moved(next) => {
                println!(" -> {}", next.current);
                p = next;
            }
            Step::Died(reason) => {
                println!(" dies: {reason:?}");
                break;
            }
        }
    }
    for (id, e) in energy.iter().filter(|(_, e)| *e > 0.0) {
        println!("  {id}: {e:.4}");
    }
    Ok(())
}

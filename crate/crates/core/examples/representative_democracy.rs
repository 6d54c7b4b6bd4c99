//! A non-voter reaches a voter through a trusted domain.
//!
//! h0 has no opinion but trusts h1 in the domain the problem belongs to, so
//! under RD h1's vote counts twice. Under DD h0 is simply silent.

use swarmrank::aggregation::{rank_solutions, Algorithm, RankOptions};
use swarmrank::{labels, Network, SchemaMode};

fn main() -> swarmrank::Result<()> {
    let mut g = Network::new(SchemaMode::MultipleDomains);
    let h0 = g.add_human();
    let h1 = g.add_human();
    let h2 = g.add_human();
    let sdss = g.add_domain(&h0, "SDSS")?;
    let p0 = g.add_problem();
    let s0 = g.add_solution(&p0, None)?;
    let s1 = g.add_solution(&p0, None)?;
    g.add_edge(&h1, labels::VOTED_ON, &s0, 1.0)?;
    g.add_edge(&h2, labels::VOTED_ON, &s1, 1.0)?;
    g.add_edge(&sdss, labels::CATEGORIZED_AS, &p0, 1.0)?;
    g.add_edge(&sdss, labels::TRUSTS, &h1, 1.0)?;

    let options = RankOptions {
        decay: Some(0.0),
        ..RankOptions::default()
    };
    for alg in [
        Algorithm::DirectDemocracy,
        Algorithm::RepresentativeDemocracy,
        Algorithm::DynamicallyDistributed,
    ] {
        let r = rank_solutions(&g, &p0, &alg, &options)?;
        println!(
            "{:>3}: {s0}={:.4} {s1}={:.4}",
            alg.name(),
            r.ranking.get(&s0).unwrap_or(0.0),
            r.ranking.get(&s1).unwrap_or(0.0)
        );
    }
    Ok(())
}

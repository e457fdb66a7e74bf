//! Bounded hop distances on the bundled mini graph. Predicates are nodes
//! of their own, so a single triple puts its subject and object 2 apart.

use std::sync::Arc;

use kglink::kg::{HopOracle, SubdivisionGraph, DEFAULT_HOP_CAP};
use kglink::synthetic::mini_kg;

fn main() -> kglink::Result<()> {
    let kg = mini_kg()?.knowledge_graph()?;
    println!("{} vertices, {} predicates, {} triples", kg.vertex_count(), kg.label_count(), kg.triple_count());
    let oracle = HopOracle::new(Arc::new(SubdivisionGraph::build(&kg)), DEFAULT_HOP_CAP)?;
    for (a, b) in [
        ("dbr:Elon_Musk", "dbr:SpaceX"),
        ("dbr:Elon_Musk", "dbo:foundedBy"),
        ("dbr:Tesla_Motors", "dbr:SpaceX"),
        ("dbo:foundedBy", "dbo:birthPlace"),
        ("dbr:Nikola_Tesla", "dbr:SpaceX"),
    ] {
        println!("{a:>20} .. {b:<20} {:?}", oracle.hop_distance(a, b)?);
    }
    println!("searches run: {}", oracle.searches_run());
    Ok(())
}

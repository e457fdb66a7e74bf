//! Top-k label retrieval, separately for entities and relations.
//!
//! cargo run --example label_search -- [keyword] [k]

use kglink::synthetic::mini_kg;
use kglink::Kind;

fn main() -> kglink::Result<()> {
    let mut args = std::env::args().skip(1);
    let keyword = args.next().unwrap_or_else(|| "Tesla".into());
    let k = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let index = mini_kg()?.index()?;
    for kind in [Kind::Entity, Kind::Relation] {
        let list = index.search(&keyword, kind, k)?;
        println!("{kind} candidates for {keyword:?}:");
        for c in &list.candidates {
            println!("  {:>2}. {:<24} {:.3}  via {:?}", c.initial_rank, c.uri, c.text_score, c.matched_label);
        }
    }
    Ok(())
}

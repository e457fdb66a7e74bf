//! Cross-validated MRR of the re-ranker with rank only, density only and
//! both, on a seeded synthetic benchmark with gold injection.
//!
//! cargo run --example feature_ablation -- [questions] [seed]

use std::collections::BTreeMap;

use kglink::pipeline::{ablation, training_records, Artifacts, PipelineConfig};
use kglink::synthetic::{generate, SyntheticConfig};

fn main() -> kglink::Result<()> {
    let mut args = std::env::args().skip(1);
    let questions = args.next().and_then(|a| a.parse().ok()).unwrap_or(500);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let data = generate(&SyntheticConfig { questions, seed, ..SyntheticConfig::default() })?;
    let cfg = PipelineConfig::default();
    let art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;

    // Where the gold candidate sits before re-ranking, by kind.
    let mut positions: BTreeMap<String, BTreeMap<u32, usize>> = BTreeMap::new();
    for r in training_records(&art, &cfg, &data.questions, 10, true)?.iter().filter(|r| r.gold) {
        *positions.entry(r.kind.to_string()).or_default().entry(r.features.initial_rank).or_default() += 1;
    }
    for (kind, hist) in &positions {
        println!("gold initial rank ({kind}): {hist:?}");
    }

    println!("{:>4} {:>9} {:>8} {:>8} {:>8}", "k", "injected", "R_i", "C,H", "R_i,C,H");
    for row in ablation(&art, &cfg, &data.questions, &[10, 30], cfg.cv_folds)? {
        println!(
            "{:>4} {:>9} {:>8.3} {:>8.3} {:>8.3}",
            row.k, row.gold_injection, row.rank_only, row.density_only, row.all
        );
    }
    Ok(())
}

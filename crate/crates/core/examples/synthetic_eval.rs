//! Generates a seeded synthetic benchmark and scores all three strategies
//! on it with gold keyword spans.
//!
//! cargo run --release --example synthetic_eval -- [questions] [seed]

use std::sync::Arc;

use kglink::pipeline::{evaluate, training_rows, Artifacts, Pipeline, PipelineConfig, Strategy};
use kglink::rerank::{FeatureSet, RerankModel};
use kglink::synthetic::{generate, SyntheticConfig};

fn main() -> kglink::Result<()> {
    let mut args = std::env::args().skip(1);
    let questions = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let data = generate(&SyntheticConfig { questions, seed, ..SyntheticConfig::default() })?;
    let cfg = PipelineConfig { gold_spans: true, seed, ..PipelineConfig::default() };
    let mut art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;
    art.reranker = Some(RerankModel::train(&training_rows(&art, &cfg, &data.train, cfg.k, true)?, FeatureSet::ALL)?);
    let art = Arc::new(art);
    println!("{} triples, {} questions", art.kg.triple_count(), data.questions.len());

    println!("{:>8} {:>7} {:>9} {:>8} {:>6}", "strategy", "entity", "relation", "overall", "mrr");
    for strategy in Strategy::ALL {
        let m = evaluate(&Pipeline::new(PipelineConfig { strategy, ..cfg.clone() }, art.clone())?, &data.questions)?.metrics;
        let mrr = m.mrr.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>8} {:>7.3} {:>9.3} {:>8.3} {:>6}",
            strategy.name(), m.entity.accuracy, m.relation.accuracy, m.overall.accuracy, mrr
        );
    }
    Ok(())
}

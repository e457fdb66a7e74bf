//! End to end: spot, retrieve, disambiguate. Prints the top link of every
//! keyword under each strategy, then the full density result as JSON.
//!
//! cargo run --example link_question -- ["question text"]

use std::sync::Arc;

use kglink::pipeline::{training_rows, Artifacts, Pipeline, PipelineConfig, Strategy};
use kglink::rerank::{FeatureSet, RerankModel};
use kglink::spotter::Question;
use kglink::synthetic::{mini_kg, FOUNDER_QUESTION};

fn main() -> kglink::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| FOUNDER_QUESTION.into());
    let data = mini_kg()?;
    let cfg = PipelineConfig::default();
    let mut art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;
    art.reranker = Some(RerankModel::train(&training_rows(&art, &cfg, &data.train, cfg.k, true)?, FeatureSet::ALL)?);
    let art = Arc::new(art);
    let q = Question::new("q-0001", text);

    let mut last = None;
    for strategy in Strategy::ALL {
        let r = Pipeline::new(PipelineConfig { strategy, ..cfg.clone() }, art.clone())?.link(&q)?;
        let tops: Vec<String> =
            r.keywords.iter().map(|k| format!("{} -> {}", k.keyword, k.top().unwrap_or("-"))).collect();
        println!("{:>7}: {}", strategy.name(), tops.join(", "));
        last = Some(r);
    }
    println!("{}", serde_json::to_string_pretty(&last).expect("results serialise"));
    Ok(())
}

//! Trains the re-ranker on the mini training questions and re-orders the
//! candidate lists of the founder question by predicted probability.

use kglink::density::compute_features;
use kglink::pipeline::{training_rows, Artifacts, Pipeline, PipelineConfig, Strategy};
use kglink::rerank::{FeatureSet, RerankModel};
use kglink::spotter::Question;
use kglink::synthetic::{mini_kg, FOUNDER_QUESTION};

fn main() -> kglink::Result<()> {
    let data = mini_kg()?;
    let cfg = PipelineConfig { strategy: Strategy::Exact, k: 5, ..PipelineConfig::default() };
    let art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;
    let model = RerankModel::train(&training_rows(&art, &cfg, &data.train, cfg.k, true)?, FeatureSet::ALL)?;
    for (name, w) in model.feature_names.iter().zip(&model.weights) {
        println!("weight {name}: {w:+.3}");
    }

    let pipeline = Pipeline::new(cfg, art.into())?;
    let lists = pipeline.candidate_lists(&Question::new("founder", FOUNDER_QUESTION))?;
    let feats = compute_features(&lists, &pipeline.artifacts().oracle)?.features;
    for (list, f) in lists.iter().zip(&feats) {
        println!("{}", list.keyword);
        for s in model.rerank(list, f)? {
            println!("  {:.3}  (was {})  {}", s.probability, s.candidate.initial_rank, s.candidate.uri);
        }
    }
    Ok(())
}

//! Deliberately wrong entity/relation guesses and the adaptive pass that
//! undoes them: a flip is kept only if it raises the keyword's best
//! probability by more than the threshold.

use std::sync::Arc;

use kglink::pipeline::{evaluate, training_rows, Artifacts, Pipeline, PipelineConfig};
use kglink::rerank::{FeatureSet, RerankModel};
use kglink::synthetic::{generate, SyntheticConfig};

fn main() -> kglink::Result<()> {
    let data = generate(&SyntheticConfig::default())?;
    let base = PipelineConfig { gold_spans: true, flip_rate: 0.2, ..PipelineConfig::default() };
    let mut art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &base)?;
    art.reranker = Some(RerankModel::train(&training_rows(&art, &base, &data.train, base.k, true)?, FeatureSet::ALL)?);
    let art = Arc::new(art);

    for enabled in [false, true] {
        let mut cfg = base.clone();
        cfg.adaptive.enabled = enabled;
        let m = evaluate(&Pipeline::new(cfg, art.clone())?, &data.questions)?.metrics;
        println!(
            "adaptive {:<5} accuracy {:.3}  flips tried {}, kept {}",
            enabled, m.overall.accuracy, m.flips_tried, m.flips_kept
        );
    }
    Ok(())
}

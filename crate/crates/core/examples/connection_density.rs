//! Connection count C and hop count H for every candidate of the founder
//! question, next to its retrieval rank.

use kglink::density::compute_features;
use kglink::pipeline::{Artifacts, Pipeline, PipelineConfig, Strategy};
use kglink::spotter::Question;
use kglink::synthetic::{mini_kg, FOUNDER_QUESTION};

fn main() -> kglink::Result<()> {
    let data = mini_kg()?;
    let cfg = PipelineConfig { strategy: Strategy::Exact, k: 5, ..PipelineConfig::default() };
    let art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;
    let pipeline = Pipeline::new(cfg, art.into())?;
    let lists = pipeline.candidate_lists(&Question::new("founder", FOUNDER_QUESTION))?;
    let out = compute_features(&lists, &pipeline.artifacts().oracle)?;
    for (list, feats) in lists.iter().zip(&out.features) {
        println!("{} ({})", list.keyword, list.kind_queried);
        for (c, f) in list.candidates.iter().zip(feats) {
            println!("  R={:<2} C={:.2} H={:.2}  {}", f.initial_rank, f.connection_count, f.hop_count, c.uri);
        }
    }
    println!("{} cross-list pairs evaluated", out.pair_evaluations);
    Ok(())
}

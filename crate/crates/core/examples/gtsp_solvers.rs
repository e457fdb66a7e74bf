//! Joint disambiguation as a generalised travelling salesman problem: one
//! candidate per keyword, minimising hop distance plus retrieval rank.

use kglink::gtsp::{build_instance, search_space, solve_approx, solve_exact, ApproxConfig, DEFAULT_EXACT_BUDGET};
use kglink::pipeline::{Artifacts, Pipeline, PipelineConfig, Strategy};
use kglink::spotter::Question;
use kglink::synthetic::{mini_kg, FOUNDER_QUESTION};

fn main() -> kglink::Result<()> {
    let data = mini_kg()?;
    let cfg = PipelineConfig { strategy: Strategy::Exact, ..PipelineConfig::default() };
    let art = Artifacts::from_parts(data.knowledge_graph()?, data.index()?, &cfg)?;
    let pipeline = Pipeline::new(cfg.clone(), art.into())?;
    let lists = pipeline.candidate_lists(&Question::new("founder", FOUNDER_QUESTION))?;
    let (inst, dropped) = build_instance(&lists, &pipeline.artifacts().oracle, cfg.rank_weight)?;
    println!(
        "{} clusters, {} nodes, {} unresolvable candidates dropped, search space {}",
        inst.cluster_count(),
        inst.node_count(),
        dropped.len(),
        search_space(&inst)
    );
    let exact = solve_exact(&inst, DEFAULT_EXACT_BUDGET)?;
    let approx = solve_approx(&inst, &ApproxConfig::with_seed(cfg.seed))?;
    for (name, a) in [("exact", &exact), ("approx", &approx)] {
        println!("{name:>6}: cost {:.1}, {:?}", a.total_cost, inst.chosen_uris(a));
    }
    Ok(())
}

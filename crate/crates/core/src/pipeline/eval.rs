//! Accuracy, MRR and solver-gap measurement over annotated questions, plus
//! the training rows for the re-ranker.

use serde::{Deserialize, Serialize};

use super::{Artifacts, LinkingResult, Pipeline, PipelineConfig, Strategy};
use crate::density::{compute_features, FeatureRecord};
use crate::error::{Error, Result};
use crate::gtsp::{build_instance, solve_approx, solve_exact, ApproxConfig};
use crate::index::CandidateList;
use crate::rerank::{cross_validate, mrr, FeatureSet, TrainingRow};
use crate::spotter::Question;
use crate::Kind;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// 0 when `total` is 0.
    pub accuracy: f64,
}

impl Accuracy {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += usize::from(ok);
    }

    fn finish(mut self) -> Self {
        self.accuracy = if self.total == 0 { 0.0 } else { self.correct as f64 / self.total as f64 };
        self
    }
}

/// Approximate against exact route cost over the questions whose instance
/// fits the exact budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostGap {
    pub instances: usize,
    pub skipped_too_large: usize,
    pub optimal: usize,
    pub optimal_fraction: f64,
    pub within_10pct_fraction: f64,
    pub mean_relative_gap: f64,
    pub max_relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strategy: Strategy,
    pub questions: usize,
    pub entity: Accuracy,
    pub relation: Accuracy,
    pub overall: Accuracy,
    /// Mean reciprocal rank of the gold URI per annotated span; density only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrr: Option<f64>,
    pub flips_tried: usize,
    pub flips_kept: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_gap: Option<CostGap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub results: Vec<LinkingResult>,
}

fn require_spans(questions: &[Question]) -> Result<()> {
    match questions.iter().find(|q| q.spans.is_none()) {
        Some(q) => Err(Error::InvalidInput(format!("question `{}` has no gold annotation", q.id))),
        None => Ok(()),
    }
}

/// Links every question and scores the top candidate of each gold span. A
/// span with no matching keyword counts as wrong.
pub fn evaluate(pipeline: &Pipeline, questions: &[Question]) -> Result<Evaluation> {
    require_spans(questions)?;
    let results = pipeline.link_all(questions).into_iter().collect::<Result<Vec<_>>>()?;
    let cfg = pipeline.config();

    let (mut entity, mut relation, mut overall) = (Accuracy::default(), Accuracy::default(), Accuracy::default());
    let mut ranked: Vec<Vec<&str>> = Vec::new();
    let mut gold: Vec<Option<&str>> = Vec::new();
    for (q, r) in questions.iter().zip(&results) {
        for span in q.spans.iter().flatten() {
            let kw = r.keyword(&span.phrase);
            let ok = kw.and_then(|k| k.top()) == Some(span.uri.as_str());
            overall.add(ok);
            match span.kind {
                Kind::Entity => entity.add(ok),
                Kind::Relation => relation.add(ok),
            }
            ranked.push(kw.map(|k| k.candidates.iter().map(|c| c.uri.as_str()).collect()).unwrap_or_default());
            gold.push(Some(span.uri.as_str()));
        }
    }
    let flips = results.iter().flat_map(|r| &r.diagnostics.flips);
    let metrics = Metrics {
        strategy: cfg.strategy,
        questions: questions.len(),
        entity: entity.finish(),
        relation: relation.finish(),
        overall: overall.finish(),
        mrr: if cfg.strategy == Strategy::Density && !ranked.is_empty() { Some(mrr(&ranked, &gold)?) } else { None },
        flips_tried: flips.clone().count(),
        flips_kept: flips.filter(|f| f.kept).count(),
        cost_gap: match cfg.strategy {
            Strategy::Density => None,
            _ => Some(cost_gap(pipeline, questions)?),
        },
        mean_latency_ms: cfg.timings.then(|| {
            let total: f64 = results.iter().filter_map(|r| r.timings).map(|t| t.total_ms).sum();
            if results.is_empty() { 0.0 } else { total / results.len() as f64 }
        }),
    };
    Ok(Evaluation { metrics, results })
}

/// Solves each question's instance both ways and compares route costs.
pub fn cost_gap(pipeline: &Pipeline, questions: &[Question]) -> Result<CostGap> {
    let cfg = pipeline.config();
    let art = pipeline.artifacts();
    let graph = art.oracle.graph();
    let mut gap = CostGap::default();
    let mut gaps = Vec::new();
    for q in questions {
        let lists: Vec<CandidateList> = pipeline
            .candidate_lists(q)?
            .into_iter()
            .filter(|l| l.candidates.iter().any(|c| graph.node(c.kind, &c.uri).is_some()))
            .collect();
        if lists.len() < 2 {
            continue;
        }
        let (inst, _) = build_instance(&lists, &art.oracle, cfg.rank_weight)?;
        let exact = match solve_exact(&inst, u128::from(cfg.exact_budget)) {
            Ok(a) => a.total_cost,
            Err(Error::TooLarge { .. }) => {
                gap.skipped_too_large += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let approx = solve_approx(&inst, &ApproxConfig::with_seed(cfg.seed))?.total_cost;
        let rel = if exact > 0.0 { (approx - exact) / exact } else if approx > 0.0 { f64::INFINITY } else { 0.0 };
        gaps.push(rel.max(0.0));
    }
    gap.instances = gaps.len();
    if !gaps.is_empty() {
        let n = gaps.len() as f64;
        gap.optimal = gaps.iter().filter(|&&g| g <= 1e-9).count();
        gap.optimal_fraction = gap.optimal as f64 / n;
        gap.within_10pct_fraction = gaps.iter().filter(|&&g| g <= 0.10 + 1e-12).count() as f64 / n;
        gap.mean_relative_gap = gaps.iter().sum::<f64>() / n;
        gap.max_relative_gap = gaps.iter().copied().fold(0.0, f64::max);
    }
    Ok(gap)
}

/// Features of every retrieved candidate for every gold span, searched with
/// the gold kind. With `inject`, a gold URI missing from the top `k` is
/// appended at the lowest rank. Questions with fewer than two spans are
/// skipped.
pub fn training_records(
    art: &Artifacts,
    cfg: &PipelineConfig,
    questions: &[Question],
    k: usize,
    inject: bool,
) -> Result<Vec<FeatureRecord>> {
    require_spans(questions)?;
    let mut records = Vec::new();
    for q in questions {
        let spans = q.spans.as_deref().unwrap_or_default();
        if spans.len() < 2 {
            continue;
        }
        let lists: Vec<CandidateList> = spans
            .iter()
            .map(|s| {
                let mut list = art.index.search_with_floor(&s.phrase, s.kind, k, cfg.min_score)?;
                if inject {
                    let label = art.index.display_label(&s.uri, s.kind).unwrap_or(&s.uri).to_string();
                    list.inject(&s.uri, &label);
                }
                Ok(list)
            })
            .collect::<Result<_>>()?;
        let out = compute_features(&lists, &art.oracle)?;
        for ((span, list), feats) in spans.iter().zip(&lists).zip(&out.features) {
            for (c, f) in list.candidates.iter().zip(feats) {
                records.push(FeatureRecord {
                    question_id: q.id.clone(),
                    keyword: span.phrase.clone(),
                    uri: c.uri.clone(),
                    kind: c.kind,
                    features: *f,
                    gold: c.uri == span.uri,
                });
            }
        }
    }
    Ok(records)
}

/// [`training_records`] as labelled rows grouped by question and keyword.
pub fn training_rows(
    art: &Artifacts,
    cfg: &PipelineConfig,
    questions: &[Question],
    k: usize,
    inject: bool,
) -> Result<Vec<TrainingRow>> {
    Ok(training_records(art, cfg, questions, k, inject)?
        .into_iter()
        .map(|r| TrainingRow { group: format!("{}#{}", r.question_id, r.keyword), features: r.features, label: r.gold })
        .collect())
}

/// Cross-validated MRR of each feature set at one list size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub k: usize,
    pub gold_injection: bool,
    pub rank_only: f64,
    pub density_only: f64,
    pub all: f64,
}

/// One row per `k`, first without and then with gold injection.
pub fn ablation(
    art: &Artifacts,
    cfg: &PipelineConfig,
    questions: &[Question],
    ks: &[usize],
    folds: usize,
) -> Result<Vec<AblationRow>> {
    let mut out = Vec::new();
    for &k in ks {
        for inject in [false, true] {
            let rows = training_rows(art, cfg, questions, k, inject)?;
            out.push(AblationRow {
                k,
                gold_injection: inject,
                rank_only: cross_validate(&rows, FeatureSet::RANK_ONLY, folds)?,
                density_only: cross_validate(&rows, FeatureSet::DENSITY_ONLY, folds)?,
                all: cross_validate(&rows, FeatureSet::ALL, folds)?,
            });
        }
    }
    Ok(out)
}

//! End-to-end linking: spot keywords, predict their kind, retrieve
//! candidates, disambiguate jointly, and for the density strategy retry
//! poorly scoring keywords with the other kind.

mod artifacts;
mod eval;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adapt, AdaptiveConfig, FlipEvent, KeywordState, Relinker};
use crate::density::compute_features;
use crate::error::{Error, Result};
use crate::gtsp::{build_instance, solve_approx, solve_exact, ApproxConfig, DroppedCandidate};
use crate::index::{text, CandidateList};
use crate::kg::DEFAULT_HOP_CAP;
use crate::rerank::ScoredCandidate;
use crate::spotter::{extract_keywords, fnv1a, Chunker, ErModel, Question, SpotMode};
use crate::Kind;

pub use artifacts::{
    sha256_hex, Artifacts, InputRecord, Manifest, ER_MODEL_FILE, GRAPH_FILE, INDEX_FILE, MANIFEST_FILE,
    RERANK_MODEL_FILE, STOPWORDS_FILE,
};
pub use eval::{
    ablation, cost_gap, evaluate, training_records, training_rows, Accuracy, AblationRow, CostGap, Evaluation,
    Metrics,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exact,
    Approx,
    Density,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Exact, Strategy::Approx, Strategy::Density];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exact => "exact",
            Strategy::Approx => "approx",
            Strategy::Density => "density",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}` (expected exact, approx or density)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    /// Candidates retrieved per keyword.
    pub k: usize,
    /// Weight of the initial ranks in GTSP edge costs.
    pub rank_weight: f64,
    pub hop_cap: u32,
    /// Retrieval hits scoring below this are dropped.
    pub min_score: f64,
    pub adaptive: AdaptiveConfig,
    /// Use annotated spans as keywords instead of the chunker.
    pub gold_spans: bool,
    /// Append missing gold URIs at the lowest rank after retrieval.
    pub gold_injection: bool,
    pub seed: u64,
    /// Largest exact search space before falling back to the approximate
    /// solver.
    pub exact_budget: u64,
    /// Fraction of kind predictions deliberately inverted, for robustness
    /// experiments.
    pub flip_rate: f64,
    pub cv_folds: usize,
    /// Include wall-clock timings in results and metrics. Off by default so
    /// that output is reproducible byte for byte.
    pub timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: Strategy::Density,
            k: 30,
            rank_weight: 1.0,
            hop_cap: DEFAULT_HOP_CAP,
            min_score: 0.2,
            adaptive: AdaptiveConfig::default(),
            gold_spans: false,
            gold_injection: false,
            seed: 0,
            exact_budget: 10_000_000,
            flip_rate: 0.0,
            cv_folds: 5,
            timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(&crate::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.hop_cap == 0 {
            return fail("hop_cap must be at least 1".into());
        }
        if !(self.rank_weight >= 0.0 && self.rank_weight.is_finite()) {
            return fail(format!("rank_weight must be non-negative, got {}", self.rank_weight));
        }
        if !(0.0..1.0).contains(&self.min_score) {
            return fail(format!("min_score must lie in [0, 1), got {}", self.min_score));
        }
        if !(0.0..=1.0).contains(&self.flip_rate) {
            return fail(format!("flip_rate must lie in [0, 1], got {}", self.flip_rate));
        }
        if self.cv_folds < 2 {
            return fail(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        self.adaptive.validate()
    }

    /// Hash of the keys that shape stored artifacts: the hop cap, `k` and
    /// the retrieval floor.
    pub fn artifact_hash(&self) -> Result<String> {
        let key = serde_json::json!({ "hop_cap": self.hop_cap, "k": self.k, "min_score": self.min_score });
        Ok(sha256_hex(serde_json::to_string(&key)?.as_bytes()))
    }

    fn spot_mode(&self) -> SpotMode {
        if self.gold_spans {
            SpotMode::Gold
        } else {
            SpotMode::Chunker
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedCandidate {
    pub uri: String,
    pub label: String,
    pub initial_rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_count: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordResult {
    pub keyword: String,
    /// Kind as predicted, before any adaptive flip.
    pub predicted_kind: Kind,
    pub er_confidence: f64,
    /// Kind of the list finally reported.
    pub kind: Kind,
    /// Ranked output. GTSP strategies report only the chosen candidate.
    pub candidates: Vec<LinkedCandidate>,
}

impl KeywordResult {
    pub fn top(&self) -> Option<&str> {
        self.candidates.first().map(|c| c.uri.as_str())
    }

    /// 1-based position of `uri`.
    pub fn rank_of(&self, uri: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.uri == uri).map(|p| p + 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flips: Vec<FlipEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<DroppedCandidate>,
    /// Keywords whose gold URI was injected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub injected: Vec<String>,
    /// Keywords whose kind prediction was inverted by `flip_rate`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_flips: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route_cost: Option<f64>,
}

/// Milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub spot_ms: f64,
    pub retrieve_ms: f64,
    pub disambiguate_ms: f64,
    pub adapt_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingResult {
    pub question_id: String,
    pub strategy: Strategy,
    pub keywords: Vec<KeywordResult>,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl LinkingResult {
    /// Result block for the keyword matching `phrase` after normalisation.
    pub fn keyword(&self, phrase: &str) -> Option<&KeywordResult> {
        let want = text::normalize(phrase);
        self.keywords.iter().find(|k| text::normalize(&k.keyword) == want)
    }
}

/// A spotted keyword with its kind prediction.
#[derive(Debug, Clone, PartialEq)]
struct Spotted {
    keyword: String,
    predicted: Kind,
    confidence: f64,
    kind: Kind,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    art: Arc<Artifacts>,
    er: ErModel,
    chunker: Chunker,
}

impl Pipeline {
    /// Without a stored kind classifier one is trained from the index.
    pub fn new(cfg: PipelineConfig, art: Arc<Artifacts>) -> Result<Self> {
        cfg.validate()?;
        if art.oracle.cap() != cfg.hop_cap {
            return Err(Error::Config(format!(
                "artifacts use hop cap {} but the configuration asks for {}",
                art.oracle.cap(),
                cfg.hop_cap
            )));
        }
        if cfg.strategy == Strategy::Density && art.reranker.is_none() {
            return Err(Error::Config("the density strategy needs a trained re-rank model".into()));
        }
        let er = match &art.er {
            Some(m) => m.clone(),
            None => {
                log::info!("no stored kind classifier; training one from the index");
                ErModel::train_from_index(&art.index)?
            }
        };
        let chunker = Chunker::from_index(art.stopwords.clone(), &art.index);
        Ok(Pipeline { cfg, art, er, chunker })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn artifacts(&self) -> &Artifacts {
        &self.art
    }

    fn spot(&self, q: &Question) -> Result<Vec<Spotted>> {
        let keywords = extract_keywords(q, self.cfg.spot_mode(), &self.chunker)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ fnv1a(q.id.as_bytes()));
        keywords
            .into_iter()
            .map(|keyword| {
                let p = self.er.predict(&keyword)?;
                let forced = rng.gen::<f64>() < self.cfg.flip_rate;
                Ok(Spotted {
                    kind: if forced { p.kind.flip() } else { p.kind },
                    predicted: p.kind,
                    confidence: p.confidence,
                    keyword,
                })
            })
            .collect()
    }

    /// Top-`k` list for a keyword; in gold-injection mode the gold URI is
    /// appended when missing and of the searched kind.
    fn retrieve(&self, q: &Question, keyword: &str, kind: Kind) -> (CandidateList, bool) {
        let mut list = self
            .art
            .index
            .search_with_floor(keyword, kind, self.cfg.k, self.cfg.min_score)
            .unwrap_or_else(|e| {
                log::debug!("no candidates for `{keyword}`: {e}");
                CandidateList { keyword: keyword.to_string(), kind_queried: kind, candidates: Vec::new() }
            });
        let mut injected = false;
        if self.cfg.gold_injection {
            if let Some(span) = gold_span(q, keyword).filter(|s| s.kind == kind) {
                let label = self.art.index.display_label(&span.uri, kind).unwrap_or(&span.uri).to_string();
                injected = list.inject(&span.uri, &label);
            }
        }
        (list, injected)
    }

    /// Retrieved lists for the spotted keywords, as the linker sees them
    /// before disambiguation.
    pub fn candidate_lists(&self, q: &Question) -> Result<Vec<CandidateList>> {
        Ok(self.spot(q)?.iter().map(|s| self.retrieve(q, &s.keyword, s.kind).0).collect())
    }

    fn score(&self, lists: &[CandidateList]) -> Result<Vec<Vec<ScoredCandidate>>> {
        let model = self
            .art
            .reranker
            .as_ref()
            .ok_or_else(|| Error::Config("no re-rank model loaded".into()))?;
        let out = compute_features(lists, &self.art.oracle)?;
        lists.iter().zip(&out.features).map(|(l, f)| model.rerank(l, f)).collect()
    }

    pub fn link(&self, q: &Question) -> Result<LinkingResult> {
        let start = Instant::now();
        let mut diag = Diagnostics::default();
        let mut timings = Timings::default();

        let t = Instant::now();
        let spotted = self.spot(q)?;
        timings.spot_ms = ms(t);
        for s in &spotted {
            if s.kind != s.predicted {
                diag.forced_flips.push(s.keyword.clone());
            }
        }
        if spotted.is_empty() {
            diag.messages.push("no keywords spotted".into());
        }

        let t = Instant::now();
        let mut lists = Vec::with_capacity(spotted.len());
        for s in &spotted {
            let (list, injected) = self.retrieve(q, &s.keyword, s.kind);
            if injected {
                diag.injected.push(s.keyword.clone());
            }
            lists.push(list);
        }
        timings.retrieve_ms = ms(t);

        let t = Instant::now();
        let keywords = match self.cfg.strategy {
            _ if spotted.len() < 2 => {
                if spotted.len() == 1 {
                    diag.messages.push("single keyword: joint disambiguation skipped, initial ranks kept".into());
                }
                by_initial_rank(&spotted, &lists)
            }
            Strategy::Density => {
                let ranked = self.score(&lists)?;
                timings.disambiguate_ms = ms(t);
                let mut states: Vec<KeywordState> = spotted
                    .iter()
                    .zip(lists)
                    .zip(ranked)
                    .map(|((s, list), ranked)| KeywordState {
                        keyword: s.keyword.clone(),
                        kind: s.kind,
                        list,
                        ranked,
                        attempts: 0,
                    })
                    .collect();
                let ta = Instant::now();
                let relinker = PipelineRelinker { pipeline: self, question: q };
                diag.flips = adapt(&mut states, &self.cfg.adaptive, &relinker)?;
                timings.adapt_ms = ms(ta);
                spotted
                    .iter()
                    .zip(&states)
                    .map(|(s, st)| KeywordResult {
                        keyword: s.keyword.clone(),
                        predicted_kind: s.predicted,
                        er_confidence: s.confidence,
                        kind: st.kind,
                        candidates: st
                            .ranked
                            .iter()
                            .map(|c| LinkedCandidate {
                                uri: c.candidate.uri.clone(),
                                label: c.candidate.matched_label.clone(),
                                initial_rank: c.candidate.initial_rank,
                                probability: Some(c.probability),
                                connection_count: Some(c.features.connection_count),
                                hop_count: Some(c.features.hop_count),
                            })
                            .collect(),
                    })
                    .collect()
            }
            Strategy::Exact | Strategy::Approx => self.link_gtsp(&spotted, &lists, &mut diag)?,
        };
        if self.cfg.strategy != Strategy::Density || spotted.len() < 2 {
            timings.disambiguate_ms = ms(t);
        }
        timings.total_ms = ms(start);

        Ok(LinkingResult {
            question_id: q.id.clone(),
            strategy: self.cfg.strategy,
            keywords,
            diagnostics: diag,
            timings: self.cfg.timings.then_some(timings),
        })
    }

    fn link_gtsp(&self, spotted: &[Spotted], lists: &[CandidateList], diag: &mut Diagnostics) -> Result<Vec<KeywordResult>> {
        let mut out = by_initial_rank(spotted, lists);
        let graph = self.art.oracle.graph();
        let usable: Vec<usize> = (0..lists.len())
            .filter(|&i| lists[i].candidates.iter().any(|c| graph.node(c.kind, &c.uri).is_some()))
            .collect();
        if usable.len() < 2 {
            diag.messages
                .push("fewer than two keywords have candidates in the graph: initial ranks kept".into());
            return Ok(out);
        }
        let sub: Vec<CandidateList> = usable.iter().map(|&i| lists[i].clone()).collect();
        let (inst, dropped) = build_instance(&sub, &self.art.oracle, self.cfg.rank_weight)?;
        diag.dropped = dropped;

        let approx_cfg = ApproxConfig::with_seed(self.cfg.seed);
        let assignment = match self.cfg.strategy {
            Strategy::Exact => match solve_exact(&inst, u128::from(self.cfg.exact_budget)) {
                Ok(a) => {
                    diag.solver = Some("exact".into());
                    a
                }
                Err(Error::TooLarge { paths, budget }) => {
                    diag.messages
                        .push(format!("exact search space {paths} exceeds budget {budget}: approximate solver used"));
                    diag.solver = Some("approx".into());
                    solve_approx(&inst, &approx_cfg)?
                }
                Err(e) => return Err(e),
            },
            _ => {
                diag.solver = Some("approx".into());
                solve_approx(&inst, &approx_cfg)?
            }
        };
        diag.route_cost = Some(assignment.total_cost);

        for (cluster, &i) in usable.iter().enumerate() {
            let uri = &inst.nodes[assignment.chosen[cluster]].uri;
            let chosen = lists[i]
                .candidates
                .iter()
                .find(|c| &c.uri == uri)
                .expect("instance nodes come from the lists");
            out[i].candidates = vec![LinkedCandidate {
                uri: chosen.uri.clone(),
                label: chosen.matched_label.clone(),
                initial_rank: chosen.initial_rank,
                probability: None,
                connection_count: None,
                hop_count: None,
            }];
        }
        Ok(out)
    }

    /// Links every question in parallel; results keep input order.
    pub fn link_all(&self, questions: &[Question]) -> Vec<Result<LinkingResult>> {
        questions.par_iter().map(|q| self.link(q)).collect()
    }
}

struct PipelineRelinker<'a> {
    pipeline: &'a Pipeline,
    question: &'a Question,
}

impl Relinker for PipelineRelinker<'_> {
    fn retrieve(&self, keyword: &str, kind: Kind) -> Result<CandidateList> {
        Ok(self.pipeline.retrieve(self.question, keyword, kind).0)
    }

    fn score(&self, lists: &[CandidateList]) -> Result<Vec<Vec<ScoredCandidate>>> {
        self.pipeline.score(lists)
    }
}

fn by_initial_rank(spotted: &[Spotted], lists: &[CandidateList]) -> Vec<KeywordResult> {
    spotted
        .iter()
        .zip(lists)
        .map(|(s, l)| KeywordResult {
            keyword: s.keyword.clone(),
            predicted_kind: s.predicted,
            er_confidence: s.confidence,
            kind: s.kind,
            candidates: l
                .candidates
                .iter()
                .map(|c| LinkedCandidate {
                    uri: c.uri.clone(),
                    label: c.matched_label.clone(),
                    initial_rank: c.initial_rank,
                    probability: None,
                    connection_count: None,
                    hop_count: None,
                })
                .collect(),
        })
        .collect()
}

/// The annotated span whose phrase matches `keyword` after normalisation.
pub(crate) fn gold_span<'q>(q: &'q Question, keyword: &str) -> Option<&'q crate::spotter::GoldSpan> {
    let want = text::normalize(keyword);
    q.spans.iter().flatten().find(|s| text::normalize(&s.phrase) == want)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rerank::{FeatureSet, RerankModel};
    use crate::synthetic::{mini_kg, FOUNDER_QUESTION};

    fn artifacts(cfg: &PipelineConfig) -> Arc<Artifacts> {
        let data = mini_kg().unwrap();
        let mut art = Artifacts::from_parts(data.knowledge_graph().unwrap(), data.index().unwrap(), cfg).unwrap();
        let rows = training_rows(&art, cfg, &data.train, cfg.k, true).unwrap();
        art.reranker = Some(RerankModel::train(&rows, FeatureSet::ALL).unwrap());
        Arc::new(art)
    }

    fn founder() -> Question {
        mini_kg().unwrap().questions.into_iter().find(|q| q.text == FOUNDER_QUESTION).unwrap()
    }

    #[test]
    fn founder_question_all_strategies() {
        for strategy in Strategy::ALL {
            let cfg = PipelineConfig { strategy, gold_spans: true, ..PipelineConfig::default() };
            let p = Pipeline::new(cfg.clone(), artifacts(&cfg)).unwrap();
            let r = p.link(&founder()).unwrap();
            for (phrase, uri) in [
                ("founder", "dbo:foundedBy"),
                ("Tesla", "dbr:Tesla_Motors"),
                ("SpaceX", "dbr:SpaceX"),
                ("born", "dbo:birthPlace"),
            ] {
                assert_eq!(r.keyword(phrase).unwrap().top(), Some(uri), "{strategy}: {phrase}");
            }
        }
    }

    #[test]
    fn chunker_spots_founder_question() {
        let cfg = PipelineConfig::default();
        let p = Pipeline::new(cfg.clone(), artifacts(&cfg)).unwrap();
        let r = p.link(&founder()).unwrap();
        let kws: Vec<&str> = r.keywords.iter().map(|k| k.keyword.as_str()).collect();
        assert!(kws.contains(&"Tesla") && kws.contains(&"SpaceX"), "{kws:?}");
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(PipelineConfig { k: 0, ..cfg.clone() }.validate().is_err());
        assert!(PipelineConfig { flip_rate: 1.5, ..cfg.clone() }.validate().is_err());
        assert_eq!("approx".parse::<Strategy>().unwrap(), Strategy::Approx);
        assert!("fast".parse::<Strategy>().is_err());
        let other = PipelineConfig { k: 10, ..cfg.clone() };
        assert_ne!(cfg.artifact_hash().unwrap(), other.artifact_hash().unwrap());
        let same = PipelineConfig { seed: 9, strategy: Strategy::Exact, ..cfg.clone() };
        assert_eq!(cfg.artifact_hash().unwrap(), same.artifact_hash().unwrap());
    }

    #[test]
    fn density_needs_reranker() {
        let cfg = PipelineConfig::default();
        let data = mini_kg().unwrap();
        let art = Artifacts::from_parts(data.knowledge_graph().unwrap(), data.index().unwrap(), &cfg).unwrap();
        assert!(matches!(Pipeline::new(cfg, Arc::new(art)), Err(Error::Config(_))));
    }

    #[test]
    fn mini_eval_is_deterministic() {
        let cfg = PipelineConfig { gold_spans: true, ..PipelineConfig::default() };
        let p = Pipeline::new(cfg.clone(), artifacts(&cfg)).unwrap();
        let qs = mini_kg().unwrap().questions;
        let a = evaluate(&p, &qs).unwrap();
        let b = evaluate(&p, &qs).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

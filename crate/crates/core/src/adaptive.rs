//! Retry of keywords whose best candidate scores below a threshold, with
//! the entity/relation prediction flipped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::CandidateList;
use crate::rerank::ScoredCandidate;
use crate::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub enabled: bool,
    pub threshold: f64,
    pub max_retries_per_keyword: u32,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            enabled: true,
            threshold: 0.01,
            max_retries_per_keyword: 1,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("adaptive threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// One keyword's current list and its re-ranked form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordState {
    pub keyword: String,
    pub kind: Kind,
    pub list: CandidateList,
    pub ranked: Vec<ScoredCandidate>,
    /// Flips already tried for this keyword, kept or not.
    pub attempts: u32,
}

impl KeywordState {
    /// Highest candidate probability; 0 for an empty list.
    pub fn max_probability(&self) -> f64 {
        max_probability(&self.ranked)
    }
}

fn max_probability(ranked: &[ScoredCandidate]) -> f64 {
    ranked.iter().map(|c| c.probability).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipEvent {
    pub keyword: String,
    pub old_kind: Kind,
    pub new_kind: Kind,
    pub old_max_probability: f64,
    pub new_max_probability: f64,
    pub kept: bool,
}

/// Access to retrieval and scoring for re-running one keyword.
pub trait Relinker {
    fn retrieve(&self, keyword: &str, kind: Kind) -> Result<CandidateList>;
    /// Re-ranked form of every list, in order.
    fn score(&self, lists: &[CandidateList]) -> Result<Vec<Vec<ScoredCandidate>>>;
}

/// Flips each keyword below threshold once per allowed retry. A flip is
/// kept only if it raises that keyword's maximum probability and lowers no
/// other keyword's maximum, so no maximum ever decreases. Keywords are
/// visited in order; later retries see earlier kept flips.
pub fn adapt(states: &mut [KeywordState], cfg: &AdaptiveConfig, relinker: &dyn Relinker) -> Result<Vec<FlipEvent>> {
    cfg.validate()?;
    let mut events = Vec::new();
    if !cfg.enabled {
        return Ok(events);
    }
    for i in 0..states.len() {
        while states[i].max_probability() < cfg.threshold && states[i].attempts < cfg.max_retries_per_keyword {
            states[i].attempts += 1;
            let old_kind = states[i].kind;
            let new_kind = old_kind.flip();
            let old_max = states[i].max_probability();

            let mut lists: Vec<CandidateList> = states.iter().map(|s| s.list.clone()).collect();
            lists[i] = relinker.retrieve(&states[i].keyword, new_kind)?;
            let ranked = relinker.score(&lists)?;
            let new_max = max_probability(&ranked[i]);
            let others_hold = states
                .iter()
                .zip(&ranked)
                .enumerate()
                .all(|(j, (s, r))| j == i || max_probability(r) >= s.max_probability());
            let kept = new_max > old_max && others_hold;

            events.push(FlipEvent {
                keyword: states[i].keyword.clone(),
                old_kind,
                new_kind,
                old_max_probability: old_max,
                new_max_probability: new_max,
                kept,
            });
            if kept {
                for (j, (s, r)) in states.iter_mut().zip(ranked).enumerate() {
                    s.ranked = r;
                    if j == i {
                        s.kind = new_kind;
                        s.list = lists[i].clone();
                    }
                }
            } else {
                log::debug!("flip of `{}` to {new_kind} not kept", states[i].keyword);
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityFeatures;
    use crate::index::Candidate;

    /// Entity lookups of "publisher" miss; relation lookups hit with a fixed
    /// probability. Every non-empty list scores `p` per candidate.
    struct Fake {
        relation_probability: f64,
        entity_probability: f64,
    }

    fn list(keyword: &str, kind: Kind, uris: &[&str]) -> CandidateList {
        CandidateList {
            keyword: keyword.into(),
            kind_queried: kind,
            candidates: uris
                .iter()
                .enumerate()
                .map(|(i, u)| Candidate {
                    uri: u.to_string(),
                    matched_label: u.to_string(),
                    text_score: 1.0,
                    initial_rank: i as u32 + 1,
                    kind,
                })
                .collect(),
        }
    }

    impl Relinker for Fake {
        fn retrieve(&self, keyword: &str, kind: Kind) -> Result<CandidateList> {
            Ok(match (keyword, kind) {
                ("publisher", Kind::Relation) => list(keyword, kind, &["dbo:publisher"]),
                ("publisher", Kind::Entity) => list(keyword, kind, &[]),
                ("xyzzy", _) => list(keyword, kind, &[]),
                _ => list(keyword, kind, &["dbr:Other"]),
            })
        }

        fn score(&self, lists: &[CandidateList]) -> Result<Vec<Vec<ScoredCandidate>>> {
            Ok(lists
                .iter()
                .map(|l| {
                    l.candidates
                        .iter()
                        .map(|c| ScoredCandidate {
                            candidate: c.clone(),
                            features: DensityFeatures { initial_rank: c.initial_rank, connection_count: 0.0, hop_count: 0.0 },
                            probability: match c.kind {
                                Kind::Relation => self.relation_probability,
                                Kind::Entity => self.entity_probability,
                            },
                        })
                        .collect()
                })
                .collect())
        }
    }

    fn states(fake: &Fake, items: &[(&str, Kind)]) -> Vec<KeywordState> {
        let lists: Vec<CandidateList> = items.iter().map(|(k, kind)| fake.retrieve(k, *kind).unwrap()).collect();
        let ranked = fake.score(&lists).unwrap();
        items
            .iter()
            .zip(lists)
            .zip(ranked)
            .map(|(((k, kind), list), ranked)| KeywordState {
                keyword: k.to_string(),
                kind: *kind,
                list,
                ranked,
                attempts: 0,
            })
            .collect()
    }

    #[test]
    fn confident_keywords_are_untouched() {
        let fake = Fake { relation_probability: 0.9, entity_probability: 0.8 };
        let mut s = states(&fake, &[("Tesla", Kind::Entity), ("founder", Kind::Relation)]);
        let before = s.clone();
        let events = adapt(&mut s, &AdaptiveConfig::default(), &fake).unwrap();
        assert!(events.is_empty());
        assert_eq!(s, before);
    }

    #[test]
    fn mispredicted_publisher_is_flipped() {
        let fake = Fake { relation_probability: 0.9, entity_probability: 0.8 };
        let mut s = states(&fake, &[("Dune", Kind::Entity), ("publisher", Kind::Entity)]);
        assert_eq!(s[1].max_probability(), 0.0);
        let events = adapt(&mut s, &AdaptiveConfig::default(), &fake).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].kept);
        assert_eq!(s[1].kind, Kind::Relation);
        assert_eq!(s[1].ranked[0].candidate.uri, "dbo:publisher");
    }

    #[test]
    fn unlinkable_keyword_keeps_original() {
        let fake = Fake { relation_probability: 0.9, entity_probability: 0.8 };
        let mut s = states(&fake, &[("Dune", Kind::Entity), ("xyzzy", Kind::Entity)]);
        let events = adapt(&mut s, &AdaptiveConfig::default(), &fake).unwrap();
        assert_eq!(events.len(), 1);
        assert!(!events[0].kept);
        assert_eq!(s[1].kind, Kind::Entity);
    }

    #[test]
    fn second_run_changes_nothing() {
        let fake = Fake { relation_probability: 0.005, entity_probability: 0.8 };
        let mut s = states(&fake, &[("Dune", Kind::Entity), ("publisher", Kind::Entity)]);
        adapt(&mut s, &AdaptiveConfig::default(), &fake).unwrap();
        let once = s.clone();
        assert!(adapt(&mut s, &AdaptiveConfig::default(), &fake).unwrap().is_empty());
        assert_eq!(s, once);
    }

    #[test]
    fn disabled_or_invalid_config() {
        let fake = Fake { relation_probability: 0.9, entity_probability: 0.8 };
        let mut s = states(&fake, &[("Dune", Kind::Entity), ("publisher", Kind::Entity)]);
        let off = AdaptiveConfig { enabled: false, ..AdaptiveConfig::default() };
        assert!(adapt(&mut s, &off, &fake).unwrap().is_empty());
        let bad = AdaptiveConfig { threshold: 0.0, ..AdaptiveConfig::default() };
        assert!(adapt(&mut s, &bad, &fake).is_err());
    }
}

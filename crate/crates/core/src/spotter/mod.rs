//! Keyword spotting and entity/relation prediction.

mod er;
mod stopwords;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{text, LabelIndex};
use crate::Kind;

pub use er::{ErModel, ErPrediction, Vocabulary, ER_MODEL_VERSION};
pub use stopwords::Stopwords;
pub(crate) use er::{fnv1a, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldSpan {
    pub phrase: String,
    pub kind: Kind,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<Vec<GoldSpan>>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Question {
            id: id.into(),
            text: text.into(),
            spans: None,
        }
    }

    /// Checks that the text is non-empty and every gold phrase occurs in it.
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::InvalidInput(format!("question `{}` has empty text", self.id)));
        }
        let haystack = format!(" {} ", text::normalize(&self.text));
        for span in self.spans.iter().flatten() {
            let needle = format!(" {} ", text::normalize(&span.phrase));
            if !haystack.contains(&needle) {
                return Err(Error::InvalidInput(format!(
                    "question `{}`: span `{}` does not occur in the text",
                    self.id, span.phrase
                )));
            }
        }
        Ok(())
    }
}

/// Reads a JSON array of questions and validates each one.
pub fn load_questions(path: &Path) -> Result<Vec<Question>> {
    let text = crate::read_to_string(path)?;
    let questions: Vec<Question> = serde_json::from_str(&text)?;
    for q in &questions {
        q.validate()?;
    }
    Ok(questions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpotMode {
    /// Use the annotated spans verbatim.
    Gold,
    /// Stopword-delimited chunks, merged against the label vocabulary.
    Chunker,
}

/// Longest phrase, in tokens, that the chunker tries to match against the
/// vocabulary.
const MAX_PHRASE_TOKENS: usize = 6;

/// Splits a question into keyword phrases.
#[derive(Debug, Clone, Default)]
pub struct Chunker {
    stopwords: Stopwords,
    vocabulary: HashSet<String>,
}

impl Chunker {
    pub fn new(stopwords: Stopwords, vocabulary: impl IntoIterator<Item = String>) -> Self {
        Chunker {
            stopwords,
            vocabulary: vocabulary.into_iter().collect(),
        }
    }

    /// Vocabulary made of every normalised label (both kinds) in the index.
    pub fn from_index(stopwords: Stopwords, index: &LabelIndex) -> Self {
        let vocab = index
            .vocabulary(Kind::Entity)
            .chain(index.vocabulary(Kind::Relation))
            .map(str::to_string);
        Self::new(stopwords, vocab)
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    /// Maximal runs of non-stopword tokens, except that the longest
    /// vocabulary match starting at a token always forms its own phrase.
    /// Vocabulary matches may span inner stopwords but never start or end
    /// with one.
    pub fn chunk(&self, text: &str) -> Vec<String> {
        let tokens: Vec<(&str, String)> = text
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
            .map(|t| (t, text::normalize(t)))
            .filter(|(_, n)| !n.is_empty())
            .collect();
        let is_stop = |i: usize| self.stopwords.contains(&tokens[i].1);

        let mut phrases = Vec::new();
        let mut run: Vec<&str> = Vec::new();
        let flush = |run: &mut Vec<&str>, phrases: &mut Vec<String>| {
            if !run.is_empty() {
                phrases.push(run.join(" "));
                run.clear();
            }
        };

        let mut i = 0;
        while i < tokens.len() {
            if is_stop(i) {
                flush(&mut run, &mut phrases);
                i += 1;
                continue;
            }
            let longest = (i + 1..=tokens.len().min(i + MAX_PHRASE_TOKENS))
                .rev()
                .find(|&j| {
                    !is_stop(j - 1) && {
                        let joined: Vec<&str> = tokens[i..j].iter().map(|t| t.1.as_str()).collect();
                        self.vocabulary.contains(&joined.join(" "))
                    }
                });
            match longest {
                Some(j) => {
                    flush(&mut run, &mut phrases);
                    let surface: Vec<&str> = tokens[i..j].iter().map(|t| t.0).collect();
                    phrases.push(surface.join(" "));
                    i = j;
                }
                None => {
                    run.push(tokens[i].0);
                    i += 1;
                }
            }
        }
        flush(&mut run, &mut phrases);
        phrases
    }
}

/// Keyword phrases of a question under the given mode.
pub fn extract_keywords(q: &Question, mode: SpotMode, chunker: &Chunker) -> Result<Vec<String>> {
    match mode {
        SpotMode::Gold => match &q.spans {
            Some(spans) => Ok(spans.iter().map(|s| s.phrase.clone()).collect()),
            None => Err(Error::Config(format!(
                "gold spotting requested but question `{}` has no spans",
                q.id
            ))),
        },
        SpotMode::Chunker => Ok(chunker.chunk(&q.text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunker(vocab: &[&str]) -> Chunker {
        Chunker::new(Stopwords::default(), vocab.iter().map(|s| s.to_string()))
    }

    #[test]
    fn founder_question() {
        let q = Question::new("q1", "Where was the founder of Tesla and SpaceX born?");
        let vocab = chunker(&["tesla", "spacex", "founder", "born"]);
        let phrases = extract_keywords(&q, SpotMode::Chunker, &vocab).unwrap();
        assert_eq!(phrases, vec!["founder", "Tesla", "SpaceX", "born"]);
    }

    #[test]
    fn all_stopwords() {
        let q = Question::new("q", "What is the one that was there?");
        let c = Chunker::new(Stopwords::new(["what", "is", "the", "one", "that", "was", "there"]), Vec::new());
        assert!(extract_keywords(&q, SpotMode::Chunker, &c).unwrap().is_empty());
    }

    #[test]
    fn longest_vocabulary_match_wins() {
        let q = Question::new("q", "companies of New York");
        let phrases = extract_keywords(&q, SpotMode::Chunker, &chunker(&["new york", "york"])).unwrap();
        assert_eq!(phrases, vec!["companies", "New York"]);
    }

    #[test]
    fn vocabulary_splits_adjacent_keywords() {
        let phrases = chunker(&["tesla", "founder"]).chunk("Tesla founder Musk");
        assert_eq!(phrases, vec!["Tesla", "founder", "Musk"]);
    }

    #[test]
    fn vocabulary_match_may_span_inner_stopword() {
        let phrases = chunker(&["lord of the rings"]).chunk("Who wrote The Lord of the Rings?");
        assert_eq!(phrases, vec!["wrote", "Lord of the Rings"]);
    }

    #[test]
    fn unknown_multiword_run_stays_together() {
        let phrases = chunker(&[]).chunk("Is Barack Obama the spouse of Michelle?");
        assert_eq!(phrases, vec!["Barack Obama", "spouse", "Michelle"]);
    }

    #[test]
    fn gold_mode_returns_spans_in_order() {
        let mut q = Question::new("q", "Where was the founder of Tesla born?");
        q.spans = Some(vec![
            GoldSpan { phrase: "founder".into(), kind: Kind::Relation, uri: "dbo:foundedBy".into() },
            GoldSpan { phrase: "Tesla".into(), kind: Kind::Entity, uri: "dbr:Tesla_Motors".into() },
            GoldSpan { phrase: "born".into(), kind: Kind::Relation, uri: "dbo:birthPlace".into() },
        ]);
        let phrases = extract_keywords(&q, SpotMode::Gold, &chunker(&[])).unwrap();
        assert_eq!(phrases, vec!["founder", "Tesla", "born"]);
    }

    #[test]
    fn gold_mode_without_spans_is_config_error() {
        let q = Question::new("q", "anything");
        assert!(matches!(
            extract_keywords(&q, SpotMode::Gold, &chunker(&[])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_checks_span_presence() {
        let mut q = Question::new("q", "Who founded SpaceX?");
        q.spans = Some(vec![GoldSpan { phrase: "Tesla".into(), kind: Kind::Entity, uri: "x".into() }]);
        assert!(q.validate().is_err());
        q.spans = Some(vec![GoldSpan { phrase: "spacex".into(), kind: Kind::Entity, uri: "x".into() }]);
        assert!(q.validate().is_ok());
        assert!(Question::new("q", "  ").validate().is_err());
    }

    #[test]
    fn question_json_shape() {
        let json = r#"[{"id":"1","text":"Who wrote Dune?","spans":[{"phrase":"wrote","kind":"R","uri":"dbo:author"}]},{"id":"2","text":"No spans here"}]"#;
        let qs: Vec<Question> = serde_json::from_str(json).unwrap();
        assert_eq!(qs[0].spans.as_ref().unwrap()[0].kind, Kind::Relation);
        assert!(qs[1].spans.is_none());
    }
}

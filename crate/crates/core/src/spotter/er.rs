//! Entity/relation phrase classifier: logistic regression over hashed
//! character n-grams and a handful of surface and vocabulary features.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{text, LabelIndex};
use crate::Kind;

pub const ER_MODEL_VERSION: u32 = 1;

const HASH_BUCKETS: usize = 256;
const LEARNING_RATE: f64 = 0.1;
const MAX_EPOCHS: usize = 200;
const LOSS_TOLERANCE: f64 = 1e-6;

const SUFFIXES: [&str; 3] = ["er", "ion", "ed"];
// length (tokens), length (chars), capitalisation, 3 suffixes, 2 vocabularies
const EXTRA_FEATURES: usize = 8;

/// Normalised labels known to be entities or relations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entity: BTreeSet<String>,
    pub relation: BTreeSet<String>,
}

impl Vocabulary {
    pub fn from_index(index: &LabelIndex) -> Self {
        Vocabulary {
            entity: index.vocabulary(Kind::Entity).map(str::to_string).collect(),
            relation: index.vocabulary(Kind::Relation).map(str::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErPrediction {
    pub phrase: String,
    pub kind: Kind,
    /// Probability of `kind`; always at least 0.5.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErModel {
    pub version: u32,
    /// Weights for P(relation); hashed n-gram buckets first.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
    pub vocabulary: Vocabulary,
}

impl ErModel {
    /// Batch gradient descent from zero weights. Each class carries half of
    /// the loss so that a large entity vocabulary does not drown relations.
    pub fn train(examples: &[(String, Kind)], vocabulary: Vocabulary) -> Result<Self> {
        let n_rel = examples.iter().filter(|(_, k)| *k == Kind::Relation).count();
        let n_ent = examples.len() - n_rel;
        if n_rel < 2 || n_ent < 2 {
            return Err(Error::Training(format!(
                "need at least 2 examples of each kind, got {n_ent} entities and {n_rel} relations"
            )));
        }
        let rows: Vec<(Vec<f64>, f64, f64)> = examples
            .iter()
            .filter(|(p, _)| !text::normalize(p).is_empty())
            .map(|(p, k)| {
                let (y, w) = match k {
                    Kind::Relation => (1.0, 0.5 / n_rel as f64),
                    Kind::Entity => (0.0, 0.5 / n_ent as f64),
                };
                (features(p, &vocabulary), y, w)
            })
            .collect();

        let dim = HASH_BUCKETS + EXTRA_FEATURES;
        let mut weights = vec![0.0; dim];
        let mut bias = 0.0;
        let mut prev_loss = f64::INFINITY;
        let mut epochs_run = 0;
        for _ in 0..MAX_EPOCHS {
            epochs_run += 1;
            let mut grad = vec![0.0; dim];
            let mut grad_b = 0.0;
            let mut loss = 0.0;
            for (x, y, w) in &rows {
                let p = sigmoid(dot(&weights, x) + bias);
                let err = (p - y) * w;
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g += err * xi;
                }
                grad_b += err;
                let p = p.clamp(1e-12, 1.0 - 1e-12);
                loss -= w * (y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            }
            for (wi, g) in weights.iter_mut().zip(&grad) {
                *wi -= LEARNING_RATE * g;
            }
            bias -= LEARNING_RATE * grad_b;
            if (prev_loss - loss).abs() < LOSS_TOLERANCE {
                break;
            }
            prev_loss = loss;
        }

        Ok(ErModel {
            version: ER_MODEL_VERSION,
            weights,
            bias,
            epochs_run,
            vocabulary,
        })
    }

    /// Trains on every label of the index, using the index's own kinds.
    pub fn train_from_index(index: &LabelIndex) -> Result<Self> {
        let examples: Vec<(String, Kind)> = index
            .labels()
            .map(|(_, label, kind)| (label.to_string(), kind))
            .collect();
        Self::train(&examples, Vocabulary::from_index(index))
    }

    pub fn probability_relation(&self, phrase: &str) -> Result<f64> {
        if text::normalize(phrase).is_empty() {
            return Err(Error::InvalidInput(format!("cannot classify empty phrase `{phrase}`")));
        }
        Ok(sigmoid(dot(&self.weights, &features(phrase, &self.vocabulary)) + self.bias))
    }

    pub fn predict(&self, phrase: &str) -> Result<ErPrediction> {
        let p = self.probability_relation(phrase)?;
        let (kind, confidence) = if p >= 0.5 {
            (Kind::Relation, p)
        } else {
            (Kind::Entity, 1.0 - p)
        };
        Ok(ErPrediction {
            phrase: phrase.to_string(),
            kind,
            confidence,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: ErModel = serde_json::from_str(&crate::read_to_string(path)?)?;
        if model.version != ER_MODEL_VERSION {
            return Err(Error::Artifact(format!(
                "E/R model version {} does not match {ER_MODEL_VERSION}",
                model.version
            )));
        }
        if model.weights.len() != HASH_BUCKETS + EXTRA_FEATURES {
            return Err(Error::Artifact("E/R model has the wrong number of weights".into()));
        }
        Ok(model)
    }
}

fn features(phrase: &str, vocab: &Vocabulary) -> Vec<f64> {
    let normalized = text::normalize(phrase);
    let mut x = vec![0.0; HASH_BUCKETS + EXTRA_FEATURES];

    let marked: Vec<char> = std::iter::once('^')
        .chain(normalized.chars())
        .chain(std::iter::once('$'))
        .collect();
    let mut grams = 0usize;
    for n in 2..=3 {
        for w in marked.windows(n) {
            let gram: String = w.iter().collect();
            x[(fnv1a(gram.as_bytes()) % HASH_BUCKETS as u64) as usize] += 1.0;
            grams += 1;
        }
    }
    if grams > 0 {
        for v in &mut x[..HASH_BUCKETS] {
            *v /= grams as f64;
        }
    }

    let words: Vec<&str> = phrase.split_whitespace().collect();
    let capitalised = words
        .iter()
        .filter(|w| w.chars().find(|c| c.is_alphabetic()).is_some_and(char::is_uppercase))
        .count();
    let last = normalized.rsplit(' ').next().unwrap_or("");

    let extra = &mut x[HASH_BUCKETS..];
    extra[0] = (words.len() as f64 / 4.0).min(2.0);
    extra[1] = (normalized.chars().count() as f64 / 20.0).min(2.0);
    extra[2] = if words.is_empty() { 0.0 } else { capitalised as f64 / words.len() as f64 };
    for (slot, suffix) in extra[3..6].iter_mut().zip(SUFFIXES) {
        *slot = if last.ends_with(suffix) { 1.0 } else { 0.0 };
    }
    extra[6] = if vocab.entity.contains(&normalized) { 1.0 } else { 0.0 };
    extra[7] = if vocab.relation.contains(&normalized) { 1.0 } else { 0.0 };
    x
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

//! Learned re-ranking of candidate lists over (R_i, C, H).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::DensityFeatures;
use crate::error::{Error, Result};
use crate::index::{Candidate, CandidateList};
use crate::spotter::sigmoid;

pub const RERANK_MODEL_VERSION: u32 = 1;

const LEARNING_RATE: f64 = 0.05;
const EPOCHS: usize = 500;
const L2: f64 = 1e-4;
const MIN_ROWS: usize = 10;

/// Which of the three features a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet {
    pub rank: bool,
    pub connection: bool,
    pub hops: bool,
}

impl FeatureSet {
    pub const ALL: FeatureSet = FeatureSet { rank: true, connection: true, hops: true };
    pub const RANK_ONLY: FeatureSet = FeatureSet { rank: true, connection: false, hops: false };
    pub const DENSITY_ONLY: FeatureSet = FeatureSet { rank: false, connection: true, hops: true };

    pub fn names(self) -> Vec<String> {
        [(self.rank, "R_i"), (self.connection, "C"), (self.hops, "H")]
            .into_iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| n.to_string())
            .collect()
    }

    /// Inverse of [`FeatureSet::names`].
    pub fn from_names(names: &[String]) -> Result<Self> {
        let mut set = FeatureSet { rank: false, connection: false, hops: false };
        for n in names {
            match n.as_str() {
                "R_i" => set.rank = true,
                "C" => set.connection = true,
                "H" => set.hops = true,
                other => return Err(Error::Artifact(format!("unknown feature `{other}`"))),
            }
        }
        if set.names() != names {
            return Err(Error::Artifact("feature names out of order or repeated".into()));
        }
        Ok(set)
    }

    pub fn label(self) -> String {
        self.names().join(",")
    }

    fn vector(self, f: &DensityFeatures) -> Vec<f64> {
        let mut x = Vec::with_capacity(3);
        if self.rank {
            x.push(f64::from(f.initial_rank));
        }
        if self.connection {
            x.push(f.connection_count);
        }
        if self.hops {
            x.push(f.hop_count);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    /// Question and keyword the candidate was retrieved for; rows of one
    /// group form one ranked list.
    pub group: String,
    pub features: DensityFeatures,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaling: Vec<Scaling>,
}

/// A candidate with its features and the model's probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub features: DensityFeatures,
    pub probability: f64,
}

impl RerankModel {
    /// Standardised batch gradient descent on the mean log-loss plus an L2
    /// penalty, from zero weights.
    pub fn train(rows: &[TrainingRow], set: FeatureSet) -> Result<Self> {
        if rows.len() < MIN_ROWS {
            return Err(Error::Training(format!("need at least {MIN_ROWS} rows, got {}", rows.len())));
        }
        let positives = rows.iter().filter(|r| r.label).count();
        if positives == 0 || positives == rows.len() {
            return Err(Error::Training("training rows must contain both labels".into()));
        }
        if set.names().is_empty() {
            return Err(Error::Config("feature set is empty".into()));
        }
        let raw: Vec<Vec<f64>> = rows.iter().map(|r| set.vector(&r.features)).collect();
        let dim = raw[0].len();
        let n = rows.len() as f64;
        let scaling: Vec<Scaling> = (0..dim)
            .map(|d| {
                let mean = raw.iter().map(|x| x[d]).sum::<f64>() / n;
                let var = raw.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                Scaling { mean, stddev: if sd > 0.0 { sd } else { 1.0 } }
            })
            .collect();
        let xs: Vec<Vec<f64>> = raw.iter().map(|x| standardise(x, &scaling)).collect();

        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        for _ in 0..EPOCHS {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for (x, r) in xs.iter().zip(rows) {
                let y = if r.label { 1.0 } else { 0.0 };
                let err = sigmoid(dot(&w, x) + b) - y;
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g += err * xi;
                }
                gb += err;
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= LEARNING_RATE * (g / n + L2 * *wi);
            }
            b -= LEARNING_RATE * gb / n;
        }
        Ok(RerankModel {
            version: RERANK_MODEL_VERSION,
            feature_names: set.names(),
            weights: w,
            bias: b,
            scaling,
        })
    }

    pub fn feature_set(&self) -> Result<FeatureSet> {
        FeatureSet::from_names(&self.feature_names)
    }

    pub fn probability(&self, f: &DensityFeatures) -> f64 {
        let set = self.feature_set().expect("validated on construction");
        let x = standardise(&set.vector(f), &self.scaling);
        sigmoid(dot(&self.weights, &x) + self.bias)
    }

    /// Candidates ordered by descending probability, ties by initial rank.
    pub fn rerank(&self, list: &CandidateList, features: &[DensityFeatures]) -> Result<Vec<ScoredCandidate>> {
        if list.len() != features.len() {
            return Err(Error::InvalidInput(format!(
                "{} candidates but {} feature rows for `{}`",
                list.len(),
                features.len(),
                list.keyword
            )));
        }
        let mut out: Vec<ScoredCandidate> = list
            .candidates
            .iter()
            .zip(features)
            .map(|(c, f)| ScoredCandidate {
                candidate: c.clone(),
                features: *f,
                probability: self.probability(f),
            })
            .collect();
        out.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then(a.candidate.initial_rank.cmp(&b.candidate.initial_rank))
        });
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: RerankModel = serde_json::from_str(&crate::read_to_string(path)?)?;
        if model.version != RERANK_MODEL_VERSION {
            return Err(Error::Artifact(format!(
                "re-rank model version {} does not match {RERANK_MODEL_VERSION}",
                model.version
            )));
        }
        let dim = model.feature_set()?.names().len();
        if model.weights.len() != dim || model.scaling.len() != dim {
            return Err(Error::Artifact("re-rank model dimensions do not match its features".into()));
        }
        Ok(model)
    }
}

fn standardise(x: &[f64], scaling: &[Scaling]) -> Vec<f64> {
    x.iter().zip(scaling).map(|(v, s)| (v - s.mean) / s.stddev).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean reciprocal rank of the gold URI per group; a missing or absent gold
/// contributes 0.
pub fn mrr<S: AsRef<str>>(ranked: &[Vec<S>], gold: &[Option<S>]) -> Result<f64> {
    if ranked.is_empty() {
        return Err(Error::InvalidInput("MRR over zero groups".into()));
    }
    if ranked.len() != gold.len() {
        return Err(Error::InvalidInput("one gold entry per ranked list required".into()));
    }
    let total: f64 = ranked
        .iter()
        .zip(gold)
        .map(|(list, g)| {
            g.as_ref()
                .and_then(|g| list.iter().position(|u| u.as_ref() == g.as_ref()))
                .map_or(0.0, |p| 1.0 / (p as f64 + 1.0))
        })
        .sum();
    Ok(total / ranked.len() as f64)
}

/// MRR of `model` on rows grouped by [`TrainingRow::group`]. A gold row
/// tied in probability with others gets the mean reciprocal rank over the
/// tied positions, so a feature set gains nothing from tie order. Groups
/// without a positive row contribute 0.
pub fn group_mrr(model: &RerankModel, rows: &[TrainingRow]) -> Result<f64> {
    let mut groups: BTreeMap<&str, Vec<&TrainingRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.group.as_str()).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput("MRR over zero groups".into()));
    }
    let mut total = 0.0;
    for members in groups.values() {
        let Some(gold) = members.iter().find(|r| r.label) else { continue };
        let p = model.probability(&gold.features);
        let probs: Vec<f64> = members.iter().map(|r| model.probability(&r.features)).collect();
        let above = probs.iter().filter(|&&q| q > p).count();
        let tied = probs.iter().filter(|&&q| q == p).count();
        total += (above + 1..=above + tied).map(|pos| 1.0 / pos as f64).sum::<f64>() / tied as f64;
    }
    Ok(total / groups.len() as f64)
}

/// Group-wise k-fold cross-validation: groups are dealt to folds in sorted
/// order, and each fold's MRR comes from a model trained on the others.
pub fn cross_validate(rows: &[TrainingRow], set: FeatureSet, folds: usize) -> Result<f64> {
    if folds < 2 {
        return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {folds}")));
    }
    let mut names: Vec<&str> = rows.iter().map(|r| r.group.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() < folds {
        return Err(Error::Training(format!("{} groups cannot fill {folds} folds", names.len())));
    }
    let fold_of: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, g)| (*g, i % folds)).collect();
    let mut total = 0.0;
    for f in 0..folds {
        let (test, train): (Vec<TrainingRow>, Vec<TrainingRow>) =
            rows.iter().cloned().partition(|r| fold_of[r.group.as_str()] == f);
        let model = RerankModel::train(&train, set)?;
        total += group_mrr(&model, &test)?;
    }
    Ok(total / folds as f64)
}

/// Model fitted on every row, plus the cross-validated MRR.
pub fn train_with_cv(rows: &[TrainingRow], set: FeatureSet, folds: usize) -> Result<(RerankModel, f64)> {
    let cv = cross_validate(rows, set, folds)?;
    Ok((RerankModel::train(rows, set)?, cv))
}

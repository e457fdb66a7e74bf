//! Build products under one directory, tied together by a manifest.
//!
//! The manifest records the hash of the configuration keys that shape the
//! artifacts and the SHA-256 of every input and artifact file. Loading with
//! a different configuration hash, or with a file whose digest changed, is
//! a hard error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::index::LabelIndex;
use crate::kg::{HopOracle, KnowledgeGraph, SubdivisionGraph};
use crate::rerank::RerankModel;
use crate::spotter::{ErModel, Stopwords};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRAPH_FILE: &str = "graph.tsv";
pub const INDEX_FILE: &str = "index.bin";
pub const ER_MODEL_FILE: &str = "er_model.json";
pub const RERANK_MODEL_FILE: &str = "rerank_model.json";
pub const STOPWORDS_FILE: &str = "stopwords.txt";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config_hash: String,
    /// Source path and digest of each input, by role.
    pub inputs: BTreeMap<String, InputRecord>,
    /// Digest of each artifact file, by file name.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let m: Manifest = serde_json::from_str(&crate::read_to_string(&path)?)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Artifact(format!("manifest version {} is not supported", m.version)));
        }
        Ok(m)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Fails unless the manifest was written under `cfg` and every listed
    /// artifact still has its recorded digest.
    pub fn check(&self, dir: &Path, cfg: &PipelineConfig) -> Result<()> {
        let expected = cfg.artifact_hash()?;
        if self.config_hash != expected {
            return Err(Error::Artifact(format!(
                "{} was built with config hash {}, current config hashes to {expected}; rebuild the artifacts",
                dir.display(),
                self.config_hash
            )));
        }
        for (name, digest) in &self.artifacts {
            if &file_digest(&dir.join(name))? != digest {
                return Err(Error::Artifact(format!("{name} changed since the manifest was written")));
            }
        }
        Ok(())
    }

    fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        self.artifacts.insert(name.to_string(), file_digest(&dir.join(name))?);
        Ok(())
    }
}

/// Everything the linker needs at run time.
#[derive(Debug)]
pub struct Artifacts {
    pub kg: KnowledgeGraph,
    pub oracle: HopOracle,
    pub index: LabelIndex,
    pub stopwords: Stopwords,
    pub er: Option<ErModel>,
    pub reranker: Option<RerankModel>,
}

impl Artifacts {
    /// In-memory artifacts; nothing is written.
    pub fn from_parts(kg: KnowledgeGraph, index: LabelIndex, cfg: &PipelineConfig) -> Result<Self> {
        let oracle = HopOracle::new(Arc::new(SubdivisionGraph::build(&kg)), cfg.hop_cap)?;
        let unknown = index.unknown_uris(&kg);
        if let Some((uri, kind)) = unknown.first() {
            log::warn!("{} label index entries are not in the graph, e.g. {uri} ({kind})", unknown.len());
        }
        Ok(Artifacts {
            kg,
            oracle,
            index,
            stopwords: Stopwords::default(),
            er: None,
            reranker: None,
        })
    }

    /// Parses the inputs, writes graph, index and manifest to `out`.
    pub fn build(
        triples: &Path,
        labels: &Path,
        expansions: Option<&Path>,
        stopwords: Option<&Path>,
        cfg: &PipelineConfig,
        out: &Path,
    ) -> Result<Self> {
        let kg = KnowledgeGraph::load(triples)?;
        let index = LabelIndex::from_files(labels, expansions)?;
        let mut art = Self::from_parts(kg, index, cfg)?;
        if let Some(p) = stopwords {
            art.stopwords = Stopwords::load(p)?;
        }

        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let mut manifest = Manifest {
            version: MANIFEST_VERSION,
            config_hash: cfg.artifact_hash()?,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        };
        let inputs: [(&str, Option<&Path>); 4] = [
            ("triples", Some(triples)),
            ("labels", Some(labels)),
            ("expansions", expansions),
            ("stopwords", stopwords),
        ];
        for (role, path) in inputs {
            if let Some(p) = path {
                manifest.inputs.insert(
                    role.to_string(),
                    InputRecord { path: p.display().to_string(), sha256: file_digest(p)? },
                );
            }
        }

        let graph_path = out.join(GRAPH_FILE);
        std::fs::copy(triples, &graph_path).map_err(|e| Error::io(&graph_path, e))?;
        manifest.record(out, GRAPH_FILE)?;
        art.index.save(&out.join(INDEX_FILE))?;
        manifest.record(out, INDEX_FILE)?;
        if let Some(p) = stopwords {
            let dst = out.join(STOPWORDS_FILE);
            std::fs::copy(p, &dst).map_err(|e| Error::io(&dst, e))?;
            manifest.record(out, STOPWORDS_FILE)?;
        }
        manifest.save(out)?;
        Ok(art)
    }

    /// Loads a directory written by [`Artifacts::build`] and the training
    /// commands, after checking its manifest against `cfg`.
    pub fn load(dir: &Path, cfg: &PipelineConfig) -> Result<Self> {
        let manifest = Manifest::load(dir)?;
        manifest.check(dir, cfg)?;
        let kg = KnowledgeGraph::load(&dir.join(GRAPH_FILE))?;
        let index = LabelIndex::load(&dir.join(INDEX_FILE))?;
        let mut art = Self::from_parts(kg, index, cfg)?;
        if manifest.artifacts.contains_key(STOPWORDS_FILE) {
            art.stopwords = Stopwords::load(&dir.join(STOPWORDS_FILE))?;
        }
        if manifest.artifacts.contains_key(ER_MODEL_FILE) {
            art.er = Some(ErModel::load(&dir.join(ER_MODEL_FILE))?);
        }
        if manifest.artifacts.contains_key(RERANK_MODEL_FILE) {
            art.reranker = Some(RerankModel::load(&dir.join(RERANK_MODEL_FILE))?);
        }
        Ok(art)
    }

    /// Stores `model` in `dir` and records it in the manifest.
    pub fn save_er(dir: &Path, cfg: &PipelineConfig, model: &ErModel) -> Result<PathBuf> {
        Self::save_model(dir, cfg, ER_MODEL_FILE, |p| model.save(p))
    }

    pub fn save_reranker(dir: &Path, cfg: &PipelineConfig, model: &RerankModel) -> Result<PathBuf> {
        Self::save_model(dir, cfg, RERANK_MODEL_FILE, |p| model.save(p))
    }

    fn save_model(dir: &Path, cfg: &PipelineConfig, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
        let mut manifest = Manifest::load(dir)?;
        manifest.check(dir, cfg)?;
        let path = dir.join(name);
        write(&path)?;
        manifest.record(dir, name)?;
        manifest.save(dir)?;
        Ok(path)
    }
}

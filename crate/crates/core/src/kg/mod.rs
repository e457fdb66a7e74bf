//! Knowledge graph storage, its subdivision graph, and hop-distance queries.

mod hops;
mod subdivision;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

pub use hops::{HopOracle, Hops, DEFAULT_HOP_CAP};
pub use subdivision::{NodeId, SubdivisionGraph};

/// A single `(subject, predicate, object)` statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

/// Labelled directed multigraph. Vertices and edge labels are interned;
/// duplicate triples are stored once.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    vertices: Vec<String>,
    vertex_ids: HashMap<String, u32>,
    labels: Vec<String>,
    label_ids: HashMap<String, u32>,
    triples: Vec<(u32, u32, u32)>,
    seen: HashSet<(u32, u32, u32)>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a triple. Returns `false` if it was already present.
    pub fn insert(&mut self, subject: &str, predicate: &str, object: &str) -> Result<bool> {
        for (field, value) in [("subject", subject), ("predicate", predicate), ("object", object)] {
            if value.is_empty() {
                return Err(Error::InvalidInput(format!("empty {field} in triple")));
            }
        }
        let s = intern(&mut self.vertices, &mut self.vertex_ids, subject);
        let p = intern(&mut self.labels, &mut self.label_ids, predicate);
        let o = intern(&mut self.vertices, &mut self.vertex_ids, object);
        if self.seen.insert((s, p, o)) {
            self.triples.push((s, p, o));
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Result<Self> {
        let mut kg = KnowledgeGraph::new();
        for (s, p, o) in triples {
            kg.insert(s, p, o)?;
        }
        Ok(kg)
    }

    /// Parses a triple stream. Fields are tab separated; a line without tabs
    /// may use arbitrary whitespace instead. `#` lines are comments.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut kg = KnowledgeGraph::new();
        for (line_no, line) in crate::data_lines(text) {
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            kg.insert(fields[0], fields[1], fields[2])?;
        }
        Ok(kg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.vertices.iter().map(String::as_str)
    }

    pub fn edge_labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn contains_vertex(&self, v: &str) -> bool {
        self.vertex_ids.contains_key(v)
    }

    pub fn contains_label(&self, l: &str) -> bool {
        self.label_ids.contains_key(l)
    }

    /// Triples in insertion order.
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.triples.iter().map(|&(s, p, o)| {
            (
                self.vertices[s as usize].as_str(),
                self.labels[p as usize].as_str(),
                self.vertices[o as usize].as_str(),
            )
        })
    }

    pub(crate) fn raw_triples(&self) -> &[(u32, u32, u32)] {
        &self.triples
    }

    pub(crate) fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub(crate) fn label_names(&self) -> &[String] {
        &self.labels
    }
}

fn intern(names: &mut Vec<String>, ids: &mut HashMap<String, u32>, name: &str) -> u32 {
    if let Some(&id) = ids.get(name) {
        return id;
    }
    let id = names.len() as u32;
    names.push(name.to_string());
    ids.insert(name.to_string(), id);
    id
}

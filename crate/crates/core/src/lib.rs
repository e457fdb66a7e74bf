//! Joint entity and relation linking for natural-language questions over a
//! knowledge graph.
//!
//! The crate is organised along the linking pipeline:
//!
//! - [`kg`] loads triples, builds the subdivision graph (relations become
//!   nodes) and answers bounded hop-distance queries.
//! - [`index`] is the label index used for candidate retrieval.
//! - [`spotter`] extracts keyword phrases and predicts entity vs. relation.
//! - [`gtsp`] disambiguates by solving a generalised travelling salesman
//!   instance, exactly or through a Noon-Bean reduction and local search.
//! - [`density`] computes connection-count and hop-count features.
//! - [`rerank`] learns a scoring function over those features.
//! - [`adaptive`] retries keywords whose candidates all score poorly.
//! - [`pipeline`] wires everything together; [`cli`] exposes it.
//!
//! Runnable walkthroughs for each stage live in the crate's `examples/`
//! directory.

pub mod adaptive;
pub mod cli;
pub mod density;
pub mod error;
pub mod gtsp;
pub mod index;
pub mod kg;
pub mod pipeline;
pub mod rerank;
pub mod spotter;
pub mod synthetic;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// Whether a phrase, label or node denotes an entity or a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "E")]
    Entity,
    #[serde(rename = "R")]
    Relation,
}

impl Kind {
    /// The opposite kind. Applying it twice gives back the original.
    pub fn flip(self) -> Kind {
        match self {
            Kind::Entity => Kind::Relation,
            Kind::Relation => Kind::Entity,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Kind::Entity => "E",
            Kind::Relation => "R",
        }
    }

    pub fn from_code(s: &str) -> Option<Kind> {
        match s {
            "E" | "e" => Some(Kind::Entity),
            "R" | "r" => Some(Kind::Relation),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Entity => "entity",
            Kind::Relation => "relation",
        })
    }
}

/// Iterates the meaningful lines of a tab-separated resource: skips blank
/// lines and `#` comments and yields `(1-based line number, line)`.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_is_an_involution() {
        for k in [Kind::Entity, Kind::Relation] {
            assert_ne!(k.flip(), k);
            assert_eq!(k.flip().flip(), k);
        }
    }

    #[test]
    fn data_lines_skip_comments_and_blanks() {
        let text = "# header\nA\tp\tB\n\n  # indented comment\nC\tq\tD\r\n";
        let lines: Vec<_> = data_lines(text).collect();
        assert_eq!(lines, vec![(2, "A\tp\tB"), (5, "C\tq\tD")]);
    }
}

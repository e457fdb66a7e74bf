//! Label index for candidate retrieval.
//!
//! Every URI is indexed under its labels plus any expansion variants
//! (synonyms, aliases, inflections). Entities and relations live in separate
//! sub-indexes. Lookup goes through a token inverted index with a character
//! trigram fallback, and hits are scored with [`text::similarity`] times the
//! entry weight, a per-label prior supplied with the labels (1 if absent).

pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::Kind;

/// Bumped whenever the on-disk layout or scoring changes.
pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"KGLXIDX\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub uri: String,
    pub label: String,
    pub kind: Kind,
    pub weight: f64,
}

impl LabelEntry {
    pub fn new(uri: impl Into<String>, label: impl Into<String>, kind: Kind) -> Self {
        LabelEntry {
            uri: uri.into(),
            label: label.into(),
            kind,
            weight: 1.0,
        }
    }
}

/// A retrieved candidate for a keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub uri: String,
    pub matched_label: String,
    pub text_score: f64,
    /// 1 is the best text match.
    pub initial_rank: u32,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub keyword: String,
    pub kind_queried: Kind,
    pub candidates: Vec<Candidate>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position_of(&self, uri: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.uri == uri)
    }

    /// Appends `uri` at the lowest rank unless it is already present.
    /// Returns whether anything was added.
    pub fn inject(&mut self, uri: &str, label: &str) -> bool {
        if self.position_of(uri).is_some() {
            return false;
        }
        self.candidates.push(Candidate {
            uri: uri.to_string(),
            matched_label: label.to_string(),
            text_score: 0.0,
            initial_rank: self.candidates.len() as u32 + 1,
            kind: self.kind_queried,
        });
        true
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexedLabel {
    uri: String,
    label: String,
    normalized: String,
    weight: f64,
    expanded: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct SubIndex {
    entries: Vec<IndexedLabel>,
    tokens: BTreeMap<String, Vec<u32>>,
    trigrams: BTreeMap<String, Vec<u32>>,
}

impl SubIndex {
    fn add(&mut self, entry: IndexedLabel) {
        let id = self.entries.len() as u32;
        for tok in text::tokens(&entry.normalized) {
            self.tokens.entry(tok.to_string()).or_default().push(id);
        }
        for tri in text::trigrams(&entry.normalized) {
            self.trigrams.entry(tri).or_default().push(id);
        }
        self.entries.push(entry);
    }

    fn hits(&self, query: &str) -> BTreeSet<u32> {
        let mut ids = BTreeSet::new();
        for tok in text::tokens(query) {
            if let Some(p) = self.tokens.get(tok) {
                ids.extend(p.iter().copied());
            }
        }
        for tri in text::trigrams(query) {
            if let Some(p) = self.trigrams.get(&tri) {
                ids.extend(p.iter().copied());
            }
        }
        ids
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LabelIndex {
    entity: SubIndex,
    relation: SubIndex,
}

impl LabelIndex {
    /// Builds the index from base entries and `(label, variant)` expansions.
    /// An expansion applies to every entry whose label normalises to the
    /// same string, and yields an extra entry with the same URI and kind.
    pub fn build(entries: Vec<LabelEntry>, expansions: &[(String, String)]) -> Result<Self> {
        let mut by_label: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.label.trim().is_empty() {
                return Err(Error::InvalidInput(format!("empty label for `{}`", e.uri)));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid weight for `{}`", e.uri)));
            }
            by_label.entry(text::normalize(&e.label)).or_default().push(i);
        }

        let mut index = LabelIndex::default();
        let mut seen: BTreeSet<(Kind, String, String)> = BTreeSet::new();
        let mut push = |index: &mut LabelIndex, e: &LabelEntry, label: &str, expanded: bool| {
            let normalized = text::normalize(label);
            if normalized.is_empty() || !seen.insert((e.kind, e.uri.clone(), normalized.clone())) {
                return;
            }
            index.sub_mut(e.kind).add(IndexedLabel {
                uri: e.uri.clone(),
                label: label.to_string(),
                normalized,
                weight: e.weight,
                expanded,
            });
        };

        for e in &entries {
            push(&mut index, e, &e.label, false);
        }
        for (label, variant) in expansions {
            if let Some(ids) = by_label.get(&text::normalize(label)) {
                for &i in ids {
                    push(&mut index, &entries[i], variant, true);
                }
            }
        }
        Ok(index)
    }

    pub fn from_files(labels: &Path, expansions: Option<&Path>) -> Result<Self> {
        let entries = parse_labels(&crate::read_to_string(labels)?, &labels.display().to_string())?;
        let expansions = match expansions {
            Some(p) => parse_expansions(&crate::read_to_string(p)?, &p.display().to_string())?,
            None => Vec::new(),
        };
        Self::build(entries, &expansions)
    }

    fn sub(&self, kind: Kind) -> &SubIndex {
        match kind {
            Kind::Entity => &self.entity,
            Kind::Relation => &self.relation,
        }
    }

    fn sub_mut(&mut self, kind: Kind) -> &mut SubIndex {
        match kind {
            Kind::Entity => &mut self.entity,
            Kind::Relation => &mut self.relation,
        }
    }

    /// Number of indexed labels (base plus expanded) of one kind.
    pub fn len(&self, kind: Kind) -> usize {
        self.sub(kind).entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity.entries.is_empty() && self.relation.entries.is_empty()
    }

    /// Normalised labels of one kind, including expansion variants.
    pub fn vocabulary(&self, kind: Kind) -> impl Iterator<Item = &str> {
        self.sub(kind).entries.iter().map(|e| e.normalized.as_str())
    }

    /// `(uri, label, kind)` of every base and expanded entry.
    pub fn labels(&self) -> impl Iterator<Item = (&str, &str, Kind)> {
        self.entity
            .entries
            .iter()
            .map(|e| (e.uri.as_str(), e.label.as_str(), Kind::Entity))
            .chain(
                self.relation
                    .entries
                    .iter()
                    .map(|e| (e.uri.as_str(), e.label.as_str(), Kind::Relation)),
            )
    }

    /// Label of `uri` to show when it is injected into a list.
    pub fn display_label(&self, uri: &str, kind: Kind) -> Option<&str> {
        self.sub(kind)
            .entries
            .iter()
            .find(|e| e.uri == uri && !e.expanded)
            .map(|e| e.label.as_str())
    }

    /// Entries whose URI is missing from the graph or registered under the
    /// wrong kind.
    pub fn unknown_uris(&self, kg: &KnowledgeGraph) -> Vec<(String, Kind)> {
        let mut out = BTreeSet::new();
        for e in &self.entity.entries {
            if !kg.contains_vertex(&e.uri) {
                out.insert((e.uri.clone(), Kind::Entity));
            }
        }
        for e in &self.relation.entries {
            if !kg.contains_label(&e.uri) {
                out.insert((e.uri.clone(), Kind::Relation));
            }
        }
        out.into_iter().collect()
    }

    /// Top-`k` candidates with strictly positive score.
    pub fn search(&self, keyword: &str, kind: Kind, k: usize) -> Result<CandidateList> {
        self.search_with_floor(keyword, kind, k, 0.0)
    }

    /// Like [`LabelIndex::search`] but drops hits scoring below `min_score`.
    pub fn search_with_floor(&self, keyword: &str, kind: Kind, k: usize, min_score: f64) -> Result<CandidateList> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let query = text::normalize(keyword);
        if query.is_empty() {
            return Err(Error::InvalidInput(format!("keyword `{keyword}` is empty after normalisation")));
        }
        let sub = self.sub(kind);

        // Best-scoring label per URI.
        let mut best: HashMap<&str, (f64, &IndexedLabel)> = HashMap::new();
        for id in sub.hits(&query) {
            let entry = &sub.entries[id as usize];
            let score = text::similarity(&query, &entry.normalized) * entry.weight;
            if score <= 0.0 || score < min_score {
                continue;
            }
            match best.get(entry.uri.as_str()) {
                Some(&(s, cur)) if !better(score, entry, s, cur) => {}
                _ => {
                    best.insert(entry.uri.as_str(), (score, entry));
                }
            }
        }

        let mut hits: Vec<(f64, &IndexedLabel)> = best.into_values().collect();
        hits.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.label.chars().count().cmp(&b.1.label.chars().count()))
                .then_with(|| a.1.uri.cmp(&b.1.uri))
        });
        hits.truncate(k);

        Ok(CandidateList {
            keyword: keyword.to_string(),
            kind_queried: kind,
            candidates: hits
                .into_iter()
                .enumerate()
                .map(|(i, (score, e))| Candidate {
                    uri: e.uri.clone(),
                    matched_label: e.label.clone(),
                    text_score: score,
                    initial_rank: i as u32 + 1,
                    kind,
                })
                .collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
        file.write_all(&INDEX_FORMAT_VERSION.to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
        bincode::serialize_into(&mut file, self)?;
        Ok(())
    }

    /// Loads an index file. A version mismatch is reported as
    /// [`Error::Artifact`] so the caller can rebuild.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::Artifact(format!("{} is not a label index file", path.display())));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != INDEX_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "index version {version} does not match {INDEX_FORMAT_VERSION}; rebuild the index"
            )));
        }
        Ok(bincode::deserialize(&bytes[12..])?)
    }
}

/// Per-URI preference: higher score, then shorter label, then label text.
fn better(score: f64, entry: &IndexedLabel, cur_score: f64, cur: &IndexedLabel) -> bool {
    score
        .total_cmp(&cur_score)
        .then_with(|| cur.label.chars().count().cmp(&entry.label.chars().count()))
        .then_with(|| cur.label.cmp(&entry.label))
        .is_gt()
}

/// Parses `uri<TAB>label<TAB>E|R[<TAB>weight]` lines.
pub fn parse_labels(text: &str, source_name: &str) -> Result<Vec<LabelEntry>> {
    let mut out = Vec::new();
    for (line_no, line) in crate::data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::parse(source_name, line_no, "expected uri, label, kind[, weight]"));
        }
        let uri = fields[0].trim();
        let label = fields[1].trim();
        if uri.is_empty() || label.is_empty() {
            return Err(Error::parse(source_name, line_no, "empty uri or label"));
        }
        let kind = Kind::from_code(fields[2].trim())
            .ok_or_else(|| Error::parse(source_name, line_no, format!("unknown kind `{}`", fields[2])))?;
        let weight = match fields.get(3) {
            Some(w) => w
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|w| *w >= 0.0 && w.is_finite())
                .ok_or_else(|| Error::parse(source_name, line_no, format!("bad weight `{w}`")))?,
            None => 1.0,
        };
        out.push(LabelEntry {
            uri: uri.to_string(),
            label: label.to_string(),
            kind,
            weight,
        });
    }
    Ok(out)
}

/// Parses `label<TAB>variant` lines.
pub fn parse_expansions(text: &str, source_name: &str) -> Result<Vec<(String, String)>> {
    crate::data_lines(text)
        .map(|(line_no, line)| {
            let mut it = line.split('\t');
            match (it.next(), it.next(), it.next()) {
                (Some(l), Some(v), None) if !l.trim().is_empty() && !v.trim().is_empty() => {
                    Ok((l.trim().to_string(), v.trim().to_string()))
                }
                _ => Err(Error::parse(source_name, line_no, "expected label<TAB>variant")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(list: &CandidateList) -> Vec<(&str, u32)> {
        list.candidates.iter().map(|c| (c.uri.as_str(), c.initial_rank)).collect()
    }

    #[test]
    fn expansion_makes_alias_searchable() {
        let idx = LabelIndex::build(
            vec![LabelEntry::new("dbr:Tesla_Motors", "Tesla Motors", Kind::Entity)],
            &[("Tesla Motors".into(), "Tesla".into())],
        )
        .unwrap();
        let hits = idx.search("Tesla", Kind::Entity, 5).unwrap();
        assert_eq!(hits.candidates[0].uri, "dbr:Tesla_Motors");
        assert_eq!(hits.candidates[0].matched_label, "Tesla");
    }

    #[test]
    fn relation_synonym() {
        let idx = LabelIndex::build(
            vec![LabelEntry::new("dbo:author", "author", Kind::Relation)],
            &[("author".into(), "writer".into())],
        )
        .unwrap();
        let hits = idx.search("writer", Kind::Relation, 5).unwrap();
        assert_eq!(pairs(&hits), vec![("dbo:author", 1)]);
    }

    #[test]
    fn no_expansions_means_base_entries_only() {
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("a", "alpha", Kind::Entity),
                LabelEntry::new("b", "beta", Kind::Relation),
            ],
            &[],
        )
        .unwrap();
        assert_eq!(idx.len(Kind::Entity), 1);
        assert_eq!(idx.len(Kind::Relation), 1);
    }

    #[test]
    fn unmatched_expansion_is_ignored() {
        let idx = LabelIndex::build(
            vec![LabelEntry::new("a", "alpha", Kind::Entity)],
            &[("gamma".into(), "delta".into())],
        )
        .unwrap();
        assert_eq!(idx.len(Kind::Entity), 1);
    }

    #[test]
    fn exact_match_ranks_first_and_truncation() {
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("x:1", "New York City", Kind::Entity),
                LabelEntry::new("x:2", "New York", Kind::Entity),
                LabelEntry::new("x:3", "York", Kind::Entity),
            ],
            &[],
        )
        .unwrap();
        let hits = idx.search("new york", Kind::Entity, 10).unwrap();
        assert_eq!(hits.candidates[0].uri, "x:2");
        assert_eq!(hits.len(), 3);
        let top1 = idx.search("new york", Kind::Entity, 1).unwrap();
        assert_eq!(top1.len(), 1);
    }

    #[test]
    fn kind_filter() {
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("dbo:foundedBy", "founder", Kind::Relation),
                LabelEntry::new("dbr:The_Founder", "founder", Kind::Entity),
            ],
            &[],
        )
        .unwrap();
        let hits = idx.search("founder", Kind::Relation, 10).unwrap();
        assert_eq!(pairs(&hits), vec![("dbo:foundedBy", 1)]);
    }

    #[test]
    fn ties_prefer_shorter_label_then_uri() {
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("b", "tesla", Kind::Entity),
                LabelEntry::new("a", "tesla", Kind::Entity),
            ],
            &[],
        )
        .unwrap();
        let hits = idx.search("tesla", Kind::Entity, 10).unwrap();
        assert_eq!(pairs(&hits), vec![("a", 1), ("b", 2)]);
    }

    #[test]
    fn weight_scales_score() {
        let idx = LabelIndex::build(
            vec![LabelEntry {
                weight: 0.5,
                ..LabelEntry::new("a", "alpha", Kind::Entity)
            }],
            &[],
        )
        .unwrap();
        let hits = idx.search("alpha", Kind::Entity, 1).unwrap();
        assert!((hits.candidates[0].text_score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_hits_is_empty_list() {
        let idx = LabelIndex::build(vec![LabelEntry::new("a", "alpha", Kind::Entity)], &[]).unwrap();
        assert!(idx.search("zzz", Kind::Entity, 5).unwrap().is_empty());
        assert!(idx.search("alpha", Kind::Relation, 5).unwrap().is_empty());
    }

    #[test]
    fn invalid_queries() {
        let idx = LabelIndex::default();
        assert!(idx.search("...", Kind::Entity, 5).is_err());
        assert!(idx.search("a", Kind::Entity, 0).is_err());
    }

    #[test]
    fn floor_drops_weak_hits() {
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("a", "birth place", Kind::Relation),
                LabelEntry::new("b", "place", Kind::Relation),
            ],
            &[],
        )
        .unwrap();
        let all = idx.search("place", Kind::Relation, 5).unwrap();
        assert_eq!(all.len(), 2);
        let floored = idx.search_with_floor("place", Kind::Relation, 5, 0.9).unwrap();
        assert_eq!(pairs(&floored), vec![("b", 1)]);
    }

    #[test]
    fn parse_label_file() {
        let text = "# uri\tlabel\tkind\ndbr:A\tAlpha\tE\ndbo:p\tpee\tR\t0.5\n";
        let entries = parse_labels(text, "labels.tsv").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].weight, 0.5);
        assert!(parse_labels("a\tb\tX\n", "l").is_err());
        let err = parse_labels("a\tb\tE\na\tb\n", "l").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn parse_expansion_file() {
        let ex = parse_expansions("author\twriter\n#c\nx\n", "e");
        assert!(matches!(ex, Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn save_load_round_trip_and_version_check() {
        let idx = LabelIndex::build(
            vec![LabelEntry::new("dbr:Tesla_Motors", "Tesla Motors", Kind::Entity)],
            &[("Tesla Motors".into(), "Tesla".into())],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        idx.save(&path).unwrap();
        let loaded = LabelIndex::load(&path).unwrap();
        assert_eq!(
            loaded.search("tesla", Kind::Entity, 3).unwrap(),
            idx.search("tesla", Kind::Entity, 3).unwrap()
        );

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8..12].copy_from_slice(&(INDEX_FORMAT_VERSION + 1).to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(LabelIndex::load(&path), Err(Error::Artifact(_))));
    }

    #[test]
    fn unknown_uris_are_reported() {
        let kg = KnowledgeGraph::from_triples([("dbr:A", "dbo:p", "dbr:B")]).unwrap();
        let idx = LabelIndex::build(
            vec![
                LabelEntry::new("dbr:A", "a", Kind::Entity),
                LabelEntry::new("dbr:Z", "z", Kind::Entity),
                LabelEntry::new("dbr:B", "b", Kind::Relation),
            ],
            &[],
        )
        .unwrap();
        assert_eq!(
            idx.unknown_uris(&kg),
            vec![("dbr:B".to_string(), Kind::Relation), ("dbr:Z".to_string(), Kind::Entity)]
        );
    }
}

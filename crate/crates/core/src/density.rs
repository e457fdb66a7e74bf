//! Connection-Count and Hop-Count features.
//!
//! For a candidate `c` in list `k` of `n` lists:
//! `C(c) = (1/n) · Σ_{o≠k} Σ_j dconnect(c, c_j^o)` and
//! `H(c) = (1/n) · Σ_{o≠k} Σ_j hops(c, c_j^o)`, where a disconnected pair
//! counts as `cap + 1` hops. Each unordered cross-list pair is evaluated
//! once and credited to both endpoints; sums are kept as integers and
//! divided once at the end, so the result does not depend on pair order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::CandidateList;
use crate::kg::{HopOracle, NodeId};
use crate::Kind;

/// Hop distance at or below which two nodes count as connected.
pub const CONNECT_HOPS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityFeatures {
    pub initial_rank: u32,
    pub connection_count: f64,
    pub hop_count: f64,
}

/// Features laid out like the input: `features[list][candidate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOutput {
    pub features: Vec<Vec<DensityFeatures>>,
    /// Unordered cross-list candidate pairs evaluated.
    pub pair_evaluations: u64,
}

/// 1 iff the two nodes are at most two hops apart.
pub fn d_connect(oracle: &HopOracle, a: &str, b: &str) -> Result<u8> {
    let hops = oracle.hop_distance(a, b)?;
    Ok(u8::from(hops.value().is_some_and(|h| h <= CONNECT_HOPS)))
}

/// Candidates unknown to the graph are treated as disconnected from
/// everything.
pub fn compute_features(lists: &[CandidateList], oracle: &HopOracle) -> Result<DensityOutput> {
    let n = lists.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "connection density needs at least two keyword lists, got {n}"
        )));
    }
    let graph = oracle.graph();
    let nodes: Vec<Vec<Option<NodeId>>> = lists
        .iter()
        .map(|l| l.candidates.iter().map(|c| graph.node(c.kind, &c.uri)).collect())
        .collect();
    let disconnected = u64::from(oracle.cap()) + 1;

    let mut conn: Vec<Vec<u64>> = lists.iter().map(|l| vec![0; l.len()]).collect();
    let mut hops: Vec<Vec<u64>> = conn.clone();
    let mut pair_evaluations = 0u64;
    for a in 0..n {
        // Every later list's nodes, answered by one search per candidate.
        let later: Vec<NodeId> = nodes[a + 1..].iter().flatten().flatten().copied().collect();
        for (i, &u) in nodes[a].iter().enumerate() {
            let found = match u {
                Some(u) => oracle.hops_from(u, &later),
                None => Vec::new(),
            };
            let mut found = found.into_iter();
            for (b, list) in nodes.iter().enumerate().skip(a + 1) {
                for (j, &v) in list.iter().enumerate() {
                    pair_evaluations += 1;
                    let h = match (u, v) {
                        (Some(_), Some(_)) => found.next().expect("one answer per known node").value(),
                        _ => None,
                    };
                    if h.is_some_and(|h| h <= CONNECT_HOPS) {
                        conn[a][i] += 1;
                        conn[b][j] += 1;
                    }
                    let h = h.map_or(disconnected, u64::from);
                    hops[a][i] += h;
                    hops[b][j] += h;
                }
            }
        }
    }

    let denom = n as f64;
    let features = lists
        .iter()
        .enumerate()
        .map(|(a, l)| {
            l.candidates
                .iter()
                .enumerate()
                .map(|(i, c)| DensityFeatures {
                    initial_rank: c.initial_rank,
                    connection_count: conn[a][i] as f64 / denom,
                    hop_count: hops[a][i] as f64 / denom,
                })
                .collect()
        })
        .collect();
    Ok(DensityOutput {
        features,
        pair_evaluations,
    })
}

/// One line of the training feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub question_id: String,
    pub keyword: String,
    pub uri: String,
    pub kind: Kind,
    pub features: DensityFeatures,
    pub gold: bool,
}

const DUMP_HEADER: &str = "# question_id\tkeyword\turi\tR_i\tC\tH\tgold";

pub fn write_feature_dump(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{DUMP_HEADER}").expect("writing to a vector");
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.question_id,
            r.keyword,
            r.uri,
            r.features.initial_rank,
            r.features.connection_count,
            r.features.hop_count,
            u8::from(r.gold)
        )
        .expect("writing to a vector");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Inverse of [`write_feature_dump`]. The kind is not part of the format
/// and comes back as [`Kind::Entity`].
pub fn read_feature_dump(path: &Path) -> Result<Vec<FeatureRecord>> {
    let text = crate::read_to_string(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (line_no, line) in crate::data_lines(&text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(Error::parse(&name, line_no, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(&name, line_no, format!("bad {what} `{s}`")))
        };
        let rank: u32 = f[3]
            .parse()
            .map_err(|_| Error::parse(&name, line_no, format!("bad rank `{}`", f[3])))?;
        let gold = match f[6] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(&name, line_no, format!("gold must be 0 or 1, got `{other}`"))),
        };
        out.push(FeatureRecord {
            question_id: f[0].to_string(),
            keyword: f[1].to_string(),
            uri: f[2].to_string(),
            kind: Kind::Entity,
            features: DensityFeatures {
                initial_rank: rank,
                connection_count: num(f[4], "C")?,
                hop_count: num(f[5], "H")?,
            },
            gold,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::index::Candidate;
    use crate::kg::{KnowledgeGraph, SubdivisionGraph};

    fn oracle(triples: &[(&str, &str, &str)]) -> HopOracle {
        let kg = KnowledgeGraph::from_triples(triples.iter().copied()).unwrap();
        HopOracle::new(Arc::new(SubdivisionGraph::build(&kg)), 4).unwrap()
    }

    fn list(keyword: &str, items: &[(&str, Kind)]) -> CandidateList {
        CandidateList {
            keyword: keyword.into(),
            kind_queried: items.first().map_or(Kind::Entity, |i| i.1),
            candidates: items
                .iter()
                .enumerate()
                .map(|(i, (u, k))| Candidate {
                    uri: u.to_string(),
                    matched_label: u.to_string(),
                    text_score: 1.0,
                    initial_rank: i as u32 + 1,
                    kind: *k,
                })
                .collect(),
        }
    }

    #[test]
    fn d_connect_thresholds() {
        let o = oracle(&[("a", "p", "b"), ("b", "q", "c")]);
        assert_eq!(d_connect(&o, "a", "p").unwrap(), 1);
        assert_eq!(d_connect(&o, "a", "b").unwrap(), 1);
        assert_eq!(d_connect(&o, "a", "c").unwrap(), 0);
        assert_eq!(d_connect(&o, "a", "a").unwrap(), 1);
        assert!(d_connect(&o, "a", "zz").is_err());
    }

    #[test]
    fn two_lists_at_two_hops() {
        let o = oracle(&[("a", "p", "b")]);
        let lists = [list("x", &[("a", Kind::Entity)]), list("y", &[("b", Kind::Entity)])];
        let out = compute_features(&lists, &o).unwrap();
        assert_eq!(out.features[0][0].connection_count, 0.5);
        assert_eq!(out.features[0][0].hop_count, 1.0);
        assert_eq!(out.features[1][0], out.features[0][0]);
        assert_eq!(out.pair_evaluations, 1);
    }

    #[test]
    fn isolated_candidate_has_no_connections() {
        let o = oracle(&[("a", "p", "b"), ("z", "q", "w")]);
        let lists = [
            list("x", &[("a", Kind::Entity), ("z", Kind::Entity)]),
            list("y", &[("b", Kind::Entity)]),
        ];
        let out = compute_features(&lists, &o).unwrap();
        assert_eq!(out.features[0][1].connection_count, 0.0);
        assert_eq!(out.features[0][1].hop_count, 5.0 / 2.0);
    }

    #[test]
    fn band_beats_chess_piece() {
        let o = oracle(&[
            ("Queen_band", "dbo:bandMember", "Freddie_Mercury"),
            ("Bohemian_Rhapsody", "dbo:artist", "Queen_band"),
            ("Queen_chess", "dbo:piece", "Chess"),
        ]);
        let lists = [
            list("queen", &[("Queen_chess", Kind::Entity), ("Queen_band", Kind::Entity)]),
            list("member", &[("dbo:bandMember", Kind::Relation)]),
            list("song", &[("Bohemian_Rhapsody", Kind::Entity)]),
        ];
        let out = compute_features(&lists, &o).unwrap();
        let (chess, band) = (out.features[0][0], out.features[0][1]);
        assert!(band.connection_count > chess.connection_count);
        assert_eq!(chess.connection_count, 0.0);
        assert_eq!(band.connection_count, 2.0 / 3.0);
    }

    #[test]
    fn shared_uri_across_lists_is_connected() {
        let o = oracle(&[("a", "p", "b")]);
        let lists = [list("x", &[("a", Kind::Entity)]), list("y", &[("a", Kind::Entity)])];
        let out = compute_features(&lists, &o).unwrap();
        assert_eq!(out.features[0][0].connection_count, 0.5);
        assert_eq!(out.features[0][0].hop_count, 0.0);
    }

    #[test]
    fn single_list_is_an_error() {
        let o = oracle(&[("a", "p", "b")]);
        assert!(compute_features(&[list("x", &[("a", Kind::Entity)])], &o).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let rec = FeatureRecord {
            question_id: "q1".into(),
            keyword: "Tesla".into(),
            uri: "dbr:Tesla_Motors".into(),
            kind: Kind::Entity,
            features: DensityFeatures { initial_rank: 2, connection_count: 0.75, hop_count: 3.25 },
            gold: true,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.tsv");
        write_feature_dump(&path, std::slice::from_ref(&rec)).unwrap();
        assert_eq!(read_feature_dump(&path).unwrap(), vec![rec]);
    }
}

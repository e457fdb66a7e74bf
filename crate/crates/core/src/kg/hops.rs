use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{NodeId, SubdivisionGraph};
use crate::error::{Error, Result};

/// Hop distances beyond this many subdivision edges are reported as
/// [`Hops::Disconnected`].
pub const DEFAULT_HOP_CAP: u32 = 4;

/// Outcome of a bounded shortest-path query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hops {
    Within(u32),
    Disconnected,
}

impl Hops {
    pub fn value(self) -> Option<u32> {
        match self {
            Hops::Within(d) => Some(d),
            Hops::Disconnected => None,
        }
    }

    /// Distance with disconnection mapped to `cap + 1`.
    pub fn capped(self, cap: u32) -> u32 {
        self.value().unwrap_or(cap + 1)
    }
}

/// Bounded hop-distance oracle over a shared subdivision graph.
///
/// Queries run a bidirectional breadth-first search limited to `cap` edges
/// and are memoised. The memo is a single map behind a lock, so answers do
/// not depend on how concurrent queries interleave.
#[derive(Debug)]
pub struct HopOracle {
    graph: Arc<SubdivisionGraph>,
    cap: u32,
    memo: RwLock<HashMap<(NodeId, NodeId), Hops>>,
    searches: AtomicU64,
}

impl HopOracle {
    pub fn new(graph: Arc<SubdivisionGraph>, cap: u32) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Config("hop cap must be positive".into()));
        }
        Ok(HopOracle {
            graph,
            cap,
            memo: RwLock::new(HashMap::new()),
            searches: AtomicU64::new(0),
        })
    }

    pub fn graph(&self) -> &SubdivisionGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<SubdivisionGraph> {
        Arc::clone(&self.graph)
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Number of searches actually run, i.e. memo misses.
    pub fn searches_run(&self) -> u64 {
        self.searches.load(Ordering::Relaxed)
    }

    pub fn clear_cache(&self) {
        self.memo.write().expect("hop memo poisoned").clear();
    }

    /// Distance between two identifiers, resolved with
    /// [`SubdivisionGraph::lookup`].
    pub fn hop_distance(&self, a: &str, b: &str) -> Result<Hops> {
        let na = self.graph.lookup(a).ok_or_else(|| Error::NodeNotFound(a.to_string()))?;
        let nb = self.graph.lookup(b).ok_or_else(|| Error::NodeNotFound(b.to_string()))?;
        Ok(self.hops(na, nb))
    }

    /// Checked variant of [`HopOracle::hops`] for ids of unknown origin.
    pub fn try_hops(&self, a: NodeId, b: NodeId) -> Result<Hops> {
        for n in [a, b] {
            if !self.graph.contains(n) {
                return Err(Error::NodeNotFound(format!("#{n}")));
            }
        }
        Ok(self.hops(a, b))
    }

    /// Distance between two node ids of this graph.
    pub fn hops(&self, a: NodeId, b: NodeId) -> Hops {
        if a == b {
            return Hops::Within(0);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&h) = self.memo.read().expect("hop memo poisoned").get(&key) {
            return h;
        }
        self.searches.fetch_add(1, Ordering::Relaxed);
        let h = bidirectional_bfs(&self.graph, key.0, key.1, self.cap);
        self.memo.write().expect("hop memo poisoned").insert(key, h);
        h
    }

    /// Distances from `a` to each of `targets`, in order. Memo misses are
    /// answered by one search from `a`, which is cheaper than a pairwise
    /// search each when the graph has high-degree hubs.
    pub fn hops_from(&self, a: NodeId, targets: &[NodeId]) -> Vec<Hops> {
        let key = |b: NodeId| if a < b { (a, b) } else { (b, a) };
        let mut out: Vec<Option<Hops>> = {
            let memo = self.memo.read().expect("hop memo poisoned");
            targets.iter().map(|&b| if a == b { Some(Hops::Within(0)) } else { memo.get(&key(b)).copied() }).collect()
        };
        let missing: Vec<NodeId> = targets.iter().zip(&out).filter(|(_, h)| h.is_none()).map(|(&b, _)| b).collect();
        if !missing.is_empty() {
            self.searches.fetch_add(1, Ordering::Relaxed);
            let found = bounded_bfs(&self.graph, a, &missing, self.cap);
            let mut memo = self.memo.write().expect("hop memo poisoned");
            let found: HashMap<NodeId, Hops> = missing.into_iter().zip(found).collect();
            for (h, b) in out.iter_mut().zip(targets) {
                if h.is_none() {
                    let f = found[b];
                    memo.insert(key(*b), f);
                    *h = Some(f);
                }
            }
        }
        out.into_iter().map(|h| h.expect("filled above")).collect()
    }
}

/// Single-source breadth-first search to depth `cap`, stopping early once
/// every target has been reached.
fn bounded_bfs(g: &SubdivisionGraph, a: NodeId, targets: &[NodeId], cap: u32) -> Vec<Hops> {
    let mut dist = vec![u32::MAX; g.node_count()];
    dist[a as usize] = 0;
    let mut pending = targets.iter().filter(|&&t| t != a).count();
    let mut frontier = vec![a];
    let mut depth = 0;
    while depth < cap && pending > 0 && !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = depth;
                    next.push(v);
                }
            }
        }
        pending = targets.iter().filter(|&&t| dist[t as usize] == u32::MAX).count();
        frontier = next;
    }
    targets
        .iter()
        .map(|&t| match dist[t as usize] {
            u32::MAX => Hops::Disconnected,
            d => Hops::Within(d),
        })
        .collect()
}

/// Expands whole levels, always from the side with the smaller frontier.
/// When a level first touches the other side's visited set, the minimum
/// over that level is the shortest distance.
fn bidirectional_bfs(g: &SubdivisionGraph, a: NodeId, b: NodeId, cap: u32) -> Hops {
    let mut dist = [HashMap::from([(a, 0u32)]), HashMap::from([(b, 0u32)])];
    let mut frontier = [vec![a], vec![b]];
    let mut depth = [0u32, 0u32];

    while depth[0] + depth[1] < cap {
        if frontier[0].is_empty() || frontier[1].is_empty() {
            return Hops::Disconnected;
        }
        let side = if frontier[0].len() <= frontier[1].len() { 0 } else { 1 };
        let other = 1 - side;
        let mut next = Vec::new();
        let mut best: Option<u32> = None;
        for &u in &frontier[side] {
            for &v in g.neighbors(u) {
                if let Some(&dv) = dist[other].get(&v) {
                    let total = depth[side] + 1 + dv;
                    best = Some(best.map_or(total, |b| b.min(total)));
                }
                if !dist[side].contains_key(&v) {
                    dist[side].insert(v, depth[side] + 1);
                    next.push(v);
                }
            }
        }
        depth[side] += 1;
        frontier[side] = next;
        if let Some(d) = best {
            return if d <= cap { Hops::Within(d) } else { Hops::Disconnected };
        }
    }
    Hops::Disconnected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KnowledgeGraph;
    use crate::Kind;

    fn oracle(triples: &[(&str, &str, &str)], cap: u32) -> HopOracle {
        let kg = KnowledgeGraph::from_triples(triples.iter().copied()).unwrap();
        HopOracle::new(Arc::new(SubdivisionGraph::build(&kg)), cap).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let o = oracle(&[("A", "p", "B")], 4);
        assert_eq!(o.hop_distance("A", "A").unwrap(), Hops::Within(0));
    }

    #[test]
    fn single_triple_distances() {
        let o = oracle(&[("A", "p", "B")], 4);
        assert_eq!(o.hop_distance("A", "B").unwrap(), Hops::Within(2));
        assert_eq!(o.hop_distance("A", "p").unwrap(), Hops::Within(1));
    }

    #[test]
    fn chain_respects_cap() {
        let chain = [("A", "p", "B"), ("B", "q", "C")];
        assert_eq!(oracle(&chain, 4).hop_distance("A", "C").unwrap(), Hops::Within(4));
        assert_eq!(oracle(&chain, 3).hop_distance("A", "C").unwrap(), Hops::Disconnected);
    }

    #[test]
    fn unknown_node_is_an_error_not_disconnection() {
        let o = oracle(&[("A", "p", "B")], 4);
        assert!(matches!(o.hop_distance("A", "Z"), Err(Error::NodeNotFound(_))));
        assert!(o.try_hops(0, 999).is_err());
    }

    #[test]
    fn separate_components_are_disconnected() {
        let o = oracle(&[("A", "p", "B"), ("C", "q", "D")], 10);
        assert_eq!(o.hop_distance("A", "D").unwrap(), Hops::Disconnected);
    }

    #[test]
    fn relation_to_relation_through_shared_entity() {
        let o = oracle(&[("A", "p", "B"), ("B", "q", "C")], 4);
        let g = o.graph();
        let p = g.node(Kind::Relation, "p").unwrap();
        let q = g.node(Kind::Relation, "q").unwrap();
        assert_eq!(o.hops(p, q), Hops::Within(2));
    }

    #[test]
    fn memo_is_transparent() {
        let o = oracle(&[("A", "p", "B"), ("B", "q", "C"), ("C", "r", "D")], 4);
        let cold = o.hop_distance("A", "C").unwrap();
        let runs = o.searches_run();
        let warm = o.hop_distance("C", "A").unwrap();
        assert_eq!(cold, warm);
        assert_eq!(o.searches_run(), runs);
    }

    #[test]
    fn batched_matches_pairwise() {
        let chain = [("A", "p", "B"), ("B", "q", "C"), ("C", "r", "D"), ("E", "s", "F")];
        let batched = oracle(&chain, 4);
        let pairwise = oracle(&chain, 4);
        let g = batched.graph();
        let all: Vec<NodeId> = (0..g.node_count() as NodeId).collect();
        for &a in &all {
            let want: Vec<Hops> = all.iter().map(|&b| pairwise.hops(a, b)).collect();
            assert_eq!(batched.hops_from(a, &all), want);
        }
    }

    #[test]
    fn capped_maps_disconnected_past_cap() {
        assert_eq!(Hops::Disconnected.capped(4), 5);
        assert_eq!(Hops::Within(3).capped(4), 3);
    }
}

//! Disambiguation as a generalised travelling salesman problem.
//!
//! Every keyword contributes a cluster made of its candidates. The cost of
//! an edge is the hop distance between the two candidates in the
//! subdivision graph plus their weighted initial ranks. A solution picks one
//! candidate per cluster and visits them along a path of minimal total cost.

mod approx;
mod exact;
mod lk;
mod noon_bean;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::CandidateList;
use crate::kg::{HopOracle, NodeId};
use crate::Kind;

pub use approx::{solve_approx, ApproxConfig};
pub use exact::{search_space, solve_exact, solve_exact_cycle, DEFAULT_EXACT_BUDGET};
pub use lk::{solve_lk, LkConfig, LkOutcome};
pub use noon_bean::{noon_bean, AtspInstance, DecodedTour, NoonBean};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtspNode {
    pub uri: String,
    pub kind: Kind,
    pub rank: u32,
    pub cluster: usize,
}

/// Clusters of candidate nodes with a dense symmetric cost matrix.
///
/// Nodes are indexed per cluster membership, so a URI that is a candidate
/// for two keywords appears as two nodes (one per cluster) with copied
/// costs. Clusters are therefore always disjoint in index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtspInstance {
    pub keywords: Vec<String>,
    pub nodes: Vec<GtspNode>,
    pub clusters: Vec<Vec<usize>>,
    pub cost: Vec<Vec<f64>>,
}

/// A candidate left out of the instance because the graph does not know it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedCandidate {
    pub keyword: String,
    pub uri: String,
}

/// One chosen node per cluster and the order in which they are visited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `chosen[c]` is the node index picked for cluster `c`.
    pub chosen: Vec<usize>,
    /// Cluster indices in visiting order.
    pub order: Vec<usize>,
    pub total_cost: f64,
}

impl GtspInstance {
    /// Validates and wraps explicit clusters and costs.
    pub fn new(keywords: Vec<String>, groups: Vec<Vec<(String, Kind, u32)>>, cost: Vec<Vec<f64>>) -> Result<Self> {
        if keywords.len() != groups.len() {
            return Err(Error::InvalidInput("one keyword per cluster required".into()));
        }
        let mut nodes = Vec::new();
        let mut clusters = Vec::new();
        for (c, group) in groups.into_iter().enumerate() {
            if group.is_empty() {
                return Err(Error::EmptyCluster {
                    keyword: keywords[c].clone(),
                });
            }
            let mut members = Vec::new();
            for (uri, kind, rank) in group {
                members.push(nodes.len());
                nodes.push(GtspNode { uri, kind, rank, cluster: c });
            }
            clusters.push(members);
        }
        let inst = GtspInstance {
            keywords,
            nodes,
            clusters,
            cost,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance with synthetic node names `c{cluster}n{member}`, mainly for
    /// tests and experiments on raw cost matrices.
    pub fn from_costs(cluster_sizes: &[usize], cost: Vec<Vec<f64>>) -> Result<Self> {
        let keywords = (0..cluster_sizes.len()).map(|c| format!("k{c}")).collect();
        let groups = cluster_sizes
            .iter()
            .enumerate()
            .map(|(c, &n)| (0..n).map(|j| (format!("c{c}n{j}"), Kind::Entity, j as u32 + 1)).collect())
            .collect();
        Self::new(keywords, groups, cost)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.cost.len() != n || self.cost.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput(format!("cost matrix must be {n}x{n}")));
        }
        for (c, members) in self.clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::EmptyCluster {
                    keyword: self.keywords.get(c).cloned().unwrap_or_default(),
                });
            }
        }
        for i in 0..n {
            if self.cost[i][i] != 0.0 {
                return Err(Error::InvalidInput(format!("cost({i},{i}) must be 0")));
            }
            for j in 0..n {
                let v = self.cost[i][j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidInput(format!("cost({i},{j}) = {v} is not a non-negative real")));
                }
                if v != self.cost[j][i] {
                    return Err(Error::InvalidInput(format!("cost matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cost(&self, a: usize, b: usize) -> f64 {
        self.cost[a][b]
    }

    /// Sum of consecutive costs along `nodes`, left to right.
    pub fn path_cost(&self, nodes: &[usize]) -> f64 {
        nodes.windows(2).fold(0.0, |acc, w| acc + self.cost[w[0]][w[1]])
    }

    /// Path cost plus the closing edge back to the first node.
    pub fn cycle_cost(&self, nodes: &[usize]) -> f64 {
        match (nodes.first(), nodes.last()) {
            (Some(&first), Some(&last)) if nodes.len() > 1 => self.path_cost(nodes) + self.cost[last][first],
            _ => 0.0,
        }
    }

    pub fn chosen_uris(&self, a: &Assignment) -> Vec<&str> {
        a.chosen.iter().map(|&n| self.nodes[n].uri.as_str()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let inst: GtspInstance = serde_json::from_str(&crate::read_to_string(path)?)?;
        inst.validate()?;
        Ok(inst)
    }
}

impl Assignment {
    /// Chosen nodes in visiting order.
    pub fn route(&self) -> Vec<usize> {
        self.order.iter().map(|&c| self.chosen[c]).collect()
    }

    /// Checks one node per cluster, a complete order, and that
    /// `total_cost` equals the path cost recomputed from the matrix.
    pub fn validate(&self, inst: &GtspInstance) -> Result<()> {
        let c = inst.cluster_count();
        if self.chosen.len() != c {
            return Err(Error::InvalidInput("assignment must choose one node per cluster".into()));
        }
        for (cluster, &node) in self.chosen.iter().enumerate() {
            if !inst.clusters[cluster].contains(&node) {
                return Err(Error::InvalidInput(format!("node {node} is not in cluster {cluster}")));
            }
        }
        let mut seen = vec![false; c];
        for &cl in &self.order {
            if cl >= c || std::mem::replace(&mut seen[cl], true) {
                return Err(Error::InvalidInput("order must be a permutation of the clusters".into()));
            }
        }
        if self.order.len() != c {
            return Err(Error::InvalidInput("order must visit every cluster".into()));
        }
        let recomputed = inst.path_cost(&self.route());
        if recomputed != self.total_cost {
            return Err(Error::InvalidInput(format!(
                "reported cost {} differs from recomputed {recomputed}",
                self.total_cost
            )));
        }
        Ok(())
    }
}

/// Penalty used in place of a hop count for disconnected pairs: it exceeds
/// the worst connected edge (`cap` hops between two nodes of rank `k_max`).
pub fn disconnected_penalty(cap: u32, k_max: u32) -> f64 {
    f64::from(cap) + 2.0 * f64::from(k_max) + 1.0
}

/// Builds the instance for a question: `cost(u, v) = hops(u, v) +
/// rank_weight * (rank_u + rank_v)`. Candidates unknown to the graph are
/// dropped and reported.
pub fn build_instance(
    lists: &[CandidateList],
    oracle: &HopOracle,
    rank_weight: f64,
) -> Result<(GtspInstance, Vec<DroppedCandidate>)> {
    if lists.len() < 2 {
        return Err(Error::InvalidInput("a GTSP instance needs at least two keyword lists".into()));
    }
    if !(rank_weight >= 0.0 && rank_weight.is_finite()) {
        return Err(Error::Config(format!("rank weight must be non-negative, got {rank_weight}")));
    }
    let graph = oracle.graph();
    let mut dropped = Vec::new();
    let mut resolved: Vec<Vec<(NodeId, String, Kind, u32)>> = Vec::new();
    for list in lists {
        let mut members = Vec::new();
        for c in &list.candidates {
            match graph.node(c.kind, &c.uri) {
                Some(id) => members.push((id, c.uri.clone(), c.kind, c.initial_rank)),
                None => {
                    log::debug!("dropping candidate `{}` for `{}`: not in the graph", c.uri, list.keyword);
                    dropped.push(DroppedCandidate {
                        keyword: list.keyword.clone(),
                        uri: c.uri.clone(),
                    });
                }
            }
        }
        if members.is_empty() {
            return Err(Error::EmptyCluster {
                keyword: list.keyword.clone(),
            });
        }
        resolved.push(members);
    }

    let k_max = resolved.iter().flatten().map(|m| m.3).max().unwrap_or(1);
    let penalty = disconnected_penalty(oracle.cap(), k_max);
    let flat: Vec<&(NodeId, String, Kind, u32)> = resolved.iter().flatten().collect();
    let n = flat.len();
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        let later: Vec<NodeId> = flat[i + 1..].iter().map(|m| m.0).collect();
        for (j, h) in (i + 1..n).zip(oracle.hops_from(flat[i].0, &later)) {
            let hops = match h.value() {
                Some(h) => f64::from(h),
                None => penalty,
            };
            let v = hops + rank_weight * f64::from(flat[i].3 + flat[j].3);
            cost[i][j] = v;
            cost[j][i] = v;
        }
    }

    let keywords = lists.iter().map(|l| l.keyword.clone()).collect();
    let groups = resolved
        .into_iter()
        .map(|members| members.into_iter().map(|(_, uri, kind, rank)| (uri, kind, rank)).collect())
        .collect();
    Ok((GtspInstance::new(keywords, groups, cost)?, dropped))
}

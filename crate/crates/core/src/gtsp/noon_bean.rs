//! Reduction of a GTSP cycle problem to an asymmetric TSP.
//!
//! Each cluster becomes a zero-cost directed cycle over its members. An
//! arc `a -> b` between clusters costs `cost(succ(a), b) + M`, so a tour
//! that enters a cluster at `x`, walks its cycle and leaves from the
//! predecessor of `x` pays exactly the GTSP edge leaving `x`. Arcs inside a
//! cluster other than the cycle arcs are forbidden.

use serde::{Deserialize, Serialize};

use super::GtspInstance;
use crate::error::{Error, Result};

/// Dense asymmetric cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtspInstance {
    pub cost: Vec<Vec<f64>>,
}

impl AtspInstance {
    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    /// Cost of the closed tour, summed left to right.
    pub fn tour_cost(&self, tour: &[usize]) -> f64 {
        if tour.len() < 2 {
            return 0.0;
        }
        let open = tour.windows(2).fold(0.0, |acc, w| acc + self.cost[w[0]][w[1]]);
        open + self.cost[tour[tour.len() - 1]][tour[0]]
    }
}

/// The transformed instance together with what is needed to decode tours.
#[derive(Debug, Clone, PartialEq)]
pub struct NoonBean {
    pub atsp: AtspInstance,
    pub big_m: f64,
    pub forbidden: f64,
    /// Successor of each node on its cluster's zero-cost cycle.
    pub succ: Vec<usize>,
    pub cluster_of: Vec<usize>,
    pub clusters: Vec<Vec<usize>>,
}

/// A GTSP selection read back from an ATSP tour.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTour {
    /// Clusters in the cyclic order the tour visits them.
    pub cluster_order: Vec<usize>,
    /// `chosen[c]` is the GTSP node selected for cluster `c`.
    pub chosen: Vec<usize>,
    /// True iff every cluster was left exactly once, so the decoded cycle
    /// costs exactly `tour cost - clusters * M`.
    pub well_formed: bool,
}

pub fn noon_bean(inst: &GtspInstance) -> Result<NoonBean> {
    inst.validate()?;
    if inst.cluster_count() < 2 {
        return Err(Error::Transformation(
            "the reduction needs at least two clusters".into(),
        ));
    }
    let n = inst.node_count();
    let mut succ = vec![0; n];
    let mut cluster_of = vec![0; n];
    for (c, members) in inst.clusters.iter().enumerate() {
        for (i, &node) in members.iter().enumerate() {
            succ[node] = members[(i + 1) % members.len()];
            cluster_of[node] = c;
        }
    }

    let total: f64 = inst.cost.iter().flatten().sum();
    let big_m = total + 1.0;
    let forbidden = big_m * (n as f64 + 1.0);

    let mut cost = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            cost[a][b] = if a == b {
                0.0
            } else if cluster_of[a] != cluster_of[b] {
                inst.cost[succ[a]][b] + big_m
            } else if succ[a] == b {
                0.0
            } else {
                forbidden
            };
        }
    }

    Ok(NoonBean {
        atsp: AtspInstance { cost },
        big_m,
        forbidden,
        succ,
        cluster_of,
        clusters: inst.clusters.clone(),
    })
}

impl NoonBean {
    /// Reads the selection off the inter-cluster arcs. A cluster left more
    /// than once keeps its first exit and marks the tour malformed.
    pub fn decode(&self, tour: &[usize]) -> DecodedTour {
        let c = self.clusters.len();
        let mut chosen: Vec<Option<usize>> = vec![None; c];
        let mut cluster_order = Vec::with_capacity(c);
        let mut exits = vec![0usize; c];
        for i in 0..tour.len() {
            let a = tour[i];
            let b = tour[(i + 1) % tour.len()];
            let ca = self.cluster_of[a];
            if ca != self.cluster_of[b] {
                exits[ca] += 1;
                if chosen[ca].is_none() {
                    chosen[ca] = Some(self.succ[a]);
                    cluster_order.push(ca);
                }
            }
        }
        let mut well_formed = exits.iter().all(|&e| e == 1);
        let chosen = chosen
            .into_iter()
            .enumerate()
            .map(|(cl, ch)| {
                ch.unwrap_or_else(|| {
                    well_formed = false;
                    self.clusters[cl][0]
                })
            })
            .collect::<Vec<_>>();
        for cl in 0..c {
            if !cluster_order.contains(&cl) {
                cluster_order.push(cl);
            }
        }
        DecodedTour {
            cluster_order,
            chosen,
            well_formed,
        }
    }

    /// The ATSP tour that enters each cluster in `order` at its chosen node.
    pub fn encode(&self, order: &[usize], chosen: &[usize]) -> Vec<usize> {
        let mut tour = Vec::with_capacity(self.succ.len());
        for &c in order {
            let start = chosen[c];
            let mut node = start;
            loop {
                tour.push(node);
                node = self.succ[node];
                if node == start {
                    break;
                }
            }
        }
        tour
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                m[i][j] = f(i, j);
                m[j][i] = m[i][j];
            }
        }
        m
    }

    #[test]
    fn two_single_node_clusters() {
        let inst = GtspInstance::from_costs(&[1, 1], sym(2, |_, _| 3.0)).unwrap();
        let nb = noon_bean(&inst).unwrap();
        assert_eq!(nb.atsp.len(), 2);
        assert_eq!(nb.big_m, 7.0);
        let d = nb.decode(&[0, 1]);
        assert!(d.well_formed);
        assert_eq!(d.chosen, vec![0, 1]);
        assert_eq!(nb.atsp.tour_cost(&[0, 1]) - 2.0 * nb.big_m, 6.0);
    }

    #[test]
    fn encode_decode_round_trip_and_cost_identity() {
        let inst = GtspInstance::from_costs(&[2, 3, 2], sym(7, |i, j| ((i * 3 + j * 5) % 7) as f64)).unwrap();
        let nb = noon_bean(&inst).unwrap();
        let order = [0, 2, 1];
        let chosen = [1, 4, 5];
        let tour = nb.encode(&order, &chosen);
        assert_eq!(tour.len(), 7);
        let d = nb.decode(&tour);
        assert!(d.well_formed);
        assert_eq!(d.chosen, chosen.to_vec());
        assert_eq!(d.cluster_order, order.to_vec());
        let route: Vec<usize> = order.iter().map(|&c| chosen[c]).collect();
        assert_eq!(nb.atsp.tour_cost(&tour) - 3.0 * nb.big_m, inst.cycle_cost(&route));
    }

    #[test]
    fn intra_cluster_shortcuts_are_forbidden() {
        let inst = GtspInstance::from_costs(&[3, 1], sym(4, |_, _| 1.0)).unwrap();
        let nb = noon_bean(&inst).unwrap();
        assert_eq!(nb.atsp.cost[0][1], 0.0);
        assert_eq!(nb.atsp.cost[0][2], nb.forbidden);
        assert_eq!(nb.atsp.cost[2][0], 0.0);
        // leaving from node 2 charges the edge from its successor, node 0.
        assert_eq!(nb.atsp.cost[2][3], inst.cost(0, 3) + nb.big_m);
    }

    #[test]
    fn single_cluster_is_rejected() {
        let inst = GtspInstance::from_costs(&[2], sym(2, |_, _| 1.0)).unwrap();
        assert!(matches!(noon_bean(&inst), Err(Error::Transformation(_))));
    }

    #[test]
    fn split_cluster_is_malformed() {
        let inst = GtspInstance::from_costs(&[2, 2], sym(4, |_, _| 1.0)).unwrap();
        let nb = noon_bean(&inst).unwrap();
        assert!(!nb.decode(&[0, 2, 1, 3]).well_formed);
    }
}

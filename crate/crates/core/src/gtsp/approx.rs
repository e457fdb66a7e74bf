//! Approximate solver: Noon-Bean reduction, local search, decoding.
//!
//! A zero-cost anchor cluster is added before the reduction so that the
//! optimal cycle of the augmented instance is the optimal path of the
//! original one. After decoding, the cluster order is cut at the anchor and
//! the node choice is re-optimised for that fixed order.

use serde::{Deserialize, Serialize};

use super::lk::{solve_lk, LkConfig};
use super::noon_bean::noon_bean;
use super::{Assignment, GtspInstance, GtspNode};
use crate::error::{Error, Result};
use crate::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub lk: LkConfig,
}

impl ApproxConfig {
    pub fn with_seed(seed: u64) -> Self {
        ApproxConfig {
            lk: LkConfig {
                seed,
                ..LkConfig::default()
            },
        }
    }
}

pub fn solve_approx(inst: &GtspInstance, cfg: &ApproxConfig) -> Result<Assignment> {
    inst.validate()?;
    if inst.cluster_count() < 2 {
        return Err(Error::InvalidInput("approximate solving needs at least two clusters".into()));
    }
    let anchored = with_anchor(inst);
    let anchor = inst.cluster_count();
    let nb = noon_bean(&anchored)?;
    let outcome = solve_lk(&nb.atsp, &cfg.lk);
    let decoded = nb.decode(&outcome.tour);

    let cut = decoded
        .cluster_order
        .iter()
        .position(|&c| c == anchor)
        .expect("the anchor cluster is always visited");
    let order: Vec<usize> = decoded.cluster_order[cut + 1..]
        .iter()
        .chain(&decoded.cluster_order[..cut])
        .copied()
        .collect();

    let chosen = best_nodes_for_order(inst, &order);
    let route: Vec<usize> = order.iter().map(|&c| chosen[c]).collect();
    Ok(Assignment {
        total_cost: inst.path_cost(&route),
        chosen,
        order,
    })
}

fn with_anchor(inst: &GtspInstance) -> GtspInstance {
    let n = inst.node_count();
    let mut cost: Vec<Vec<f64>> = inst
        .cost
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.push(0.0);
            r
        })
        .collect();
    cost.push(vec![0.0; n + 1]);
    let mut nodes = inst.nodes.clone();
    nodes.push(GtspNode {
        uri: String::new(),
        kind: Kind::Entity,
        rank: 1,
        cluster: inst.cluster_count(),
    });
    let mut clusters = inst.clusters.clone();
    clusters.push(vec![n]);
    let mut keywords = inst.keywords.clone();
    keywords.push(String::new());
    GtspInstance {
        keywords,
        nodes,
        clusters,
        cost,
    }
}

/// Layered shortest path through the clusters in `order`; ties keep the
/// member with the smaller URI.
fn best_nodes_for_order(inst: &GtspInstance, order: &[usize]) -> Vec<usize> {
    let sorted = |c: usize| {
        let mut m = inst.clusters[c].clone();
        m.sort_by(|&a, &b| inst.nodes[a].uri.cmp(&inst.nodes[b].uri).then(a.cmp(&b)));
        m
    };
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    let mut dist: Vec<f64> = Vec::new();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    for (step, &c) in order.iter().enumerate() {
        let layer = sorted(c);
        if step == 0 {
            dist = vec![0.0; layer.len()];
            back.push(vec![0; layer.len()]);
        } else {
            let prev = &layers[step - 1];
            let mut next = Vec::with_capacity(layer.len());
            let mut from = Vec::with_capacity(layer.len());
            for &v in &layer {
                let (arg, d) = prev
                    .iter()
                    .zip(&dist)
                    .enumerate()
                    .map(|(i, (&u, &d))| (i, d + inst.cost[u][v]))
                    .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                next.push(d);
                from.push(arg);
            }
            dist = next;
            back.push(from);
        }
        layers.push(layer);
    }

    let mut idx = dist
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &d)| if d < best.1 { (i, d) } else { best })
        .0;
    let mut chosen = vec![0; inst.cluster_count()];
    for step in (0..order.len()).rev() {
        chosen[order[step]] = layers[step][idx];
        idx = back[step][idx];
    }
    chosen
}

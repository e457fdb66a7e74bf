//! Exact solver over every selection and every cluster ordering.
//!
//! For each ordering the best selection is found with a layered shortest
//! path, which covers the same search space as enumerating every selection.
//! Ties between optimal selections go to the lexicographically smallest
//! URI sequence (in cluster order), found by fixing clusters one at a time.

use super::{Assignment, GtspInstance};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Path,
    Cycle,
}

/// `Π |cluster| · (#clusters)!`, the number of (selection, ordering) pairs.
pub fn search_space(inst: &GtspInstance) -> u128 {
    let selections = inst
        .clusters
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128));
    let orders = (1..=inst.cluster_count() as u128).try_fold(1u128, |acc, k| acc.checked_mul(k));
    match (selections, orders) {
        (Some(s), Some(o)) => s.saturating_mul(o),
        _ => u128::MAX,
    }
}

/// Globally minimal path over all selections and orderings.
pub fn solve_exact(inst: &GtspInstance, budget: u128) -> Result<Assignment> {
    solve(inst, budget, Route::Path)
}

/// Like [`solve_exact`] but closes the route into a cycle; `total_cost`
/// then includes the closing edge. Used to cross-check the Noon-Bean
/// reduction, which works on cycles.
pub fn solve_exact_cycle(inst: &GtspInstance, budget: u128) -> Result<Assignment> {
    solve(inst, budget, Route::Cycle)
}

fn solve(inst: &GtspInstance, budget: u128, route: Route) -> Result<Assignment> {
    inst.validate()?;
    let paths = search_space(inst);
    if paths > budget {
        return Err(Error::TooLarge { paths, budget });
    }
    let orders = orderings(inst.cluster_count(), route);
    let mut allowed: Vec<Vec<usize>> = inst.clusters.clone();
    let optimum = best_over_orders(inst, &allowed, &orders, route).0;

    for c in 0..inst.cluster_count() {
        let mut members = inst.clusters[c].clone();
        members.sort_by(|&a, &b| inst.nodes[a].uri.cmp(&inst.nodes[b].uri).then(a.cmp(&b)));
        let keep = members
            .into_iter()
            .find(|&node| {
                allowed[c] = vec![node];
                best_over_orders(inst, &allowed, &orders, route).0 <= optimum
            })
            .expect("some member of every cluster lies on an optimal route");
        allowed[c] = vec![keep];
    }

    let chosen: Vec<usize> = allowed.iter().map(|a| a[0]).collect();
    let (_, best_order) = best_over_orders(inst, &allowed, &orders, route);
    let nodes: Vec<usize> = best_order.iter().map(|&c| chosen[c]).collect();
    let total_cost = match route {
        Route::Path => inst.path_cost(&nodes),
        Route::Cycle => inst.cycle_cost(&nodes),
    };
    Ok(Assignment {
        chosen,
        order: best_order,
        total_cost,
    })
}

/// Orderings worth trying. Paths and their reversals cost the same, so
/// only orders with `first < last` are kept; cycles are fixed to start at
/// cluster 0.
fn orderings(c: usize, route: Route) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    match route {
        Route::Path => {
            permutations(&(0..c).collect::<Vec<_>>(), &mut |p| {
                if p.len() < 2 || p[0] < p[p.len() - 1] {
                    out.push(p.to_vec());
                }
            });
        }
        Route::Cycle => {
            permutations(&(1..c).collect::<Vec<_>>(), &mut |p| {
                let mut order = vec![0];
                order.extend_from_slice(p);
                out.push(order);
            });
        }
    }
    out
}

/// Heap's algorithm would be faster; lexicographic order keeps tie-breaking
/// on the cluster order predictable.
pub(crate) fn permutations(items: &[usize], visit: &mut impl FnMut(&[usize])) {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if rest.is_empty() {
            visit(prefix);
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, visit);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    rec(&mut Vec::with_capacity(items.len()), &mut items.to_vec(), visit);
}

/// Minimum cost over `orders`, and the first order attaining it.
fn best_over_orders(inst: &GtspInstance, allowed: &[Vec<usize>], orders: &[Vec<usize>], route: Route) -> (f64, Vec<usize>) {
    let mut best = f64::INFINITY;
    let mut best_order = Vec::new();
    for order in orders {
        let v = match route {
            Route::Path => layered_path(inst, allowed, order),
            Route::Cycle => layered_cycle(inst, allowed, order),
        };
        if v < best {
            best = v;
            best_order = order.clone();
        }
    }
    (best, best_order)
}

/// Cheapest path visiting the clusters of `order` in sequence.
pub(crate) fn layered_path(inst: &GtspInstance, allowed: &[Vec<usize>], order: &[usize]) -> f64 {
    let first = &allowed[order[0]];
    let mut dist: Vec<f64> = vec![0.0; first.len()];
    let mut prev_layer = first;
    for &c in &order[1..] {
        let layer = &allowed[c];
        dist = layer
            .iter()
            .map(|&v| {
                prev_layer
                    .iter()
                    .zip(&dist)
                    .map(|(&u, &d)| d + inst.cost[u][v])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        prev_layer = layer;
    }
    dist.into_iter().fold(f64::INFINITY, f64::min)
}

fn layered_cycle(inst: &GtspInstance, allowed: &[Vec<usize>], order: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &start in &allowed[order[0]] {
        let mut dist = vec![0.0];
        let mut prev_layer = vec![start];
        for &c in &order[1..] {
            let layer = &allowed[c];
            dist = layer
                .iter()
                .map(|&v| {
                    prev_layer
                        .iter()
                        .zip(&dist)
                        .map(|(&u, &d)| d + inst.cost[u][v])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            prev_layer = layer.clone();
        }
        let closed = prev_layer
            .iter()
            .zip(&dist)
            .map(|(&u, &d)| if order.len() > 1 { d + inst.cost[u][start] } else { d })
            .fold(f64::INFINITY, f64::min);
        best = best.min(closed);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Symmetric matrix from an upper-triangle closure.
    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
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
    fn single_node_clusters() {
        let inst = GtspInstance::from_costs(&[1, 1, 1], matrix(3, |i, j| (i + 2 * j) as f64)).unwrap();
        let a = solve_exact(&inst, DEFAULT_EXACT_BUDGET).unwrap();
        a.validate(&inst).unwrap();
        assert_eq!(a.chosen, vec![0, 1, 2]);
        // costs: (0,1)=2, (0,2)=4, (1,2)=5; cheapest path is 1-0-2 = 6.
        assert_eq!(a.total_cost, 6.0);
    }

    #[test]
    fn three_by_two_hand_built() {
        // nodes: cluster0 {0,1}, cluster1 {2,3}, cluster2 {4,5}.
        // Only 1, 3 and 5 are mutually cheap.
        let cheap = [1, 3, 5];
        let inst = GtspInstance::from_costs(&[2, 2, 2], matrix(6, |i, j| {
            if cheap.contains(&i) && cheap.contains(&j) { 1.0 } else { 7.0 }
        }))
        .unwrap();
        let a = solve_exact(&inst, DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!(a.chosen, vec![1, 3, 5]);
        assert_eq!(a.total_cost, 2.0);
    }

    #[test]
    fn ties_go_to_smallest_uri_sequence() {
        let inst = GtspInstance::from_costs(&[2, 2], matrix(4, |_, _| 3.0)).unwrap();
        let a = solve_exact(&inst, DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!(inst.chosen_uris(&a), vec!["c0n0", "c1n0"]);
    }

    #[test]
    fn budget_exceeded() {
        let inst = GtspInstance::from_costs(&[3, 3, 3], matrix(9, |_, _| 1.0)).unwrap();
        assert_eq!(search_space(&inst), 27 * 6);
        match solve_exact(&inst, 100) {
            Err(Error::TooLarge { paths, budget }) => assert_eq!((paths, budget), (162, 100)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_mode_includes_closing_edge() {
        let inst = GtspInstance::from_costs(&[1, 1, 1], matrix(3, |i, j| (i + 2 * j) as f64)).unwrap();
        let a = solve_exact_cycle(&inst, DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!(a.total_cost, 2.0 + 4.0 + 5.0);
    }

    #[test]
    fn permutation_count() {
        let mut n = 0;
        permutations(&[0, 1, 2, 3], &mut |_| n += 1);
        assert_eq!(n, 24);
        assert_eq!(orderings(4, Route::Path).len(), 12);
        assert_eq!(orderings(4, Route::Cycle).len(), 6);
    }
}

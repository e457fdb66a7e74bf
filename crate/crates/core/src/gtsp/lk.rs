//! Local-search ATSP heuristic in the Lin-Kernighan family: nearest
//! neighbour construction, then Or-opt, 2-opt and segment-exchange 3-opt
//! moves to a local optimum, iterated with double-bridge kicks.
//!
//! Moves keep position 0 of the tour fixed; every cyclic rearrangement is
//! reachable that way up to rotation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noon_bean::AtspInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LkConfig {
    pub seed: u64,
    /// Perturbations tried after each local optimum.
    pub kicks: usize,
    /// Independent nearest-neighbour starts; the first starts at node 0.
    pub starts: usize,
}

impl Default for LkConfig {
    fn default() -> Self {
        LkConfig {
            seed: 0,
            kicks: 40,
            starts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LkOutcome {
    pub tour: Vec<usize>,
    pub cost: f64,
    /// Cost of the first nearest-neighbour tour; `cost` never exceeds it.
    pub construction_cost: f64,
}

pub fn solve_lk(atsp: &AtspInstance, cfg: &LkConfig) -> LkOutcome {
    let n = atsp.len();
    if n < 3 {
        let tour: Vec<usize> = (0..n).collect();
        let cost = atsp.tour_cost(&tour);
        return LkOutcome {
            tour,
            cost,
            construction_cost: cost,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eps = improvement_epsilon(atsp);

    let first = nearest_neighbour(atsp, 0);
    let construction_cost = atsp.tour_cost(&first);
    let mut best = first.clone();
    let mut best_cost = construction_cost;

    for s in 0..cfg.starts.max(1) {
        let mut tour = if s == 0 { first.clone() } else { nearest_neighbour(atsp, rng.gen_range(0..n)) };
        local_search(atsp, &mut tour, eps);
        let mut cost = atsp.tour_cost(&tour);
        for _ in 0..cfg.kicks {
            let mut candidate = tour.clone();
            kick(&mut candidate, &mut rng);
            local_search(atsp, &mut candidate, eps);
            let c = atsp.tour_cost(&candidate);
            if c < cost {
                tour = candidate;
                cost = c;
            }
        }
        if cost < best_cost {
            best = tour;
            best_cost = cost;
        }
    }
    LkOutcome {
        tour: best,
        cost: best_cost,
        construction_cost,
    }
}

/// Deltas smaller than this are rounding noise relative to the largest
/// arc cost.
fn improvement_epsilon(atsp: &AtspInstance) -> f64 {
    let max = atsp.cost.iter().flatten().fold(0.0f64, |m, &v| m.max(v.abs()));
    1e-9 * max.max(1.0)
}

fn nearest_neighbour(atsp: &AtspInstance, start: usize) -> Vec<usize> {
    let n = atsp.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&v| !visited[v])
            .min_by(|&a, &b| atsp.cost[cur][a].total_cmp(&atsp.cost[cur][b]).then(a.cmp(&b)))
            .expect("an unvisited node remains");
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    tour
}

fn local_search(atsp: &AtspInstance, tour: &mut [usize], eps: f64) {
    loop {
        if or_opt(atsp, tour, eps) {
            continue;
        }
        if two_opt(atsp, tour, eps) {
            continue;
        }
        if segment_exchange(atsp, tour, eps, usize::MAX) {
            continue;
        }
        break;
    }
}

/// Swaps adjacent blocks `tour[i..j]` and `tour[j..k]` where `1 <= i < j <
/// k <= n`; `tour[n]` stands for `tour[0]`.
fn exchange_delta(atsp: &AtspInstance, tour: &[usize], i: usize, j: usize, k: usize) -> f64 {
    let n = tour.len();
    let c = &atsp.cost;
    let (a, b) = (tour[i - 1], tour[i]);
    let (d, e) = (tour[j - 1], tour[j]);
    let (f, g) = (tour[k - 1], tour[k % n]);
    (c[a][e] + c[f][b] + c[d][g]) - (c[a][b] + c[d][e] + c[f][g])
}

fn apply_exchange(tour: &mut [usize], i: usize, j: usize, k: usize) {
    tour[i..k].rotate_left(j - i);
}

/// First improving exchange where one block has at most three nodes.
fn or_opt(atsp: &AtspInstance, tour: &mut [usize], eps: f64) -> bool {
    segment_exchange(atsp, tour, eps, 3)
}

fn segment_exchange(atsp: &AtspInstance, tour: &mut [usize], eps: f64, short_block: usize) -> bool {
    let n = tour.len();
    for i in 1..n {
        for j in i + 1..n {
            for k in j + 1..=n {
                if (j - i).min(k - j) > short_block {
                    continue;
                }
                if exchange_delta(atsp, tour, i, j, k) < -eps {
                    apply_exchange(tour, i, j, k);
                    return true;
                }
            }
        }
    }
    false
}

/// First improving reversal of `tour[i..j]`, using prefix sums of forward
/// and backward arc costs for the reversed interior.
fn two_opt(atsp: &AtspInstance, tour: &mut [usize], eps: f64) -> bool {
    let n = tour.len();
    let c = &atsp.cost;
    let mut fwd = vec![0.0; n];
    let mut bwd = vec![0.0; n];
    for t in 1..n {
        fwd[t] = fwd[t - 1] + c[tour[t - 1]][tour[t]];
        bwd[t] = bwd[t - 1] + c[tour[t]][tour[t - 1]];
    }
    for i in 1..n {
        for j in i + 2..=n {
            let (a, b) = (tour[i - 1], tour[i]);
            let (y, z) = (tour[j - 1], tour[j % n]);
            let interior = (bwd[j - 1] - bwd[i]) - (fwd[j - 1] - fwd[i]);
            let delta = c[a][y] + c[b][z] - c[a][b] - c[y][z] + interior;
            if delta < -eps {
                tour[i..j].reverse();
                return true;
            }
        }
    }
    false
}

/// Double bridge on tours long enough for it, a random block swap otherwise.
fn kick(tour: &mut [usize], rng: &mut ChaCha8Rng) {
    let n = tour.len();
    if n >= 8 {
        let mut cuts = [rng.gen_range(1..n), rng.gen_range(1..n), rng.gen_range(1..n)];
        cuts.sort_unstable();
        if cuts[0] < cuts[1] && cuts[1] < cuts[2] {
            // A B C D -> A C B D
            apply_exchange(tour, cuts[0], cuts[1], cuts[2]);
            return;
        }
    }
    let i = rng.gen_range(1..n - 1);
    let j = rng.gen_range(i + 1..n);
    let k = rng.gen_range(j + 1..=n);
    apply_exchange(tour, i, j, k);
}

//! Independent oracles and random inputs shared by the integration tests.
//! Nothing here calls into the library's search or solver code.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use kglink::gtsp::GtspInstance;
use kglink::index::{Candidate, CandidateList};
use kglink::Kind;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random triples over entities `e0..` and predicates `p0..`. The
/// subdivision graph has at most `entities + predicates` nodes.
pub fn random_triples<R: Rng>(rng: &mut R, entities: usize, predicates: usize, triples: usize) -> Vec<(String, String, String)> {
    (0..triples)
        .map(|_| {
            (
                format!("e{}", rng.gen_range(0..entities)),
                format!("p{}", rng.gen_range(0..predicates)),
                format!("e{}", rng.gen_range(0..entities)),
            )
        })
        .collect()
}

/// All-pairs hop distances in the subdivision graph of `triples`: one node
/// per entity and one per predicate, undirected edges subject-predicate and
/// predicate-object. Plain BFS from every node, no cap.
pub struct AllPairs {
    pub names: Vec<String>,
    index: HashMap<String, usize>,
    dist: Vec<Vec<Option<u32>>>,
}

impl AllPairs {
    pub fn new(triples: &[(String, String, String)]) -> Self {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let mut adj: Vec<Vec<usize>> = Vec::new();
        let mut id = |name: &str, names: &mut Vec<String>, adj: &mut Vec<Vec<usize>>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                adj.push(Vec::new());
                names.len() - 1
            })
        };
        for (s, p, o) in triples {
            let (s, p, o) = (id(s, &mut names, &mut adj), id(p, &mut names, &mut adj), id(o, &mut names, &mut adj));
            adj[s].push(p);
            adj[p].push(s);
            adj[p].push(o);
            adj[o].push(p);
        }
        let n = names.len();
        let mut dist = vec![vec![None; n]; n];
        for src in 0..n {
            let mut q = VecDeque::from([src]);
            dist[src][src] = Some(0);
            while let Some(u) = q.pop_front() {
                let d = dist[src][u].unwrap();
                for &v in &adj[u] {
                    if dist[src][v].is_none() {
                        dist[src][v] = Some(d + 1);
                        q.push_back(v);
                    }
                }
            }
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        AllPairs { names, index, dist }
    }

    pub fn distance(&self, a: &str, b: &str) -> Option<u32> {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.dist[i][j],
            _ => None,
        }
    }

    /// Distance if within `cap`, else `cap + 1`; unknown names are
    /// disconnected.
    pub fn capped(&self, a: &str, b: &str, cap: u32) -> u32 {
        self.distance(a, b).filter(|&d| d <= cap).unwrap_or(cap + 1)
    }
}

pub fn kind_of(name: &str) -> Kind {
    if name.starts_with('p') {
        Kind::Relation
    } else {
        Kind::Entity
    }
}

/// `n` lists of `m` candidates drawn from `pool` plus names the graph does
/// not know. URIs may repeat across lists.
pub fn random_lists<R: Rng>(rng: &mut R, pool: &[String], n: usize, m: usize) -> Vec<CandidateList> {
    (0..n)
        .map(|i| {
            let candidates = (0..m)
                .map(|r| {
                    let uri = if rng.gen_bool(0.1) {
                        format!("e_unknown{}", rng.gen_range(0..5))
                    } else {
                        pool.choose(rng).unwrap().clone()
                    };
                    Candidate {
                        kind: kind_of(&uri),
                        matched_label: uri.clone(),
                        uri,
                        text_score: 1.0,
                        initial_rank: r as u32 + 1,
                    }
                })
                .collect();
            CandidateList { keyword: format!("kw{i}"), kind_queried: Kind::Entity, candidates }
        })
        .collect()
}

/// Symmetric integer costs with a zero diagonal.
pub fn random_instance<R: Rng>(rng: &mut R, max_clusters: usize, max_nodes: usize, max_cost: u32) -> GtspInstance {
    let clusters = rng.gen_range(2..=max_clusters);
    let sizes: Vec<usize> = (0..clusters).map(|_| rng.gen_range(1..=max_nodes)).collect();
    let n: usize = sizes.iter().sum();
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = f64::from(rng.gen_range(0..=max_cost));
            cost[i][j] = v;
            cost[j][i] = v;
        }
    }
    GtspInstance::from_costs(&sizes, cost).unwrap()
}

/// Minimum over every cluster order and every choice of one node per
/// cluster. Returns (path optimum, cycle optimum).
pub fn enumerate_optimum(inst: &GtspInstance) -> (f64, f64) {
    let c = inst.clusters.len();
    let mut order: Vec<usize> = (0..c).collect();
    let mut best = (f64::INFINITY, f64::INFINITY);
    permute(&mut order, 0, &mut |ord| {
        let mut pick = vec![0usize; c];
        loop {
            let route: Vec<usize> = ord.iter().map(|&cl| inst.clusters[cl][pick[cl]]).collect();
            let path: f64 = route.windows(2).map(|w| inst.cost[w[0]][w[1]]).sum();
            let cycle = path + inst.cost[route[c - 1]][route[0]];
            best.0 = best.0.min(path);
            best.1 = best.1.min(cycle);
            let mut k = 0;
            while k < c {
                pick[k] += 1;
                if pick[k] < inst.clusters[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == c {
                break;
            }
        }
    });
    best
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Optimal closed-tour cost of an asymmetric matrix by Held-Karp dynamic
/// programming. Costs must be integral.
pub fn held_karp(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n == 1 {
        return 0.0;
    }
    let c: Vec<Vec<i64>> = cost
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| {
                    assert_eq!(x.fract(), 0.0, "held_karp needs integer costs");
                    x as i64
                })
                .collect()
        })
        .collect();
    // Node 0 is the start; subsets are over nodes 1..n.
    let m = n - 1;
    let full = 1usize << m;
    const INF: i64 = i64::MAX / 4;
    let mut dp = vec![INF; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = c[0][j + 1];
    }
    for mask in 1..full {
        for j in 0..m {
            let cur = dp[mask * m + j];
            if cur >= INF || mask & (1 << j) == 0 {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let v = cur + c[j + 1][k + 1];
                if v < dp[next * m + k] {
                    dp[next * m + k] = v;
                }
            }
        }
    }
    (0..m).map(|j| dp[(full - 1) * m + j] + c[j + 1][0]).min().unwrap() as f64
}

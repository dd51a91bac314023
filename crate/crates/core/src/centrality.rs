//! Directed betweenness centrality and HITS hub/authority scores.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ProductNetwork;

/// Directed shortest-path betweenness over ordered node pairs, counting
/// intermediate nodes only. Equal-length path multiplicity is split
/// fractionally (Brandes' dependency accumulation); raw unnormalized counts.
///
/// `weighted = false` uses unit edge lengths; `weighted = true` uses
/// length 1/weight. Self-loops never lie on a simple path and are skipped.
pub fn betweenness(net: &ProductNetwork, weighted: bool) -> Vec<f64> {
    let n = net.node_count();
    if n == 0 {
        return Vec::new();
    }
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for e in &net.edges {
        if e.source != e.target {
            adj[e.source as usize].push((e.target, e.weight));
        }
    }

    // Per-source dependency vectors are computed in parallel and reduced in
    // source order, keeping the floating-point sums schedule-independent.
    let per_source: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            if weighted {
                brandes_dijkstra(&adj, s)
            } else {
                brandes_bfs(&adj, s)
            }
        })
        .collect();
    let mut scores = vec![0.0; n];
    for delta in per_source {
        for (i, d) in delta.into_iter().enumerate() {
            scores[i] += d;
        }
    }
    scores
}

fn brandes_bfs(adj: &[Vec<(u32, f64)>], s: usize) -> Vec<f64> {
    let n = adj.len();
    let mut stack: Vec<u32> = Vec::new();
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    sigma[s] = 1.0;
    dist[s] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(s as u32);
    while let Some(v) = queue.pop_front() {
        stack.push(v);
        for &(w, _) in &adj[v as usize] {
            if dist[w as usize] < 0 {
                dist[w as usize] = dist[v as usize] + 1;
                queue.push_back(w);
            }
            if dist[w as usize] == dist[v as usize] + 1 {
                sigma[w as usize] += sigma[v as usize];
                preds[w as usize].push(v);
            }
        }
    }
    accumulate(&mut stack, &preds, &sigma, s)
}

fn brandes_dijkstra(adj: &[Vec<(u32, f64)>], s: usize) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Entry(f64, u32);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .partial_cmp(&other.0)
                .expect("finite distances")
                .then(self.1.cmp(&other.1))
        }
    }

    let n = adj.len();
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut order: Vec<u32> = Vec::new();
    sigma[s] = 1.0;
    dist[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Entry(0.0, s as u32)));
    while let Some(Reverse(Entry(d, v))) = heap.pop() {
        if done[v as usize] {
            continue;
        }
        done[v as usize] = true;
        order.push(v);
        for &(w, weight) in &adj[v as usize] {
            if weight <= 0.0 {
                continue;
            }
            let cand = d + 1.0 / weight;
            let wi = w as usize;
            if cand < dist[wi] {
                dist[wi] = cand;
                sigma[wi] = sigma[v as usize];
                preds[wi].clear();
                preds[wi].push(v);
                heap.push(Reverse(Entry(cand, w)));
            } else if cand == dist[wi] && !done[wi] {
                sigma[wi] += sigma[v as usize];
                preds[wi].push(v);
            }
        }
    }
    accumulate(&mut order, &preds, &sigma, s)
}

fn accumulate(order: &mut Vec<u32>, preds: &[Vec<u32>], sigma: &[f64], s: usize) -> Vec<f64> {
    let n = preds.len();
    let mut delta = vec![0.0f64; n];
    let mut scores = vec![0.0f64; n];
    while let Some(w) = order.pop() {
        let wi = w as usize;
        for &v in &preds[wi] {
            if sigma[wi] > 0.0 {
                delta[v as usize] += sigma[v as usize] / sigma[wi] * (1.0 + delta[wi]);
            }
        }
        if wi != s {
            scores[wi] += delta[wi];
        }
    }
    scores
}

/// HITS fixed point on the weighted adjacency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HitsScores {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Mutually reinforcing iteration hub ∝ A·authority, authority ∝ Aᵀ·hub on
/// the weighted adjacency (self-loops excluded), unit-sum normalized each
/// step. Converges when the max absolute change drops below `tol`.
pub fn hits(net: &ProductNetwork, tol: f64, max_iter: usize) -> Result<HitsScores> {
    let n = net.node_count();
    let edges: Vec<&crate::network::Edge> = net
        .edges
        .iter()
        .filter(|e| e.source != e.target && e.weight > 0.0)
        .collect();
    if edges.is_empty() {
        return Err(Error::Data(
            "HITS is undefined on a network with no (non-loop) edges".into(),
        ));
    }
    let mut hub = vec![1.0 / n as f64; n];
    let mut authority = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut new_auth = vec![0.0; n];
        for e in &edges {
            new_auth[e.target as usize] += e.weight * hub[e.source as usize];
        }
        normalize_unit_sum(&mut new_auth)?;
        let mut new_hub = vec![0.0; n];
        for e in &edges {
            new_hub[e.source as usize] += e.weight * new_auth[e.target as usize];
        }
        normalize_unit_sum(&mut new_hub)?;
        let change = max_abs_diff(&hub, &new_hub).max(max_abs_diff(&authority, &new_auth));
        hub = new_hub;
        authority = new_auth;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(HitsScores {
        hub,
        authority,
        iterations,
        converged,
    })
}

fn normalize_unit_sum(v: &mut [f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Data("HITS iteration collapsed to zero".into()));
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub const HITS_DEFAULT_TOL: f64 = 1e-12;
pub const HITS_DEFAULT_MAX_ITER: usize = 1000;

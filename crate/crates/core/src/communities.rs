//! Multi-scale community detection by Markov stability on the directed
//! network.
//!
//! A random walker follows out-edges with probability proportional to edge
//! weight; a teleportation mixture makes the chain ergodic on arbitrary
//! directed structure. The stability of a partition at Markov time t sums the
//! blocks of
//!
//! ```text
//! S(t) = sym(Π · exp(t(P − I))) − π πᵀ
//! ```
//!
//! over communities, where P is the (teleported) transition matrix and π its
//! stationary distribution. Small t favors fine partitions (singletons in the
//! limit), large t coarse ones. Optimization is greedy agglomerative
//! (Louvain-style sweeps plus aggregation) restarted over random node orders.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ProductNetwork;

/// Teleportation rate used when none is configured.
pub const DEFAULT_TAU: f64 = 0.15;
/// Residual bound for the stationary distribution.
const STATIONARY_TOL: f64 = 1e-12;

/// Row-stochastic transition matrix and its stationary distribution.
#[derive(Debug, Clone)]
pub struct WalkOperators {
    pub transition: DMatrix<f64>,
    pub stationary: DVector<f64>,
    pub tau: f64,
}

/// Builds the walk operators. Out-weights are normalized row-wise; dangling
/// rows (zero out-weight) become uniform; every other row mixes a uniform
/// jump at rate `tau`. Self-loops are ignored. The stationary distribution is
/// computed by damped power iteration to a 1e-12 residual.
pub fn walk_operators(net: &ProductNetwork, tau: f64) -> Result<WalkOperators> {
    let n = net.node_count();
    if n == 0 {
        return Err(Error::Data("empty network".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("teleportation rate {tau} not in [0,1]")));
    }
    let uniform = 1.0 / n as f64;
    let mut transition = DMatrix::zeros(n, n);
    let mut out_weight = vec![0.0f64; n];
    for e in &net.edges {
        if e.source != e.target {
            out_weight[e.source as usize] += e.weight;
        }
    }
    for e in &net.edges {
        if e.source == e.target {
            continue;
        }
        let i = e.source as usize;
        transition[(i, e.target as usize)] += (1.0 - tau) * e.weight / out_weight[i];
    }
    for i in 0..n {
        if out_weight[i] == 0.0 {
            for j in 0..n {
                transition[(i, j)] = uniform;
            }
        } else {
            for j in 0..n {
                transition[(i, j)] += tau * uniform;
            }
        }
    }

    // Damped iteration on (I + P)/2 shares the stationary distribution and is
    // aperiodic even when P itself is periodic.
    let mut pi = DVector::from_element(n, uniform);
    let mut converged = false;
    for _ in 0..500_000 {
        let next = 0.5 * (&pi + transition.tr_mul(&pi));
        let residual = (transition.tr_mul(&next) - &next).abs().sum();
        pi = next;
        if residual < STATIONARY_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(
            "stationary distribution power iteration".into(),
        ));
    }
    Ok(WalkOperators {
        transition,
        stationary: pi,
        tau,
    })
}

/// exp(t(P − I)) by scaling-and-squaring with a Taylor expansion of the
/// scaled generator.
pub fn walk_exponential(transition: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = transition.nrows();
    let mut generator = transition.clone() * t;
    for i in 0..n {
        generator[(i, i)] -= t;
    }
    let norm = inf_norm(&generator);
    let squarings = if norm <= 0.5 {
        0
    } else {
        (norm / 0.5).log2().ceil() as u32
    };
    let scaled = generator / 2f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if inf_norm(&term) < 1e-16 * inf_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The symmetrized stability matrix S(t).
pub fn stability_matrix(ops: &WalkOperators, t: f64) -> DMatrix<f64> {
    let n = ops.transition.nrows();
    let p_t = walk_exponential(&ops.transition, t);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let flow = 0.5 * (ops.stationary[i] * p_t[(i, j)] + ops.stationary[j] * p_t[(j, i)]);
            s[(i, j)] = flow - ops.stationary[i] * ops.stationary[j];
        }
    }
    s
}

/// Stability objective of a partition: the sum of S over same-community
/// ordered pairs, diagonal included.
pub fn stability_value(s: &DMatrix<f64>, assignment: &[u32]) -> f64 {
    let n = assignment.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                total += s[(i, j)];
            }
        }
    }
    total
}

/// A partition of the nodes at one Markov scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community id per node, contiguous 0..k-1 in first-appearance order.
    pub assignment: Vec<u32>,
    pub scale_time: f64,
    pub stability_value: f64,
    pub n_communities: usize,
}

/// Relabels community ids contiguously in node order.
pub fn canonical_labels(assignment: &[u32]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    let mut next = 0u32;
    assignment
        .iter()
        .map(|&c| {
            *map.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// One greedy agglomerative optimization pass over a random node order:
/// Louvain-style local moves, then aggregation, repeated until stable.
fn greedy_partition(s: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let n = s.nrows();
    // membership of original nodes in current super-nodes
    let mut groups: Vec<Vec<u32>> = (0..n as u32).map(|i| vec![i]).collect();
    let mut matrix = s.clone();

    loop {
        let k = matrix.nrows();
        let mut comm: Vec<u32> = (0..k as u32).collect();
        let mut order: Vec<usize> = (0..k).collect();
        let mut improved = true;
        while improved {
            improved = false;
            order.shuffle(rng);
            for &v in &order {
                let current = comm[v];
                // link mass from v to each community (excluding v itself)
                let mut link = vec![0.0f64; k];
                for j in 0..k {
                    if j != v {
                        link[comm[j] as usize] += matrix[(v, j)];
                    }
                }
                let mut best_comm = current;
                let mut best_gain = 0.0;
                for c in 0..k as u32 {
                    if c == current {
                        continue;
                    }
                    let gain = 2.0 * (link[c as usize] - link[current as usize]);
                    if gain > best_gain
                        || (gain == best_gain && best_comm != current && c < best_comm)
                    {
                        best_gain = gain;
                        best_comm = c;
                    }
                }
                if best_comm != current && best_gain > 0.0 {
                    comm[v] = best_comm;
                    improved = true;
                }
            }
        }
        let labels = canonical_labels(&comm);
        let k_next = labels.iter().map(|&c| c + 1).max().unwrap_or(0) as usize;
        if k_next == k {
            // no merge happened at this level: unfold and return
            let mut assignment = vec![0u32; n];
            for (super_node, &c) in labels.iter().enumerate() {
                for &orig in &groups[super_node] {
                    assignment[orig as usize] = c;
                }
            }
            return canonical_labels(&assignment);
        }
        // aggregate super-nodes
        let mut new_groups: Vec<Vec<u32>> = vec![Vec::new(); k_next];
        for (super_node, &c) in labels.iter().enumerate() {
            new_groups[c as usize].extend(groups[super_node].iter().copied());
        }
        let mut new_matrix = DMatrix::zeros(k_next, k_next);
        for a in 0..k {
            for b in 0..k {
                new_matrix[(labels[a] as usize, labels[b] as usize)] += matrix[(a, b)];
            }
        }
        groups = new_groups;
        matrix = new_matrix;
    }
}

/// Best partition at time `t` over `iterations` random restarts, plus each
/// iteration's own result (used for the variation-of-information diagnostic).
/// The trivial partitions (all singletons, all-in-one) are always candidates,
/// so the returned objective is at least both of theirs.
pub fn stability_partition_detailed(
    ops: &WalkOperators,
    t: f64,
    iterations: usize,
    seed: u64,
) -> Result<(Partition, Vec<Vec<u32>>)> {
    if t <= 0.0 {
        return Err(Error::Config(format!("Markov time must be positive, got {t}")));
    }
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    let n = ops.transition.nrows();
    let s = stability_matrix(ops, t);

    let iterates: Vec<Vec<u32>> = (0..iterations as u64)
        .into_par_iter()
        .map(|iter| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(iter);
            greedy_partition(&s, &mut rng)
        })
        .collect();

    let singletons: Vec<u32> = (0..n as u32).collect();
    let all_in_one: Vec<u32> = vec![0; n];
    let mut best: Option<(f64, &Vec<u32>)> = None;
    for candidate in [&singletons, &all_in_one].into_iter().chain(iterates.iter()) {
        let value = stability_value(&s, candidate);
        match best {
            Some((best_value, _)) if value <= best_value => {}
            _ => best = Some((value, candidate)),
        }
    }
    let (value, assignment) = best.expect("at least the trivial candidates");
    let assignment = canonical_labels(assignment);
    let n_communities = assignment.iter().map(|&c| c + 1).max().unwrap_or(0) as usize;
    Ok((
        Partition {
            assignment,
            scale_time: t,
            stability_value: value,
            n_communities,
        },
        iterates,
    ))
}

pub fn stability_partition(
    ops: &WalkOperators,
    t: f64,
    iterations: usize,
    seed: u64,
) -> Result<Partition> {
    stability_partition_detailed(ops, t, iterations, seed).map(|(p, _)| p)
}

/// Variation of information between two partitions of the same node set,
/// in nats. Zero iff the partitions are identical.
pub fn variation_of_information(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Data(
            "variation of information needs two partitions of the same non-empty node set".into(),
        ));
    }
    // BTreeMaps keep the summation order deterministic across runs
    let n = a.len() as f64;
    let mut joint: std::collections::BTreeMap<(u32, u32), f64> = std::collections::BTreeMap::new();
    let mut ca: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    let mut cb: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        *ca.entry(x).or_insert(0.0) += 1.0;
        *cb.entry(y).or_insert(0.0) += 1.0;
    }
    let h = |counts: &std::collections::BTreeMap<u32, f64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = h(&ca);
    let hb = h(&cb);
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let p = c / n;
        mi += p * (p * n * n / (ca[&x] * cb[&y])).ln();
    }
    Ok((ha + hb - 2.0 * mi).max(0.0))
}

/// Geometric time grid.
pub fn time_grid(tmin: f64, tmax: f64, steps: usize) -> Result<Vec<f64>> {
    if tmin <= 0.0 || tmax < tmin || steps == 0 {
        return Err(Error::Config(format!(
            "invalid time grid: [{tmin}, {tmax}] with {steps} steps"
        )));
    }
    if steps == 1 {
        return Ok(vec![tmin]);
    }
    let ratio = (tmax / tmin).ln() / (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| tmin * (ratio * k as f64).exp())
        .collect())
}

/// Communities of the previous scale that merged into one community of the
/// current scale (matched by maximal Jaccard overlap).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeEvent {
    pub merged: Vec<u32>,
    pub into: u32,
}

/// One scale of the scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub time: f64,
    pub partition: Partition,
    /// Mean pairwise variation of information across the restart results.
    pub mean_vi: f64,
    pub merge_events: Vec<MergeEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityScan {
    pub points: Vec<ScanPoint>,
    pub iterations: usize,
    pub seed: u64,
    pub tau: f64,
}

/// Full multi-scale scan with merge tracking between consecutive scales.
pub fn stability_scan(
    net: &ProductNetwork,
    grid: &[f64],
    iterations: usize,
    seed: u64,
    tau: f64,
) -> Result<StabilityScan> {
    let ops = walk_operators(net, tau)?;
    let mut points: Vec<ScanPoint> = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let (partition, iterates) =
            stability_partition_detailed(&ops, t, iterations, seed.wrapping_add(k as u64))?;
        let mut vi_sum = 0.0;
        let mut vi_count = 0usize;
        for i in 0..iterates.len() {
            for j in (i + 1)..iterates.len() {
                vi_sum += variation_of_information(&iterates[i], &iterates[j])?;
                vi_count += 1;
            }
        }
        let mean_vi = if vi_count == 0 { 0.0 } else { vi_sum / vi_count as f64 };
        let merge_events = match points.last() {
            Some(prev) => merge_events(&prev.partition.assignment, &partition.assignment),
            None => Vec::new(),
        };
        points.push(ScanPoint {
            time: t,
            partition,
            mean_vi,
            merge_events,
        });
    }
    Ok(StabilityScan {
        points,
        iterations,
        seed,
        tau,
    })
}

/// Matches each previous community to the current community with maximal
/// Jaccard overlap; groups of two or more mapping to the same target are
/// merge events.
pub fn merge_events(prev: &[u32], current: &[u32]) -> Vec<MergeEvent> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut prev_members: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    let mut cur_members: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for (i, &c) in prev.iter().enumerate() {
        prev_members.entry(c).or_default().insert(i);
    }
    for (i, &c) in current.iter().enumerate() {
        cur_members.entry(c).or_default().insert(i);
    }
    let mut matched: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (&pc, pm) in &prev_members {
        let mut best: Option<(f64, u32)> = None;
        for (&cc, cm) in &cur_members {
            let inter = pm.intersection(cm).count() as f64;
            if inter == 0.0 {
                continue;
            }
            let union = (pm.len() + cm.len()) as f64 - inter;
            let jaccard = inter / union;
            let better = match best {
                None => true,
                Some((bj, bc)) => jaccard > bj || (jaccard == bj && cc < bc),
            };
            if better {
                best = Some((jaccard, cc));
            }
        }
        if let Some((_, cc)) = best {
            matched.entry(cc).or_default().push(pc);
        }
    }
    matched
        .into_iter()
        .filter(|(_, sources)| sources.len() >= 2)
        .map(|(into, merged)| MergeEvent { merged, into })
        .collect()
}

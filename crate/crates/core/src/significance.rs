//! Subgraph connectivity testing: the directed modularity contribution of a
//! node set, and its upper-tail probability under uniformly random same-size
//! node sets.
//!
//! For a node set G, with X the binarized adjacency, m the total edge count,
//! and Out/In the degrees in the full network:
//!
//! ```text
//! M_G = (1/m) * ( Σ_{i,j ∈ G} X[i,j]  −  Σ_{i,j ∈ G} Out_i·In_j / m )
//! ```
//!
//! The double sum runs over all ordered pairs of G including i = j, so the
//! null term factorizes and summing M_G over the communities of any partition
//! reproduces the directed modularity of that partition. Self-loop edges are
//! excluded from X, m, and the degrees by default.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ProductNetwork;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModularityOptions {
    /// Count self-loop edges in X, m, and the degrees.
    pub include_self_loops: bool,
    /// Use edge weights instead of the binarized adjacency.
    pub weighted: bool,
}

/// Degree data precomputed once so ensemble sampling touches only the
/// candidate members.
#[derive(Debug, Clone)]
pub struct ModularityContext {
    n: usize,
    m: f64,
    out_deg: Vec<f64>,
    in_deg: Vec<f64>,
    out_edges: Vec<Vec<(u32, f64)>>,
}

impl ModularityContext {
    pub fn new(net: &ProductNetwork, opts: ModularityOptions) -> Result<Self> {
        let n = net.node_count();
        let mut out_deg = vec![0.0; n];
        let mut in_deg = vec![0.0; n];
        let mut out_edges: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut m = 0.0;
        for e in &net.edges {
            if e.source == e.target && !opts.include_self_loops {
                continue;
            }
            let x = if opts.weighted { e.weight } else { 1.0 };
            if x == 0.0 {
                continue;
            }
            out_deg[e.source as usize] += x;
            in_deg[e.target as usize] += x;
            out_edges[e.source as usize].push((e.target, x));
            m += x;
        }
        if m == 0.0 {
            return Err(Error::Data("modularity is undefined on an edgeless network".into()));
        }
        Ok(ModularityContext {
            n,
            m,
            out_deg,
            in_deg,
            out_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn total_edges(&self) -> f64 {
        self.m
    }

    /// M_G for the members marked in `mask` (with `members` listing the same
    /// indices). Empty G yields 0.
    pub fn subgraph_modularity(&self, members: &[u32], mask: &[bool]) -> f64 {
        if members.is_empty() {
            return 0.0;
        }
        let mut internal = 0.0;
        let mut out_sum = 0.0;
        let mut in_sum = 0.0;
        for &i in members {
            let i = i as usize;
            out_sum += self.out_deg[i];
            in_sum += self.in_deg[i];
            for &(j, x) in &self.out_edges[i] {
                if mask[j as usize] {
                    internal += x;
                }
            }
        }
        (internal - out_sum * in_sum / self.m) / self.m
    }
}

/// Convenience wrapper building the mask from a member list.
pub fn subgraph_modularity(
    net: &ProductNetwork,
    members: &[u32],
    opts: ModularityOptions,
) -> Result<f64> {
    let ctx = ModularityContext::new(net, opts)?;
    let mut mask = vec![false; ctx.n];
    for &i in members {
        if i as usize >= ctx.n {
            return Err(Error::Data(format!("node index {i} out of range")));
        }
        mask[i as usize] = true;
    }
    Ok(ctx.subgraph_modularity(members, &mask))
}

/// Result of the Monte Carlo significance test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgraphTest {
    pub node_set: Vec<String>,
    pub n_nodes: usize,
    pub m: f64,
    pub m_g: f64,
    pub samples: usize,
    pub seed: u64,
    /// Empirical upper-tail probability: (1 + #{M_rand >= M_G}) / (samples + 1).
    pub p_value: f64,
    pub ensemble_mean: f64,
    pub ensemble_sd: f64,
    pub ensemble: Vec<f64>,
}

/// Draws `samples` uniformly random node subsets of |G| nodes, computes M for
/// each, and reports the empirical upper-tail p-value. Bit-reproducible for a
/// fixed seed regardless of thread count: each sample uses its own seeded
/// stream.
pub fn null_ensemble_pvalue(
    net: &ProductNetwork,
    members: &[u32],
    samples: usize,
    seed: u64,
    opts: ModularityOptions,
) -> Result<SubgraphTest> {
    if samples == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let ctx = ModularityContext::new(net, opts)?;
    let g = members.len();
    if g > ctx.n {
        return Err(Error::Data(format!(
            "node set of {g} exceeds the network size {}",
            ctx.n
        )));
    }
    let mut mask = vec![false; ctx.n];
    for &i in members {
        if i as usize >= ctx.n {
            return Err(Error::Data(format!("node index {i} out of range")));
        }
        mask[i as usize] = true;
    }
    let m_g = ctx.subgraph_modularity(members, &mask);

    let ensemble: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|sample| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(sample.wrapping_add(1));
            let draw = sample_subset(&mut rng, ctx.n, g);
            let mut mask = vec![false; ctx.n];
            for &i in &draw {
                mask[i as usize] = true;
            }
            ctx.subgraph_modularity(&draw, &mask)
        })
        .collect();

    let exceed = ensemble.iter().filter(|&&v| v >= m_g).count();
    let p_value = (1 + exceed) as f64 / (samples + 1) as f64;
    let mean = ensemble.iter().sum::<f64>() / samples as f64;
    let var = ensemble.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / samples as f64;
    Ok(SubgraphTest {
        node_set: members
            .iter()
            .map(|&i| net.nodes[i as usize].clone())
            .collect(),
        n_nodes: g,
        m: ctx.m,
        m_g,
        samples,
        seed,
        p_value,
        ensemble_mean: mean,
        ensemble_sd: var.sqrt(),
        ensemble,
    })
}

/// Uniform random subset of size g from 0..n.
fn sample_subset(rng: &mut ChaCha8Rng, n: usize, g: usize) -> Vec<u32> {
    if g * 2 >= n {
        // partial Fisher-Yates
        let mut pool: Vec<u32> = (0..n as u32).collect();
        for k in 0..g {
            let pick = rng.random_range(k..n);
            pool.swap(k, pick);
        }
        pool.truncate(g);
        pool
    } else {
        let mut chosen = std::collections::HashSet::with_capacity(g);
        let mut out = Vec::with_capacity(g);
        while out.len() < g {
            let pick = rng.random_range(0..n as u32);
            if chosen.insert(pick) {
                out.push(pick);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkMeta, ProductNetwork};

    fn net_from(edges: &[(&str, &str)]) -> ProductNetwork {
        let mut nodes = std::collections::BTreeSet::new();
        for (s, t) in edges {
            nodes.insert(s.to_string());
            nodes.insert(t.to_string());
        }
        ProductNetwork::from_labeled_edges(
            nodes.into_iter().collect(),
            edges
                .iter()
                .map(|(s, t)| (s.to_string(), t.to_string(), 1.0, 1, 0.0))
                .collect(),
            NetworkMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn worked_five_edge_example() {
        let net = net_from(&[("a", "b"), ("b", "a"), ("c", "d"), ("d", "e"), ("e", "c")]);
        let g = vec![
            net.node_index("a").unwrap(),
            net.node_index("b").unwrap(),
        ];
        let m_g = subgraph_modularity(&net, &g, ModularityOptions::default()).unwrap();
        assert!((m_g - 0.24).abs() < 1e-15, "got {m_g}");
    }

    #[test]
    fn single_node_is_minus_out_in_over_m_squared() {
        let net = net_from(&[("a", "b"), ("b", "a"), ("c", "d"), ("d", "e"), ("e", "c")]);
        let a = net.node_index("a").unwrap();
        let m_g = subgraph_modularity(&net, &[a], ModularityOptions::default()).unwrap();
        // Out_a = 1, In_a = 1, m = 5
        assert!((m_g - (-1.0 / 25.0)).abs() < 1e-15);
    }

    #[test]
    fn full_node_set_has_zero_modularity() {
        let net = net_from(&[("a", "b"), ("b", "a"), ("c", "d"), ("d", "e"), ("e", "c")]);
        let all: Vec<u32> = (0..net.node_count() as u32).collect();
        let m_g = subgraph_modularity(&net, &all, ModularityOptions::default()).unwrap();
        assert!(m_g.abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_zero() {
        let net = net_from(&[("a", "b")]);
        let m_g = subgraph_modularity(&net, &[], ModularityOptions::default()).unwrap();
        assert_eq!(m_g, 0.0);
    }

    /// Direct Leicht-Newman directed modularity of a partition, computed by
    /// the full double loop over ordered node pairs.
    fn leicht_newman_oracle(net: &ProductNetwork, assignment: &[u32]) -> f64 {
        let n = net.node_count();
        let mut x = vec![vec![0.0f64; n]; n];
        let mut out = vec![0.0f64; n];
        let mut inn = vec![0.0f64; n];
        let mut m = 0.0;
        for e in &net.edges {
            if e.source == e.target {
                continue;
            }
            x[e.source as usize][e.target as usize] = 1.0;
            out[e.source as usize] += 1.0;
            inn[e.target as usize] += 1.0;
            m += 1.0;
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if assignment[i] == assignment[j] {
                    q += x[i][j] - out[i] * inn[j] / m;
                }
            }
        }
        q / m
    }

    #[test]
    fn decomposition_matches_full_modularity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for trial in 0..25 {
            let n = rng.random_range(5..=50usize);
            let mut edges = Vec::new();
            for s in 0..n as u32 {
                for t in 0..n as u32 {
                    if s != t && rng.random_bool(0.15) {
                        edges.push((format!("n{s:03}"), format!("n{t:03}"), 1.0, 1, 0.0));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let nodes: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
            let net = ProductNetwork::from_labeled_edges(nodes, edges, NetworkMeta::default())
                .unwrap();
            let k = rng.random_range(1..=5u32);
            let assignment: Vec<u32> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let q = leicht_newman_oracle(&net, &assignment);
            let mut sum = 0.0;
            for c in 0..k {
                let members: Vec<u32> = (0..n as u32).filter(|&i| assignment[i as usize] == c).collect();
                sum += subgraph_modularity(&net, &members, ModularityOptions::default()).unwrap();
            }
            assert!((sum - q).abs() < 1e-12, "trial {trial}: {sum} vs {q}");
        }
    }

    #[test]
    fn planted_cluster_is_significant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 80u32;
        let mut edges = Vec::new();
        // sparse background
        for s in 0..n {
            for t in 0..n {
                if s != t && rng.random_bool(0.02) {
                    edges.push((format!("n{s:03}"), format!("n{t:03}"), 1.0, 1, 0.0));
                }
            }
        }
        // dense planted set 0..8
        for s in 0..8u32 {
            for t in 0..8u32 {
                if s != t {
                    edges.push((format!("n{s:03}"), format!("n{t:03}"), 1.0, 1, 0.0));
                }
            }
        }
        edges.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        edges.dedup_by(|a, b| (&a.0, &a.1) == (&b.0, &b.1));
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
        let net = ProductNetwork::from_labeled_edges(nodes, edges, NetworkMeta::default()).unwrap();
        let planted: Vec<u32> = (0..8).collect();
        let test =
            null_ensemble_pvalue(&net, &planted, 2000, 7, ModularityOptions::default()).unwrap();
        assert!(test.p_value < 0.01, "p = {}", test.p_value);
    }

    #[test]
    fn zero_samples_and_oversized_sets_are_rejected() {
        let net = net_from(&[("a", "b")]);
        assert!(null_ensemble_pvalue(&net, &[0], 0, 1, ModularityOptions::default()).is_err());
        let too_many: Vec<u32> = (0..3).collect();
        assert!(
            null_ensemble_pvalue(&net, &too_many, 10, 1, ModularityOptions::default()).is_err()
        );
    }

    #[test]
    fn fixed_seed_is_bit_reproducible() {
        let net = net_from(&[("a", "b"), ("b", "c"), ("c", "a"), ("c", "d"), ("d", "a")]);
        let g = vec![0u32, 1];
        let t1 = null_ensemble_pvalue(&net, &g, 500, 13, ModularityOptions::default()).unwrap();
        let t2 = null_ensemble_pvalue(&net, &g, 500, 13, ModularityOptions::default()).unwrap();
        assert_eq!(t1.p_value, t2.p_value);
        assert_eq!(t1.ensemble, t2.ensemble);
    }

    #[test]
    fn p_value_stays_in_range() {
        let net = net_from(&[("a", "b"), ("b", "c"), ("c", "a")]);
        let test = null_ensemble_pvalue(&net, &[0, 1], 100, 3, ModularityOptions::default()).unwrap();
        assert!(test.p_value >= 1.0 / 101.0);
        assert!(test.p_value <= 1.0);
    }
}

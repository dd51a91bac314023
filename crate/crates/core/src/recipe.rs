//! Producer/buyer set construction and the excess-purchase ratio.
//!
//! For products i and j the ratio compares how prevalent i is in the
//! purchasing basket of j's producers against how prevalent it is across all
//! entities:
//!
//! ```text
//! A[i,j] = (|S_j ∩ S^i| / |S_j|) / (|S^i| / |S|)
//! ```
//!
//! where S is every entity, S_j the above-mean sellers of j, and S^i the
//! above-mean buyers of i. Values above 1 mark i as a distinctive input to j;
//! ubiquitous inputs (bought by everyone) land near 1 and fall below the edge
//! threshold.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EntityTransaction;

/// Per-product producer and buyer sets with the supporting value totals.
#[derive(Debug, Clone)]
pub struct ProducerBuyerIndex {
    pub n_entities: usize,
    pub n_products: usize,
    /// S_j: entities selling product j strictly above the mean seller value.
    producer_sets: Vec<Vec<u32>>,
    /// S^i: entities buying product i strictly above the mean buyer value.
    buyer_sets: Vec<Vec<u32>>,
    /// Total purchase value of product i per buying entity.
    purchase_value: Vec<HashMap<u32, f64>>,
    pub sell_mean: Vec<f64>,
    pub buy_mean: Vec<f64>,
}

/// One candidate edge i → j with its evidence counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCandidate {
    pub source: u32,
    pub target: u32,
    /// The excess-purchase ratio A[source, target].
    pub weight: f64,
    /// |S_j ∩ S^i|: entities that both produce the target and buy the source.
    pub firmcount: u32,
    /// Total purchase value of the source product by those entities.
    pub value_usd: f64,
}

/// Thresholds applied when materializing the edge list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeThresholds {
    /// Keep edges with weight strictly greater than this.
    pub weight_threshold: f64,
    /// Keep edges with firmcount at least this.
    pub firmcount_min: u32,
    /// Keep edges whose supporting transaction value is at least this.
    pub value_min_usd: f64,
}

impl Default for EdgeThresholds {
    fn default() -> Self {
        EdgeThresholds {
            weight_threshold: 2.0,
            firmcount_min: 2,
            value_min_usd: 1000.0,
        }
    }
}

impl ProducerBuyerIndex {
    /// Builds the index from entity-keyed transactions. `n_entities` and
    /// `n_products` bound the index spaces of the transaction records.
    pub fn build(n_entities: usize, n_products: usize, transactions: &[EntityTransaction]) -> Self {
        let mut sale_totals: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n_products];
        let mut purchase_value: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n_products];
        for t in transactions {
            if t.value_usd > 0.0 {
                *sale_totals[t.product as usize]
                    .entry(t.supplier)
                    .or_insert(0.0) += t.value_usd;
                *purchase_value[t.product as usize]
                    .entry(t.buyer)
                    .or_insert(0.0) += t.value_usd;
            }
        }

        // Above-mean membership, strict inequality; the mean runs over
        // entities with positive activity in the product.
        fn above_mean(totals: &HashMap<u32, f64>) -> (Vec<u32>, f64) {
            if totals.is_empty() {
                return (Vec::new(), 0.0);
            }
            let mean = totals.values().sum::<f64>() / totals.len() as f64;
            let mut members: Vec<u32> = totals
                .iter()
                .filter(|(_, &v)| v > mean)
                .map(|(&e, _)| e)
                .collect();
            members.sort_unstable();
            (members, mean)
        }

        let mut producer_sets = Vec::with_capacity(n_products);
        let mut sell_mean = Vec::with_capacity(n_products);
        for totals in &sale_totals {
            let (set, mean) = above_mean(totals);
            producer_sets.push(set);
            sell_mean.push(mean);
        }
        let mut buyer_sets = Vec::with_capacity(n_products);
        let mut buy_mean = Vec::with_capacity(n_products);
        for totals in &purchase_value {
            let (set, mean) = above_mean(totals);
            buyer_sets.push(set);
            buy_mean.push(mean);
        }

        ProducerBuyerIndex {
            n_entities,
            n_products,
            producer_sets,
            buyer_sets,
            purchase_value,
            sell_mean,
            buy_mean,
        }
    }

    /// S_j: above-mean producers of `product`, sorted. Empty when no sellers.
    pub fn producer_set(&self, product: u32) -> &[u32] {
        &self.producer_sets[product as usize]
    }

    /// S^i: above-mean buyers of `product`, sorted. Empty when no buyers.
    pub fn buyer_set(&self, product: u32) -> &[u32] {
        &self.buyer_sets[product as usize]
    }

    /// A[i,j] with its evidence counts, or `None` when the sets do not
    /// support an edge (|S_j| = 0, |S^i| = 0, or an empty intersection).
    pub fn excess_purchase_ratio(&self, source: u32, target: u32) -> Option<EdgeCandidate> {
        let producers = self.producer_set(target);
        let buyers = self.buyer_set(source);
        if producers.is_empty() || buyers.is_empty() {
            return None;
        }
        let values = &self.purchase_value[source as usize];
        let mut firmcount = 0u32;
        let mut value_usd = 0.0;
        // both sorted; merge intersection
        let mut a = 0;
        let mut b = 0;
        while a < producers.len() && b < buyers.len() {
            match producers[a].cmp(&buyers[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    firmcount += 1;
                    value_usd += values.get(&producers[a]).copied().unwrap_or(0.0);
                    a += 1;
                    b += 1;
                }
            }
        }
        if firmcount == 0 {
            return None;
        }
        let weight = (firmcount as f64 / producers.len() as f64)
            / (buyers.len() as f64 / self.n_entities as f64);
        Some(EdgeCandidate {
            source,
            target,
            weight,
            firmcount,
            value_usd,
        })
    }

    /// All edges surviving the thresholds, ordered by (source, target).
    /// Self-loops are computed and retained; downstream consumers exclude
    /// them where their conventions require it.
    pub fn build_edge_list(&self, thresholds: &EdgeThresholds) -> Vec<EdgeCandidate> {
        let n = self.n_products as u32;
        let mut edges: Vec<Vec<EdgeCandidate>> = (0..n)
            .into_par_iter()
            .map(|target| {
                let mut per_target = Vec::new();
                if self.producer_set(target).is_empty() {
                    return per_target;
                }
                for source in 0..n {
                    if let Some(edge) = self.excess_purchase_ratio(source, target) {
                        if edge.weight > thresholds.weight_threshold
                            && edge.firmcount >= thresholds.firmcount_min
                            && edge.value_usd >= thresholds.value_min_usd
                        {
                            per_target.push(edge);
                        }
                    }
                }
                per_target
            })
            .collect();
        let mut out: Vec<EdgeCandidate> = edges.drain(..).flatten().collect();
        out.sort_by(|x, y| (x.source, x.target).cmp(&(y.source, y.target)));
        out
    }

    /// Raw ratios A[source, j] against every target product, unthresholded.
    /// Used to check that ubiquitous inputs sit below the edge threshold.
    pub fn ratios_from(&self, source: u32) -> Vec<Option<f64>> {
        (0..self.n_products as u32)
            .map(|target| self.excess_purchase_ratio(source, target).map(|e| e.weight))
            .collect()
    }
}

/// Writes `edges.csv` with header `source_hs4,target_hs4,weight,firmcount,value_usd`.
pub fn write_edges_csv(
    path: &std::path::Path,
    products: &[String],
    edges: &[EdgeCandidate],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["source_hs4", "target_hs4", "weight", "firmcount", "value_usd"])
        .map_err(|e| Error::csv(path, e))?;
    for e in edges {
        w.write_record([
            products[e.source as usize].clone(),
            products[e.target as usize].clone(),
            e.weight.to_string(),
            e.firmcount.to_string(),
            e.value_usd.to_string(),
        ])
        .map_err(|err| Error::csv(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

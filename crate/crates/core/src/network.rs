//! The directed weighted product network and its structural operations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recipe::EdgeCandidate;

/// A directed edge between node indices, with provenance attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    #[serde(default)]
    pub firmcount: u32,
    #[serde(default)]
    pub value_usd: f64,
}

/// Metadata recording how a network was built.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub firmcount_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_min_usd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Directed weighted network over HS 4-digit products. Node list is sorted
/// by code; edges are sorted by (source, target) and unique.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductNetwork {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub meta: NetworkMeta,
}

impl ProductNetwork {
    /// Builds a network from node labels and labeled edges. Labels are sorted
    /// and edges re-indexed; duplicate (source, target) pairs are an error.
    pub fn from_labeled_edges(
        mut nodes: Vec<String>,
        edges: Vec<(String, String, f64, u32, f64)>,
        meta: NetworkMeta,
    ) -> Result<Self> {
        nodes.sort();
        nodes.dedup();
        let index: BTreeMap<&str, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u32))
            .collect();
        let mut out = Vec::with_capacity(edges.len());
        for (s, t, w, fc, v) in edges {
            let source = *index
                .get(s.as_str())
                .ok_or_else(|| Error::Data(format!("edge source {s} is not a node")))?;
            let target = *index
                .get(t.as_str())
                .ok_or_else(|| Error::Data(format!("edge target {t} is not a node")))?;
            if w < 0.0 {
                return Err(Error::Data(format!("negative edge weight on {s}->{t}")));
            }
            out.push(Edge {
                source,
                target,
                weight: w,
                firmcount: fc,
                value_usd: v,
            });
        }
        out.sort_by_key(|e| (e.source, e.target));
        if out.windows(2).any(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target)) {
            return Err(Error::Data("duplicate edge in input".into()));
        }
        Ok(ProductNetwork {
            nodes,
            edges: out,
            meta,
        })
    }

    /// Network from recipe inference output.
    pub fn from_candidates(
        products: &[String],
        candidates: &[EdgeCandidate],
        meta: NetworkMeta,
    ) -> Self {
        let labeled = candidates
            .iter()
            .map(|e| {
                (
                    products[e.source as usize].clone(),
                    products[e.target as usize].clone(),
                    e.weight,
                    e.firmcount,
                    e.value_usd,
                )
            })
            .collect();
        // products are unique and candidate endpoints index into them
        Self::from_labeled_edges(products.to_vec(), labeled, meta)
            .expect("candidates index into the product list")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, label: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(label))
            .ok()
            .map(|i| i as u32)
    }

    /// Out-adjacency lists (target, weight), sorted by target.
    pub fn out_adjacency(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.source as usize].push((e.target, e.weight));
        }
        adj
    }

    /// In-adjacency lists (source, weight), sorted by source.
    pub fn in_adjacency(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.target as usize].push((e.source, e.weight));
        }
        adj
    }

    /// Induced subnetwork on the largest weakly connected component.
    /// Ties break toward the component containing the smallest HS code.
    /// Isolated nodes form singleton components. Idempotent.
    pub fn largest_wcc(&self) -> ProductNetwork {
        let n = self.nodes.len();
        if n == 0 {
            return self.clone();
        }
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], x: u32) -> u32 {
            let mut root = x;
            while parent[root as usize] != root {
                root = parent[root as usize];
            }
            let mut cur = x;
            while parent[cur as usize] != root {
                let next = parent[cur as usize];
                parent[cur as usize] = root;
                cur = next;
            }
            root
        }
        for e in &self.edges {
            let a = find(&mut parent, e.source);
            let b = find(&mut parent, e.target);
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for i in 0..n as u32 {
            *sizes.entry(find(&mut parent, i)).or_insert(0) += 1;
        }
        // max size; tie -> smallest root, which is the smallest member since
        // union always keeps the lower index as root and nodes are sorted
        let best_root = *sizes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(root, _)| root)
            .expect("non-empty network");
        let members: BTreeSet<String> = (0..n as u32)
            .filter(|&i| find(&mut parent, i) == best_root)
            .map(|i| self.nodes[i as usize].clone())
            .collect();
        self.induced_subgraph(&members)
            .expect("members are drawn from the node list")
    }

    /// Induced subnetwork on a node set: all edges with both endpoints in the
    /// set, weights preserved. Unknown codes are an error listing offenders.
    pub fn induced_subgraph(&self, members: &BTreeSet<String>) -> Result<ProductNetwork> {
        let mut keep = vec![false; self.nodes.len()];
        let mut unknown: Vec<&str> = Vec::new();
        for label in members {
            match self.node_index(label) {
                Some(i) => keep[i as usize] = true,
                None => unknown.push(label),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Data(format!(
                "unknown product codes: {}",
                unknown.join(", ")
            )));
        }
        let labeled = self
            .edges
            .iter()
            .filter(|e| keep[e.source as usize] && keep[e.target as usize])
            .map(|e| {
                (
                    self.nodes[e.source as usize].clone(),
                    self.nodes[e.target as usize].clone(),
                    e.weight,
                    e.firmcount,
                    e.value_usd,
                )
            })
            .collect();
        ProductNetwork::from_labeled_edges(
            members.iter().cloned().collect(),
            labeled,
            self.meta.clone(),
        )
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::json("network.json", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let net: ProductNetwork =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        Ok(net)
    }

    /// Reads an edge-list CSV `source_hs4,target_hs4[,weight]`; missing
    /// weights default to 1. Used for externally supplied networks.
    pub fn from_edge_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let mut nodes = BTreeSet::new();
        let mut rows: Vec<(String, String, f64)> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            if record.len() < 2 {
                return Err(Error::Data(format!("malformed edge row: {record:?}")));
            }
            let s = record[0].trim().to_string();
            let t = record[1].trim().to_string();
            let w: f64 = match record.get(2).map(str::trim) {
                None | Some("") => 1.0,
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Data(format!("bad edge weight: {v}")))?,
            };
            nodes.insert(s.clone());
            nodes.insert(t.clone());
            rows.push((s, t, w));
        }
        // collapse duplicate pairs by keeping the max weight
        let mut best: BTreeMap<(String, String), f64> = BTreeMap::new();
        for (s, t, w) in rows {
            let entry = best.entry((s, t)).or_insert(w);
            if w > *entry {
                *entry = w;
            }
        }
        let labeled = best
            .into_iter()
            .map(|((s, t), w)| (s, t, w, 0, 0.0))
            .collect();
        ProductNetwork::from_labeled_edges(
            nodes.into_iter().collect(),
            labeled,
            NetworkMeta {
                source: Some(path.display().to_string()),
                ..NetworkMeta::default()
            },
        )
    }
}

/// Unweighted degree counts and weighted strengths. Self-loops are excluded
/// throughout, matching the path-based centrality conventions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeReport {
    pub in_degree: Vec<u32>,
    pub out_degree: Vec<u32>,
    pub in_strength: Vec<f64>,
    pub out_strength: Vec<f64>,
}

pub fn degrees(net: &ProductNetwork) -> DegreeReport {
    let n = net.nodes.len();
    let mut report = DegreeReport {
        in_degree: vec![0; n],
        out_degree: vec![0; n],
        in_strength: vec![0.0; n],
        out_strength: vec![0.0; n],
    };
    for e in &net.edges {
        if e.source == e.target {
            continue;
        }
        report.out_degree[e.source as usize] += 1;
        report.in_degree[e.target as usize] += 1;
        report.out_strength[e.source as usize] += e.weight;
        report.in_strength[e.target as usize] += e.weight;
    }
    report
}

/// Attaches a capital/intermediate/consumption class to each node from a
/// `hs4,class` table; unmapped nodes are "unclassified".
pub fn goods_classification(
    net: &ProductNetwork,
    table: &BTreeMap<String, String>,
) -> Vec<String> {
    net.nodes
        .iter()
        .map(|n| {
            table
                .get(n)
                .cloned()
                .unwrap_or_else(|| "unclassified".to_string())
        })
        .collect()
}

/// Loads a `hs4,class` CSV for the classification join.
pub fn load_classification_csv(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut map = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() < 2 {
            return Err(Error::Data(format!("malformed class row: {record:?}")));
        }
        map.insert(record[0].trim().to_string(), record[1].trim().to_string());
    }
    Ok(map)
}

/// Mean out-degree per goods class, for the classification summary.
pub fn class_summary(report: &DegreeReport, classes: &[String]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (i, class) in classes.iter().enumerate() {
        let entry = sums.entry(class).or_insert((0.0, 0));
        entry.0 += report.out_degree[i] as f64;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(class, (sum, count))| (class.to_string(), sum / count as f64))
        .collect()
}

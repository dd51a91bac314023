//! Quantitative comparison of two product networks on their common node set:
//! full edge-set correlation and per-node degree correlations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{degrees, ProductNetwork};
use crate::stats::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    Binary,
    Weighted,
}

impl std::str::FromStr for EdgeMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(EdgeMode::Binary),
            "weighted" => Ok(EdgeMode::Weighted),
            other => Err(format!("unknown mode: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            other => Err(format!("unknown direction: {other}")),
        }
    }
}

/// Two networks restricted to their common node set, identically indexed.
#[derive(Debug, Clone)]
pub struct NetworkAlignment {
    pub nodes: Vec<String>,
    pub a: ProductNetwork,
    pub b: ProductNetwork,
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
}

/// Intersects the node sets (sorted) and induces both networks on the
/// intersection. An empty intersection is an error.
pub fn align(a: &ProductNetwork, b: &ProductNetwork) -> Result<NetworkAlignment> {
    let set_a: std::collections::BTreeSet<String> = a.nodes.iter().cloned().collect();
    let set_b: std::collections::BTreeSet<String> = b.nodes.iter().cloned().collect();
    let common: std::collections::BTreeSet<String> =
        set_a.intersection(&set_b).cloned().collect();
    if common.is_empty() {
        return Err(Error::Data("empty intersection of node sets".into()));
    }
    let only_a = set_a.difference(&common).cloned().collect();
    let only_b = set_b.difference(&common).cloned().collect();
    Ok(NetworkAlignment {
        nodes: common.iter().cloned().collect(),
        a: a.induced_subgraph(&common)?,
        b: b.induced_subgraph(&common)?,
        only_a,
        only_b,
    })
}

fn edge_vector(net: &ProductNetwork, n: usize, mode: EdgeMode) -> Vec<f64> {
    // dense n*n with the diagonal excluded later
    let mut m = vec![0.0; n * n];
    for e in &net.edges {
        let v = match mode {
            EdgeMode::Binary => 1.0,
            EdgeMode::Weighted => e.weight,
        };
        m[e.source as usize * n + e.target as usize] = v;
    }
    m
}

/// Pearson correlation over all ordered off-diagonal node pairs of the two
/// aligned edge matrices. Symmetric in its arguments.
pub fn edge_correlation(alignment: &NetworkAlignment, mode: EdgeMode) -> Result<f64> {
    let n = alignment.nodes.len();
    let ma = edge_vector(&alignment.a, n, mode);
    let mb = edge_vector(&alignment.b, n, mode);
    let mut x = Vec::with_capacity(n * n - n);
    let mut y = Vec::with_capacity(n * n - n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                x.push(ma[i * n + j]);
                y.push(mb[i * n + j]);
            }
        }
    }
    pearson(&x, &y)
}

/// Pearson correlation of per-node binary in- or out-degrees computed on the
/// aligned subnetworks.
pub fn degree_correlation(alignment: &NetworkAlignment, direction: Direction) -> Result<f64> {
    let da = degrees(&alignment.a);
    let db = degrees(&alignment.b);
    let (x, y): (Vec<f64>, Vec<f64>) = match direction {
        Direction::In => (
            da.in_degree.iter().map(|&d| d as f64).collect(),
            db.in_degree.iter().map(|&d| d as f64).collect(),
        ),
        Direction::Out => (
            da.out_degree.iter().map(|&d| d as f64).collect(),
            db.out_degree.iter().map(|&d| d as f64).collect(),
        ),
    };
    pearson(&x, &y)
}

/// JSON-serializable comparison summary. Correlations are `None` when an
/// input is degenerate (e.g. a constant degree sequence).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub common_nodes: usize,
    pub only_a: usize,
    pub only_b: usize,
    pub edge_correlation: Option<f64>,
    pub in_degree_correlation: Option<f64>,
    pub out_degree_correlation: Option<f64>,
    pub mode: EdgeMode,
}

fn degenerate_as_none(corr: Result<f64>) -> Result<Option<f64>> {
    match corr {
        Ok(v) => Ok(Some(v)),
        Err(Error::Data(msg)) if msg.contains("zero-variance") => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn compare(a: &ProductNetwork, b: &ProductNetwork, mode: EdgeMode) -> Result<ComparisonReport> {
    let alignment = align(a, b)?;
    Ok(ComparisonReport {
        common_nodes: alignment.nodes.len(),
        only_a: alignment.only_a.len(),
        only_b: alignment.only_b.len(),
        edge_correlation: degenerate_as_none(edge_correlation(&alignment, mode))?,
        in_degree_correlation: degenerate_as_none(degree_correlation(&alignment, Direction::In))?,
        out_degree_correlation: degenerate_as_none(degree_correlation(&alignment, Direction::Out))?,
        mode,
    })
}

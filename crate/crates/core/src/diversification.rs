//! Downstream/upstream density metrics and the probit entry-prediction
//! pipeline: panel construction from two trade years, fixed-effects probit
//! with perfect-prediction handling, AUC evaluation, and the
//! firmcount × presence-threshold sweep.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::CleanWorld;
use crate::network::{NetworkMeta, ProductNetwork};
use crate::probit::{fit_probit, ProbitFit, ProbitOptions};
use crate::recipe::{EdgeThresholds, ProducerBuyerIndex};
use crate::stats::auc;
use crate::trade::{presence_matrix, TradeMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityDirection {
    /// Neighbors are the top out-edges of p: products p feeds into.
    Downstream,
    /// Neighbors are the top in-edges of p: products feeding into p.
    Upstream,
}

impl std::str::FromStr for DensityDirection {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "downstream" | "down" => Ok(DensityDirection::Downstream),
            "upstream" | "up" => Ok(DensityDirection::Upstream),
            other => Err(format!("unknown direction: {other}")),
        }
    }
}

/// Product × country density values in [0, 1].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub values: DMatrix<f64>,
    pub direction: DensityDirection,
    pub k: usize,
}

/// Share of a product's top-k neighbors present in each country.
///
/// `presence` is a binary product × country matrix whose rows are labeled by
/// `presence_products`; every network node must appear there. Neighbor sets
/// J_p take the up-to-k highest-weight edges, ties broken by HS code
/// ascending; products with no neighbors get density 0.
pub fn density(
    net: &ProductNetwork,
    presence: &DMatrix<f64>,
    presence_products: &[String],
    direction: DensityDirection,
    k: usize,
) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::Config("density top-k must be positive".into()));
    }
    let row_of: BTreeMap<&str, usize> = presence_products
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut missing = Vec::new();
    let node_rows: Vec<usize> = net
        .nodes
        .iter()
        .map(|n| match row_of.get(n.as_str()) {
            Some(&r) => r,
            None => {
                missing.push(n.clone());
                0
            }
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "products missing from the presence matrix: {}",
            missing.join(", ")
        )));
    }

    let n = net.node_count();
    let n_countries = presence.ncols();
    let mut neighbor_lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for e in &net.edges {
        if e.source == e.target {
            continue;
        }
        match direction {
            DensityDirection::Downstream => {
                neighbor_lists[e.source as usize].push((e.target, e.weight))
            }
            DensityDirection::Upstream => {
                neighbor_lists[e.target as usize].push((e.source, e.weight))
            }
        }
    }
    let mut values = DMatrix::zeros(n, n_countries);
    for (p, list) in neighbor_lists.iter_mut().enumerate() {
        if list.is_empty() {
            continue;
        }
        list.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| net.nodes[a.0 as usize].cmp(&net.nodes[b.0 as usize]))
        });
        let top: &[(u32, f64)] = &list[..list.len().min(k)];
        for c in 0..n_countries {
            let present = top
                .iter()
                .filter(|(j, _)| presence[(node_rows[*j as usize], c)] > 0.0)
                .count();
            values[(p, c)] = present as f64 / top.len() as f64;
        }
    }
    Ok(DensityMatrix {
        values,
        direction,
        k,
    })
}

/// Thresholds governing panel construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntryThresholds {
    /// A pair is in the sample when base-year Rpop is strictly below this.
    pub absence: f64,
    /// The outcome is 1 when end-year Rpop is strictly above this.
    pub presence: f64,
    /// Rpop level defining "present" for the density presence matrix.
    pub density_presence: f64,
    /// Products with base-year world trade below this are excluded.
    pub trade_min_usd: f64,
    /// Neighborhood size for the density metrics.
    pub top_k: usize,
}

impl Default for EntryThresholds {
    fn default() -> Self {
        EntryThresholds {
            absence: 0.05,
            presence: 0.1,
            density_presence: 1.0,
            trade_min_usd: 2e9,
            top_k: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelRow {
    pub product: u32,
    pub country: u32,
    pub entry: bool,
    pub down_density: f64,
    pub up_density: f64,
    pub rpop_base: f64,
    pub rpop_end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelStats {
    pub n_products: usize,
    pub n_countries: usize,
    pub n_possible: usize,
    pub n_absent: usize,
    pub absent_share: f64,
    pub n_entries: usize,
    pub entry_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryPanel {
    pub products: Vec<String>,
    pub countries: Vec<String>,
    pub rows: Vec<PanelRow>,
    pub stats: PanelStats,
}

/// Builds the estimation panel from two trade years.
///
/// Products are kept when they lie in the network's main weakly connected
/// component, appear in both trade years, and clear the base-year world-trade
/// floor. The sample holds pairs absent in the base year; the outcome marks
/// pairs present in the end year. Densities use base-year presence, so no
/// outcome information leaks into the regressors.
pub fn build_entry_panel(
    net: &ProductNetwork,
    base: &TradeMatrix,
    end: &TradeMatrix,
    thresholds: &EntryThresholds,
) -> Result<EntryPanel> {
    let main = net.largest_wcc();
    let countries: Vec<String> = base
        .countries
        .iter()
        .filter(|c| end.countries.contains(c))
        .cloned()
        .collect();
    if countries.is_empty() {
        return Err(Error::Data("no common countries across the two years".into()));
    }

    // network restricted to products with trade data in both years
    let tradable: std::collections::BTreeSet<String> = main
        .nodes
        .iter()
        .filter(|n| base.products.contains(n) && end.products.contains(n))
        .cloned()
        .collect();
    if tradable.is_empty() {
        return Err(Error::Data(
            "no network products appear in the trade data".into(),
        ));
    }
    let net = main.induced_subgraph(&tradable)?;

    let rpop_base_full = base.rpop()?;
    let rpop_end_full = end.rpop()?;

    // align rpop matrices to (net.nodes x countries)
    let align = |tm: &TradeMatrix, rpop: &DMatrix<f64>| -> DMatrix<f64> {
        let prow: BTreeMap<&str, usize> = tm
            .products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let ccol: BTreeMap<&str, usize> = tm
            .countries
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        DMatrix::from_fn(net.nodes.len(), countries.len(), |p, c| {
            match (prow.get(net.nodes[p].as_str()), ccol.get(countries[c].as_str())) {
                (Some(&pi), Some(&ci)) => rpop[(pi, ci)],
                _ => 0.0,
            }
        })
    };
    let rpop_base = align(base, &rpop_base_full);
    let rpop_end = align(end, &rpop_end_full);

    let m_base = presence_matrix(&rpop_base, thresholds.density_presence)?;
    let down = density(&net, &m_base, &net.nodes, DensityDirection::Downstream, thresholds.top_k)?;
    let up = density(&net, &m_base, &net.nodes, DensityDirection::Upstream, thresholds.top_k)?;

    // base-year world trade filter
    let base_totals: BTreeMap<&str, f64> = {
        let totals = base.product_totals();
        base.products
            .iter()
            .zip(totals)
            .map(|(p, t)| (p.as_str(), t))
            .collect()
    };
    let sampled: Vec<usize> = (0..net.nodes.len())
        .filter(|&p| base_totals.get(net.nodes[p].as_str()).copied().unwrap_or(0.0) >= thresholds.trade_min_usd)
        .collect();
    if sampled.is_empty() {
        return Err(Error::Data(format!(
            "no products clear the {} USD base-year trade floor",
            thresholds.trade_min_usd
        )));
    }

    let mut rows = Vec::new();
    let mut n_entries = 0usize;
    for &p in &sampled {
        for c in 0..countries.len() {
            if rpop_base[(p, c)] < thresholds.absence {
                let entry = rpop_end[(p, c)] > thresholds.presence;
                if entry {
                    n_entries += 1;
                }
                rows.push(PanelRow {
                    product: p as u32,
                    country: c as u32,
                    entry,
                    down_density: down.values[(p, c)],
                    up_density: up.values[(p, c)],
                    rpop_base: rpop_base[(p, c)],
                    rpop_end: rpop_end[(p, c)],
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data("empty estimation sample".into()));
    }
    let n_possible = sampled.len() * countries.len();
    let stats = PanelStats {
        n_products: sampled.len(),
        n_countries: countries.len(),
        n_possible,
        n_absent: rows.len(),
        absent_share: rows.len() as f64 / n_possible as f64,
        n_entries,
        entry_rate: n_entries as f64 / rows.len() as f64,
    };
    Ok(EntryPanel {
        products: net.nodes.clone(),
        countries,
        rows,
        stats,
    })
}

impl EntryPanel {
    /// Writes `panel.csv` with the spec header.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record([
            "product_hs4",
            "country_iso3",
            "entry",
            "down_density",
            "up_density",
            "rpop_base",
            "rpop_end",
        ])
        .map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            w.write_record([
                self.products[r.product as usize].clone(),
                self.countries[r.country as usize].clone(),
                (r.entry as u8).to_string(),
                r.down_density.to_string(),
                r.up_density.to_string(),
                r.rpop_base.to_string(),
                r.rpop_end.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regressor {
    Down,
    Up,
}

/// Probit result for the entry panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryProbit {
    pub fit: ProbitFit,
    pub fixed_effects: bool,
    pub regressors: Vec<Regressor>,
    /// Products/countries dropped because all their sampled outcomes agree.
    pub dropped_products: Vec<String>,
    pub dropped_countries: Vec<String>,
    pub n_rows_used: usize,
    /// Pooled AUC over 5 country-grouped folds of the no-fixed-effect model.
    pub auc_grouped_cv: Option<f64>,
}

/// Fits the entry probit. With fixed effects, products and countries whose
/// sampled outcomes are all-0 or all-1 predict perfectly and are dropped
/// (iteratively, since dropping one group can degenerate another).
pub fn probit_entry(
    panel: &EntryPanel,
    regressors: &[Regressor],
    fixed_effects: bool,
    opts: &ProbitOptions,
) -> Result<EntryProbit> {
    if regressors.is_empty() {
        return Err(Error::Config("at least one density regressor required".into()));
    }
    let mut keep: Vec<bool> = vec![true; panel.rows.len()];
    let mut dropped_products: Vec<String> = Vec::new();
    let mut dropped_countries: Vec<String> = Vec::new();
    if fixed_effects {
        loop {
            let mut changed = false;
            for (labels, pick, dropped) in [
                (
                    &panel.products,
                    Box::new(|r: &PanelRow| r.product) as Box<dyn Fn(&PanelRow) -> u32>,
                    &mut dropped_products,
                ),
                (
                    &panel.countries,
                    Box::new(|r: &PanelRow| r.country) as Box<dyn Fn(&PanelRow) -> u32>,
                    &mut dropped_countries,
                ),
            ] {
                let mut group_counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
                for (i, r) in panel.rows.iter().enumerate() {
                    if keep[i] {
                        let entry = group_counts.entry(pick(r)).or_insert((0, 0));
                        entry.0 += 1;
                        if r.entry {
                            entry.1 += 1;
                        }
                    }
                }
                let degenerate: Vec<u32> = group_counts
                    .iter()
                    .filter(|(_, &(total, ones))| ones == 0 || ones == total)
                    .map(|(&g, _)| g)
                    .collect();
                if !degenerate.is_empty() {
                    for (i, r) in panel.rows.iter().enumerate() {
                        if keep[i] && degenerate.contains(&pick(r)) {
                            keep[i] = false;
                            changed = true;
                        }
                    }
                    for g in degenerate {
                        let label = labels[g as usize].clone();
                        if !dropped.contains(&label) {
                            dropped.push(label);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    let rows: Vec<&PanelRow> = panel
        .rows
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r)
        .collect();
    if rows.is_empty() {
        return Err(Error::Data(
            "perfect-prediction filtering removed every observation".into(),
        ));
    }

    // remaining factor levels, reference level first
    let products_used: Vec<u32> = {
        let mut v: Vec<u32> = rows.iter().map(|r| r.product).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let countries_used: Vec<u32> = {
        let mut v: Vec<u32> = rows.iter().map(|r| r.country).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let mut names: Vec<String> = vec!["const".into()];
    for r in regressors {
        names.push(match r {
            Regressor::Down => "down_density".into(),
            Regressor::Up => "up_density".into(),
        });
    }
    let mut product_col: BTreeMap<u32, usize> = BTreeMap::new();
    let mut country_col: BTreeMap<u32, usize> = BTreeMap::new();
    if fixed_effects {
        for &p in products_used.iter().skip(1) {
            product_col.insert(p, names.len());
            names.push(format!("product:{}", panel.products[p as usize]));
        }
        for &c in countries_used.iter().skip(1) {
            country_col.insert(c, names.len());
            names.push(format!("country:{}", panel.countries[c as usize]));
        }
    }

    let n = rows.len();
    let p = names.len();
    let mut x = DMatrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    for (i, r) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (j, reg) in regressors.iter().enumerate() {
            x[(i, j + 1)] = match reg {
                Regressor::Down => r.down_density,
                Regressor::Up => r.up_density,
            };
        }
        if fixed_effects {
            if let Some(&col) = product_col.get(&r.product) {
                x[(i, col)] = 1.0;
            }
            if let Some(&col) = country_col.get(&r.country) {
                x[(i, col)] = 1.0;
            }
        }
        y.push(r.entry);
    }
    let fit = fit_probit(&x, &y, &names, opts)?;

    let auc_grouped_cv = grouped_cv_auc(&rows, regressors, opts);

    Ok(EntryProbit {
        fit,
        fixed_effects,
        regressors: regressors.to_vec(),
        dropped_products,
        dropped_countries,
        n_rows_used: n,
        auc_grouped_cv,
    })
}

/// 5-fold AUC with folds grouped by country, on the plain
/// intercept-plus-density model (held-out countries have no estimable fixed
/// effect, so the CV check always uses the no-FE design).
fn grouped_cv_auc(rows: &[&PanelRow], regressors: &[Regressor], opts: &ProbitOptions) -> Option<f64> {
    let folds = 5;
    let mut scores = Vec::new();
    let mut outcomes = Vec::new();
    let names: Vec<String> = std::iter::once("const".to_string())
        .chain(regressors.iter().map(|r| match r {
            Regressor::Down => "down_density".to_string(),
            Regressor::Up => "up_density".to_string(),
        }))
        .collect();
    for fold in 0..folds {
        let train: Vec<&&PanelRow> = rows.iter().filter(|r| r.country % folds != fold).collect();
        let test: Vec<&&PanelRow> = rows.iter().filter(|r| r.country % folds == fold).collect();
        if train.is_empty() || test.is_empty() {
            continue;
        }
        let design = |set: &[&&PanelRow]| -> (DMatrix<f64>, Vec<bool>) {
            let mut x = DMatrix::zeros(set.len(), 1 + regressors.len());
            let mut y = Vec::with_capacity(set.len());
            for (i, r) in set.iter().enumerate() {
                x[(i, 0)] = 1.0;
                for (j, reg) in regressors.iter().enumerate() {
                    x[(i, j + 1)] = match reg {
                        Regressor::Down => r.down_density,
                        Regressor::Up => r.up_density,
                    };
                }
                y.push(r.entry);
            }
            (x, y)
        };
        let (xt, yt) = design(&train);
        if yt.iter().all(|&b| b) || yt.iter().all(|&b| !b) {
            continue;
        }
        let fit = match fit_probit(&xt, &yt, &names, opts) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let (xs, ys) = design(&test);
        let beta = nalgebra::DVector::from_vec(fit.coefficients.clone());
        let index = &xs * &beta;
        for (i, &yi) in ys.iter().enumerate() {
            scores.push(index[i]);
            outcomes.push(yi);
        }
    }
    auc(&scores, &outcomes).ok()
}

/// One cell of the firmcount × presence-threshold sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub firmcount: u32,
    pub presence_threshold: f64,
    pub auc_down: f64,
    pub auc_up: f64,
    pub n_sample: usize,
    pub entry_rate: f64,
    pub n_edges: usize,
}

/// Rebuilds the network for each firmcount, re-derives the panel for each
/// presence threshold, and reports in-sample AUCs of the single-regressor
/// probits.
pub fn threshold_sweep(
    world: &CleanWorld,
    base: &TradeMatrix,
    end: &TradeMatrix,
    firmcounts: &[u32],
    presence_thresholds: &[f64],
    edge_thresholds: &EdgeThresholds,
    entry_thresholds: &EntryThresholds,
    opts: &ProbitOptions,
) -> Result<Vec<SweepCell>> {
    if firmcounts.is_empty() || presence_thresholds.is_empty() {
        return Err(Error::Config("empty sweep range".into()));
    }
    let index = ProducerBuyerIndex::build(
        world.entities.len(),
        world.products.len(),
        &world.transactions,
    );
    let mut cells = Vec::new();
    for &fc in firmcounts {
        let thresholds = EdgeThresholds {
            firmcount_min: fc,
            ..*edge_thresholds
        };
        let edges = index.build_edge_list(&thresholds);
        let net = ProductNetwork::from_candidates(
            &world.products,
            &edges,
            NetworkMeta {
                weight_threshold: Some(thresholds.weight_threshold),
                firmcount_min: Some(fc),
                value_min_usd: Some(thresholds.value_min_usd),
                source: Some("inferred".into()),
            },
        );
        for &thr in presence_thresholds {
            let entry = EntryThresholds {
                presence: thr,
                ..*entry_thresholds
            };
            let panel = build_entry_panel(&net, base, end, &entry)?;
            let down = probit_entry(&panel, &[Regressor::Down], false, opts)?;
            let up = probit_entry(&panel, &[Regressor::Up], false, opts)?;
            cells.push(SweepCell {
                firmcount: fc,
                presence_threshold: thr,
                auc_down: down.fit.auc_in_sample,
                auc_up: up.fit.auc_in_sample,
                n_sample: panel.rows.len(),
                entry_rate: panel.stats.entry_rate,
                n_edges: net.edge_count(),
            });
        }
    }
    Ok(cells)
}

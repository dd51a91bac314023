//! Country-product trade metrics: revealed comparative advantage, its
//! per-capita analogue, presence matrices, and the hub-score aggregations
//! that link network structure to complexity indices.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Export values for one year: rows are products, columns countries.
#[derive(Debug, Clone)]
pub struct TradeMatrix {
    pub products: Vec<String>,
    pub countries: Vec<String>,
    /// exports[(p, c)] in USD.
    pub exports: DMatrix<f64>,
    /// Population per country, aligned with `countries`.
    pub population: Vec<f64>,
    pub year: u16,
}

impl TradeMatrix {
    /// Loads `trade.csv` (`country_iso3,product_hs4,year,export_usd`) and
    /// `population.csv` (`country_iso3,year,population`) for one year.
    /// Countries without a population row are dropped with their exports.
    pub fn load(trade_path: &Path, population_path: &Path, year: u16) -> Result<TradeMatrix> {
        let mut reader =
            csv::Reader::from_path(trade_path).map_err(|e| Error::csv(trade_path, e))?;
        let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(trade_path, e))?;
            if record.len() < 4 {
                return Err(Error::Data(format!("malformed trade row: {record:?}")));
            }
            let row_year: u16 = record[2]
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("bad year: {}", &record[2])))?;
            if row_year != year {
                continue;
            }
            let value: f64 = record[3]
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("bad export value: {}", &record[3])))?;
            if value < 0.0 {
                return Err(Error::Data("negative export value".into()));
            }
            let country = record[0].trim().to_string();
            let product = record[1].trim().to_string();
            *cells.entry((product, country)).or_insert(0.0) += value;
        }

        let mut reader = csv::Reader::from_path(population_path)
            .map_err(|e| Error::csv(population_path, e))?;
        let mut pops: BTreeMap<String, f64> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(population_path, e))?;
            if record.len() < 3 {
                return Err(Error::Data(format!("malformed population row: {record:?}")));
            }
            let row_year: u16 = record[1]
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("bad year: {}", &record[1])))?;
            if row_year != year {
                continue;
            }
            let pop: f64 = record[2]
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("bad population: {}", &record[2])))?;
            if pop <= 0.0 {
                return Err(Error::Data("population must be positive".into()));
            }
            pops.insert(record[0].trim().to_string(), pop);
        }

        let products: Vec<String> = cells
            .keys()
            .map(|(p, _)| p.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let countries: Vec<String> = cells
            .keys()
            .map(|(_, c)| c.clone())
            .filter(|c| pops.contains_key(c))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if products.is_empty() || countries.is_empty() {
            return Err(Error::Data(format!(
                "no usable trade data for year {year}"
            )));
        }
        let pidx: BTreeMap<&str, usize> = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let cidx: BTreeMap<&str, usize> = countries
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut exports = DMatrix::zeros(products.len(), countries.len());
        for ((p, c), v) in cells {
            if let Some(&ci) = cidx.get(c.as_str()) {
                exports[(pidx[p.as_str()], ci)] += v;
            }
        }
        let population = countries.iter().map(|c| pops[c]).collect();
        Ok(TradeMatrix {
            products,
            countries,
            exports,
            population,
            year,
        })
    }

    /// World exports per product.
    pub fn product_totals(&self) -> Vec<f64> {
        (0..self.products.len())
            .map(|p| self.exports.row(p).sum())
            .collect()
    }

    /// Balassa revealed comparative advantage:
    /// (E[p,c] / Σ_p E[p,c]) / (Σ_c E[p,c] / Σ_{p,c} E). Cells with zero
    /// exports yield 0.
    pub fn rca(&self) -> Result<DMatrix<f64>> {
        let total = self.exports.sum();
        if total == 0.0 {
            return Err(Error::Data("all-zero export matrix".into()));
        }
        let country_totals: Vec<f64> = (0..self.countries.len())
            .map(|c| self.exports.column(c).sum())
            .collect();
        let product_totals = self.product_totals();
        let mut out = DMatrix::zeros(self.products.len(), self.countries.len());
        for p in 0..self.products.len() {
            for c in 0..self.countries.len() {
                let e = self.exports[(p, c)];
                if e > 0.0 {
                    out[(p, c)] = (e / country_totals[c]) / (product_totals[p] / total);
                }
            }
        }
        Ok(out)
    }

    /// Per-capita analogue: (E[p,c] / pop_c) / (E[p] / pop).
    pub fn rpop(&self) -> Result<DMatrix<f64>> {
        let world_pop: f64 = self.population.iter().sum();
        if self.exports.sum() == 0.0 {
            return Err(Error::Data("all-zero export matrix".into()));
        }
        let product_totals = self.product_totals();
        let mut out = DMatrix::zeros(self.products.len(), self.countries.len());
        for p in 0..self.products.len() {
            if product_totals[p] == 0.0 {
                continue;
            }
            let world_rate = product_totals[p] / world_pop;
            for c in 0..self.countries.len() {
                let e = self.exports[(p, c)];
                if e > 0.0 {
                    out[(p, c)] = (e / self.population[c]) / world_rate;
                }
            }
        }
        Ok(out)
    }
}

/// Binary presence: metric >= threshold.
pub fn presence_matrix(metric: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    if threshold <= 0.0 {
        return Err(Error::Config("presence threshold must be positive".into()));
    }
    Ok(metric.map(|v| if v >= threshold { 1.0 } else { 0.0 }))
}

/// Per-country share of the top-k betweenness products exported with RCA > 1.
///
/// `bc` pairs each product with its betweenness score; products missing from
/// the trade matrix count as not exported.
pub fn top_bc_export_share(
    bc: &[(String, f64)],
    trade_products: &[String],
    rca: &DMatrix<f64>,
    countries: &[String],
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 || k > bc.len() {
        return Err(Error::Config(format!(
            "top-k of {k} is out of range for {} products",
            bc.len()
        )));
    }
    let mut ranked: Vec<&(String, f64)> = bc.iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let top: Vec<&str> = ranked[..k].iter().map(|(p, _)| p.as_str()).collect();
    let pidx: BTreeMap<&str, usize> = trade_products
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut out = Vec::with_capacity(countries.len());
    for (c, country) in countries.iter().enumerate() {
        let with_rca = top
            .iter()
            .filter(|p| pidx.get(*p).is_some_and(|&pi| rca[(pi, c)] > 1.0))
            .count();
        out.push((country.clone(), with_rca as f64 / k as f64));
    }
    Ok(out)
}

/// Mean hub score over each country's RCA > 1 products; countries with no
/// such products report `None`.
pub fn country_mean_hub(
    hub: &[(String, f64)],
    trade_products: &[String],
    rca: &DMatrix<f64>,
    countries: &[String],
) -> Vec<(String, Option<f64>)> {
    let hub_by_product: BTreeMap<&str, f64> =
        hub.iter().map(|(p, h)| (p.as_str(), *h)).collect();
    let mut out = Vec::with_capacity(countries.len());
    for (c, country) in countries.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (p, product) in trade_products.iter().enumerate() {
            if rca[(p, c)] > 1.0 {
                if let Some(&h) = hub_by_product.get(product.as_str()) {
                    sum += h;
                    count += 1;
                }
            }
        }
        out.push((
            country.clone(),
            if count == 0 { None } else { Some(sum / count as f64) },
        ));
    }
    out
}

/// Loads a two-column CSV (`key,value`) of complexity scores, e.g. product
/// PCI or country ECI.
pub fn load_score_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut map = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() < 2 {
            return Err(Error::Data(format!("malformed score row: {record:?}")));
        }
        let value: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("bad score: {}", &record[1])))?;
        map.insert(record[0].trim().to_string(), value);
    }
    Ok(map)
}

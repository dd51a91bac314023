//! Synthetic firm worlds with planted ground-truth recipes.
//!
//! Each product gets a planted set of inputs; producer firms buy those inputs
//! (with probability rising in intensity), everyone buys the ubiquitous
//! "common inputs", retailers generate sale-side demand, and wholesaler-like
//! multi-product firms inject the noise the multi-section filter exists to
//! remove. Recovery of the planted edges by the inference pipeline is the
//! artifact's quantitative self-check.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    aggregate_owner_country, filter_multi_section_firms, resolve_ownership, CleanWorld,
    EntityTransaction, FirmRecord, IngestReport, OwnershipEdge, TransactionRecord,
};
use crate::hs::SectionTable;
use crate::recipe::ProducerBuyerIndex;
use crate::stats::spearman;
use crate::trade::TradeMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalSpec {
    /// Mean of the underlying normal (ln scale).
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "mode", rename_all = "lowercase")]
pub enum RecipeSpec {
    /// Random recipes drawn at generation time.
    Auto {
        inputs_per_product: usize,
        /// Intensities are drawn uniformly from [intensity_min, 1].
        intensity_min: f64,
    },
    /// Explicit map product -> [(input, intensity)].
    Explicit {
        recipes: BTreeMap<String, Vec<(String, f64)>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonInputSpec {
    /// How many products act as ubiquitous inputs (packaging-like).
    pub count: usize,
    /// Probability that any firm buys each of them.
    pub purchase_prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnershipSpec {
    /// Share of producer firms assigned to an owner shell.
    pub subsidiary_rate: f64,
    /// Average subsidiaries per owner shell.
    pub owner_group_size: usize,
    /// Probability an owner shell is flagged financial.
    pub financial_parent_rate: f64,
    /// Number of two-shell ownership cycles to plant.
    pub cycle_pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeSpec {
    pub base_year: u16,
    pub end_year: u16,
    /// Base-year presence probability for the largest country; smaller
    /// countries scale down.
    pub presence_prob: f64,
    /// Entry probability is Phi(alpha + beta * downstream truth density).
    pub entry_alpha: f64,
    pub entry_beta: f64,
    /// Background entry probability independent of density.
    pub noise_entry_prob: f64,
    /// Neighborhood size for the truth density used in planting.
    pub top_k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub seed: u64,
    pub n_products: usize,
    pub n_countries: usize,
    pub firms_per_product: usize,
    pub retailers_per_product: usize,
    pub recipes: RecipeSpec,
    pub common_inputs: CommonInputSpec,
    /// Purchase probability at intensity 0 and 1.
    pub purchase_prob_min: f64,
    pub purchase_prob_max: f64,
    /// Probability a retailer buys from each foreign producer of its product.
    pub retail_purchase_prob: f64,
    /// Per-draw probability of a random noise purchase.
    pub noise_purchase_prob: f64,
    pub noise_draws_per_firm: usize,
    /// Share of producer firms that also sell extra products.
    pub multi_product_rate: f64,
    pub multi_product_extra: usize,
    /// Zipf exponent for the country size distribution.
    pub country_zipf_exponent: f64,
    pub sale_value: LogNormalSpec,
    pub purchase_value: LogNormalSpec,
    pub ownership: OwnershipSpec,
    /// The first `sector_size` products form a densely linked planted sector.
    pub sector_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trade: Option<TradeSpec>,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            seed: 42,
            n_products: 120,
            n_countries: 20,
            firms_per_product: 70,
            retailers_per_product: 10,
            recipes: RecipeSpec::Auto {
                inputs_per_product: 5,
                intensity_min: 0.25,
            },
            common_inputs: CommonInputSpec {
                count: 3,
                purchase_prob: 0.9,
            },
            purchase_prob_min: 0.4,
            purchase_prob_max: 0.95,
            retail_purchase_prob: 0.5,
            noise_purchase_prob: 0.3,
            noise_draws_per_firm: 2,
            multi_product_rate: 0.08,
            multi_product_extra: 9,
            country_zipf_exponent: 0.8,
            sale_value: LogNormalSpec {
                mu: 10.8,
                sigma: 1.0,
            },
            purchase_value: LogNormalSpec {
                mu: 9.9,
                sigma: 0.5,
            },
            ownership: OwnershipSpec {
                subsidiary_rate: 0.1,
                owner_group_size: 3,
                financial_parent_rate: 0.15,
                cycle_pairs: 2,
            },
            sector_size: 10,
            trade: Some(TradeSpec {
                base_year: 2016,
                end_year: 2021,
                presence_prob: 0.4,
                entry_alpha: -2.2,
                entry_beta: 2.6,
                noise_entry_prob: 0.003,
                top_k: 10,
            }),
        }
    }
}

impl WorldSpec {
    pub fn from_json_file(path: &Path) -> Result<WorldSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad world spec {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            self.common_inputs.purchase_prob,
            self.purchase_prob_min,
            self.purchase_prob_max,
            self.retail_purchase_prob,
            self.noise_purchase_prob,
            self.multi_product_rate,
            self.ownership.subsidiary_rate,
            self.ownership.financial_parent_rate,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("world spec probabilities must lie in [0,1]".into()));
        }
        if self.n_products < 2 || self.n_countries < 2 || self.firms_per_product == 0 {
            return Err(Error::Config("world spec is too small to generate".into()));
        }
        if self.common_inputs.count + self.sector_size > self.n_products {
            return Err(Error::Config(
                "common inputs and sector overlap: shrink one of them".into(),
            ));
        }
        if let RecipeSpec::Auto { intensity_min, .. } = self.recipes {
            if !(0.0..=1.0).contains(&intensity_min) {
                return Err(Error::Config("intensity_min must lie in [0,1]".into()));
            }
        }
        Ok(())
    }
}

/// A generated world, CSV-ready.
#[derive(Debug, Clone)]
pub struct GeneratedWorld {
    pub spec: WorldSpec,
    pub products: Vec<String>,
    pub firms: Vec<FirmRecord>,
    pub ownership: Vec<OwnershipEdge>,
    pub transactions: Vec<TransactionRecord>,
    /// Planted recipe edges: (input, product, intensity).
    pub truth_edges: Vec<(String, String, f64)>,
    /// Products forming the planted dense sector.
    pub sector: Vec<String>,
    /// Codes of the ubiquitous common-input products.
    pub common_products: Vec<String>,
    pub trade_base: Option<TradeMatrix>,
    pub trade_end: Option<TradeMatrix>,
}

fn product_code(i: usize) -> String {
    // chapters 01..=96 cycle; the second pair distinguishes repeats
    let chapter = (i % 96) + 1;
    let sub = i / 96;
    format!("{chapter:02}{sub:02}")
}

fn country_code(i: usize) -> String {
    let a = (i / 676) % 26;
    let b = (i / 26) % 26;
    let c = i % 26;
    format!(
        "{}{}{}",
        (b'A' + a as u8) as char,
        (b'A' + b as u8) as char,
        (b'A' + c as u8) as char
    )
}

/// Cumulative Zipf weights over country indices.
fn zipf_cdf(n: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) as f64).powf(exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cdf.push(acc);
    }
    cdf
}

fn draw_from_cdf(rng: &mut ChaCha8Rng, cdf: &[f64]) -> usize {
    let u: f64 = rng.random_range(0.0..1.0);
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

struct FirmPlan {
    id: String,
    country: usize,
    /// Products this firm sells (empty for retailers).
    sells: Vec<usize>,
    /// For retailers: the product they demand.
    retail_of: Option<usize>,
}

pub fn generate_world(spec: &WorldSpec) -> Result<GeneratedWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_products;
    let products: Vec<String> = (0..n).map(product_code).collect();
    let country_cdf = zipf_cdf(spec.n_countries, spec.country_zipf_exponent);

    // common inputs are the last `count` products; the sector the first ones
    let common: Vec<usize> = (n - spec.common_inputs.count..n).collect();
    let common_set: BTreeSet<usize> = common.iter().copied().collect();
    let sector: Vec<usize> = (0..spec.sector_size).collect();

    // planted recipes
    let recipes: Vec<Vec<(usize, f64)>> = match &spec.recipes {
        RecipeSpec::Explicit { recipes } => {
            let index: BTreeMap<&str, usize> = products
                .iter()
                .enumerate()
                .map(|(i, p)| (p.as_str(), i))
                .collect();
            let mut out = vec![Vec::new(); n];
            for (product, inputs) in recipes {
                let j = *index
                    .get(product.as_str())
                    .ok_or_else(|| Error::Config(format!("recipe for unknown product {product}")))?;
                for (input, intensity) in inputs {
                    let i = *index
                        .get(input.as_str())
                        .ok_or_else(|| Error::Config(format!("unknown recipe input {input}")))?;
                    if *intensity < 0.0 {
                        return Err(Error::Config("recipe intensity must be non-negative".into()));
                    }
                    out[j].push((i, *intensity));
                }
            }
            out
        }
        RecipeSpec::Auto {
            inputs_per_product,
            intensity_min,
        } => {
            let eligible: Vec<usize> = (0..n).filter(|i| !common_set.contains(i)).collect();
            let mut out = vec![Vec::new(); n];
            for (j, recipe) in out.iter_mut().enumerate() {
                let mut chosen = BTreeSet::new();
                // sector products draw most inputs from inside the sector
                let want = *inputs_per_product;
                let mut guard = 0;
                while chosen.len() < want.min(eligible.len().saturating_sub(1)) && guard < 10_000 {
                    guard += 1;
                    let pick = if sector.contains(&j) && chosen.len() < (want * 7) / 10 {
                        sector[rng.random_range(0..sector.len())]
                    } else {
                        eligible[rng.random_range(0..eligible.len())]
                    };
                    if pick != j {
                        chosen.insert(pick);
                    }
                }
                for i in chosen {
                    let intensity = rng.random_range(*intensity_min..=1.0);
                    recipe.push((i, intensity));
                }
            }
            out
        }
    };

    // firms: producers per product, plus retailers
    let mut plans: Vec<FirmPlan> = Vec::new();
    for p in 0..n {
        for _ in 0..spec.firms_per_product {
            let mut sells = vec![p];
            if rng.random_bool(spec.multi_product_rate) {
                let mut extras = BTreeSet::new();
                let mut guard = 0;
                while extras.len() < spec.multi_product_extra && guard < 10_000 {
                    guard += 1;
                    let pick = rng.random_range(0..n);
                    if pick != p {
                        extras.insert(pick);
                    }
                }
                sells.extend(extras);
            }
            plans.push(FirmPlan {
                id: format!("F{:06}", plans.len()),
                country: draw_from_cdf(&mut rng, &country_cdf),
                sells,
                retail_of: None,
            });
        }
    }
    for p in 0..n {
        for _ in 0..spec.retailers_per_product {
            plans.push(FirmPlan {
                id: format!("R{:06}", plans.len()),
                country: draw_from_cdf(&mut rng, &country_cdf),
                sells: Vec::new(),
                retail_of: Some(p),
            });
        }
    }

    // producer pool per product (indices into plans)
    let mut producers_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, plan) in plans.iter().enumerate() {
        for &p in &plan.sells {
            producers_of[p].push(idx);
        }
    }
    for pool in &producers_of {
        if pool.is_empty() {
            return Err(Error::Config("a product ended up with no producers".into()));
        }
    }

    // ownership shells
    let mut firms: Vec<FirmRecord> = plans
        .iter()
        .map(|plan| FirmRecord {
            firm_id: plan.id.clone(),
            country: country_code(plan.country),
            is_financial: false,
        })
        .collect();
    let mut ownership: Vec<OwnershipEdge> = Vec::new();
    let n_subsidiaries = ((plans.len() as f64) * spec.ownership.subsidiary_rate) as usize;
    let n_shells = (n_subsidiaries / spec.ownership.owner_group_size.max(1)).max(1);
    if n_subsidiaries > 0 {
        for g in 0..n_shells {
            firms.push(FirmRecord {
                firm_id: format!("O{g:05}"),
                country: country_code(draw_from_cdf(&mut rng, &country_cdf)),
                is_financial: rng.random_bool(spec.ownership.financial_parent_rate),
            });
        }
        for _ in 0..n_subsidiaries {
            let child = rng.random_range(0..plans.len());
            let shell = rng.random_range(0..n_shells);
            ownership.push(OwnershipEdge {
                child_id: plans[child].id.clone(),
                parent_id: format!("O{shell:05}"),
                share: Some(rng.random_range(0.5..1.0)),
            });
        }
        for c in 0..spec.ownership.cycle_pairs.min(n_shells / 2) {
            let a = format!("O{:05}", 2 * c);
            let b = format!("O{:05}", 2 * c + 1);
            ownership.push(OwnershipEdge {
                child_id: a.clone(),
                parent_id: b.clone(),
                share: None,
            });
            ownership.push(OwnershipEdge {
                child_id: b,
                parent_id: a,
                share: None,
            });
        }
    }

    // transactions, buyer-driven; every firm gets its own stream so output
    // is independent of generation order
    let months: Vec<String> = (2021..=2023)
        .flat_map(|y| (1..=12).map(move |m| format!("{y:04}-{m:02}")))
        .collect();
    let purchase_dist = LogNormal::new(spec.purchase_value.mu, spec.purchase_value.sigma)
        .map_err(|e| Error::Config(format!("bad purchase value parameters: {e}")))?;
    let sale_dist = LogNormal::new(spec.sale_value.mu, spec.sale_value.sigma)
        .map_err(|e| Error::Config(format!("bad sale value parameters: {e}")))?;

    let mut transactions: Vec<TransactionRecord> = Vec::new();
    for (f_idx, plan) in plans.iter().enumerate() {
        let mut frng = ChaCha8Rng::seed_from_u64(spec.seed);
        frng.set_stream(1_000_000 + f_idx as u64);
        let buy = |product: usize,
                   value: f64,
                   frng: &mut ChaCha8Rng,
                   transactions: &mut Vec<TransactionRecord>| {
            let pool = &producers_of[product];
            let foreign: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&g| plans[g].country != plan.country && g != f_idx)
                .collect();
            if foreign.is_empty() {
                return;
            }
            let supplier = foreign[frng.random_range(0..foreign.len())];
            let period = &months[frng.random_range(0..months.len())];
            transactions.push(TransactionRecord {
                supplier_id: plans[supplier].id.clone(),
                buyer_id: plan.id.clone(),
                product: products[product].clone(),
                value_usd: (value * 100.0).round() / 100.0,
                period: period.parse().unwrap(),
            });
        };

        // recipe inputs for every product the firm sells
        for &p in &plan.sells {
            for &(input, intensity) in &recipes[p] {
                let prob = spec.purchase_prob_min
                    + (spec.purchase_prob_max - spec.purchase_prob_min) * intensity.min(1.0);
                if frng.random_bool(prob.clamp(0.0, 1.0)) {
                    let value = purchase_dist.sample(&mut frng);
                    buy(input, value, &mut frng, &mut transactions);
                }
            }
        }
        // ubiquitous common inputs
        for &u in &common {
            if frng.random_bool(spec.common_inputs.purchase_prob) {
                let value = purchase_dist.sample(&mut frng);
                buy(u, value, &mut frng, &mut transactions);
            }
        }
        // background noise purchases
        for _ in 0..spec.noise_draws_per_firm {
            if frng.random_bool(spec.noise_purchase_prob) {
                let product = frng.random_range(0..n);
                let value = purchase_dist.sample(&mut frng);
                buy(product, value, &mut frng, &mut transactions);
            }
        }
        // retail demand gives producers their sale volume; values are scaled
        // by the pool size so a retailer's total purchase stays comparable
        // to a producer's input purchase instead of dominating the buyer mean
        if let Some(p) = plan.retail_of {
            let pool = producers_of[p].len() as f64;
            for &g in &producers_of[p] {
                if plans[g].country != plan.country && frng.random_bool(spec.retail_purchase_prob)
                {
                    let value = sale_dist.sample(&mut frng) / pool;
                    buy(p, value, &mut frng, &mut transactions);
                }
            }
        }
    }

    let truth_edges: Vec<(String, String, f64)> = (0..n)
        .flat_map(|j| {
            recipes[j]
                .iter()
                .map(move |&(i, intensity)| (i, j, intensity))
                .collect::<Vec<_>>()
        })
        .map(|(i, j, intensity)| (products[i].clone(), products[j].clone(), intensity))
        .collect();

    let (trade_base, trade_end) = match &spec.trade {
        Some(ts) => {
            let (b, e) = generate_trade(spec, ts, &products, &recipes)?;
            (Some(b), Some(e))
        }
        None => (None, None),
    };

    Ok(GeneratedWorld {
        spec: spec.clone(),
        products: products.clone(),
        firms,
        ownership,
        transactions,
        truth_edges,
        sector: sector.iter().map(|&i| products[i].clone()).collect(),
        common_products: common.iter().map(|&i| products[i].clone()).collect(),
        trade_base,
        trade_end,
    })
}

/// Plants base-year presence and density-driven entries on the truth network.
fn generate_trade(
    spec: &WorldSpec,
    ts: &TradeSpec,
    products: &[String],
    recipes: &[Vec<(usize, f64)>],
) -> Result<(TradeMatrix, TradeMatrix)> {
    use statrs::distribution::ContinuousCDF;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2_000_000);
    let n = products.len();
    let n_c = spec.n_countries;
    let countries: Vec<String> = (0..n_c).map(country_code).collect();
    let population: Vec<f64> = (0..n_c)
        .map(|k| (1e7 / ((k + 1) as f64).powf(spec.country_zipf_exponent)).round())
        .collect();

    // base-year target rpop levels
    let mut r_base = vec![vec![0.0f64; n_c]; n];
    for p in 0..n {
        for (c, rb) in r_base[p].iter_mut().enumerate() {
            let presence_prob = ts.presence_prob / ((c + 1) as f64).powf(0.3);
            if rng.random_bool(presence_prob.clamp(0.0, 1.0)) {
                *rb = rng.random_range(1.5..6.0);
            } else if rng.random_bool(0.5) {
                *rb = rng.random_range(0.0..0.04);
            }
        }
    }
    normalize_rpop_targets(&mut r_base, &population);

    // downstream truth density on base presence (target side of truth edges)
    let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, recipe) in recipes.iter().enumerate() {
        for &(i, intensity) in recipe {
            out_edges[i].push((j, intensity));
        }
    }
    for list in &mut out_edges {
        list.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        list.truncate(ts.top_k);
    }

    let mut r_end = r_base.clone();
    for p in 0..n {
        for c in 0..n_c {
            if r_base[p][c] < 0.05 {
                let density = if out_edges[p].is_empty() {
                    0.0
                } else {
                    out_edges[p]
                        .iter()
                        .filter(|(j, _)| r_base[*j][c] >= 1.0)
                        .count() as f64
                        / out_edges[p].len() as f64
                };
                let prob = normal.cdf(ts.entry_alpha + ts.entry_beta * density)
                    + ts.noise_entry_prob;
                if rng.random_bool(prob.clamp(0.0, 1.0)) {
                    r_end[p][c] = rng.random_range(0.3..1.5);
                }
            } else {
                // incumbent growth noise
                r_end[p][c] *= rng.random_range(0.8..1.25);
            }
        }
    }
    normalize_rpop_targets(&mut r_end, &population);

    let build = |targets: &[Vec<f64>], year: u16| -> TradeMatrix {
        let mut exports = nalgebra::DMatrix::zeros(n, n_c);
        for p in 0..n {
            for c in 0..n_c {
                // per-capita rate scaled up so values look like trade dollars
                exports[(p, c)] = targets[p][c] * population[c] * 1e3;
            }
        }
        TradeMatrix {
            products: products.to_vec(),
            countries: countries.clone(),
            exports,
            population: population.clone(),
            year,
        }
    };
    Ok((build(&r_base, ts.base_year), build(&r_end, ts.end_year)))
}

/// Rescales per-product targets so the population-weighted world mean is 1,
/// making the targets equal to the Rpop values the trade matrix will yield.
fn normalize_rpop_targets(targets: &mut [Vec<f64>], population: &[f64]) {
    let world_pop: f64 = population.iter().sum();
    for row in targets.iter_mut() {
        let mean: f64 = row
            .iter()
            .zip(population)
            .map(|(r, p)| r * p)
            .sum::<f64>()
            / world_pop;
        if mean > 0.0 {
            for v in row.iter_mut() {
                *v /= mean;
            }
        }
    }
}

impl GeneratedWorld {
    /// Writes the ingest-schema CSVs plus truth and sector files.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("firms.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["firm_id", "country", "is_financial"])
            .map_err(|e| Error::csv(&path, e))?;
        for f in &self.firms {
            let flag = if f.is_financial { "true" } else { "false" };
            w.write_record([f.firm_id.as_str(), f.country.as_str(), flag])
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("ownership.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["child_id", "parent_id", "share"])
            .map_err(|e| Error::csv(&path, e))?;
        for edge in &self.ownership {
            w.write_record([
                edge.child_id.clone(),
                edge.parent_id.clone(),
                edge.share.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("transactions.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["supplier_id", "buyer_id", "product_hs4", "value_usd", "period"])
            .map_err(|e| Error::csv(&path, e))?;
        for t in &self.transactions {
            w.write_record([
                t.supplier_id.clone(),
                t.buyer_id.clone(),
                t.product.clone(),
                t.value_usd.to_string(),
                t.period.to_string(),
            ])
            .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("truth_edges.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["source_hs4", "target_hs4", "intensity"])
            .map_err(|e| Error::csv(&path, e))?;
        for (s, t, i) in &self.truth_edges {
            w.write_record([s.clone(), t.clone(), i.to_string()])
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("sector.txt");
        std::fs::write(&path, self.sector.join("\n") + "\n").map_err(|e| Error::io(&path, e))?;

        if let (Some(base), Some(end)) = (&self.trade_base, &self.trade_end) {
            write_trade_csv(&dir.join("trade_base.csv"), base)?;
            write_trade_csv(&dir.join("trade_end.csv"), end)?;
            let path = dir.join("population.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
            w.write_record(["country_iso3", "year", "population"])
                .map_err(|e| Error::csv(&path, e))?;
            for tm in [base, end] {
                for (c, pop) in tm.countries.iter().zip(&tm.population) {
                    w.write_record([c.clone(), tm.year.to_string(), pop.to_string()])
                        .map_err(|e| Error::csv(&path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Runs the in-memory equivalent of the ingest stage. `apply_filter`
    /// toggles the multi-section firm filter.
    pub fn to_clean_world(&self, apply_filter: bool) -> Result<CleanWorld> {
        let owners = resolve_ownership(&self.firms, &self.ownership);
        let (entities, keyed, unknown_firm, intra_owner) =
            aggregate_owner_country(&self.firms, &owners, &self.transactions);
        let entities_before_filter = entities.len();
        let (entities, keyed, entities_removed, multi_section_rows) = if apply_filter {
            filter_multi_section_firms(entities, keyed, &SectionTable::builtin())?
        } else {
            (entities, keyed, 0, 0)
        };
        let entity_index: BTreeMap<String, u32> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.key(), i as u32))
            .collect();
        let product_index: BTreeMap<&str, u32> = self
            .products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i as u32))
            .collect();
        let mut txs: Vec<EntityTransaction> = keyed
            .iter()
            .map(|(s, b, p, v)| EntityTransaction {
                supplier: entity_index[&s.key()],
                buyer: entity_index[&b.key()],
                product: product_index[p.as_str()],
                value_usd: *v,
            })
            .collect();
        txs.sort_by(|a, b| {
            (a.supplier, a.buyer, a.product)
                .cmp(&(b.supplier, b.buyer, b.product))
                .then(a.value_usd.partial_cmp(&b.value_usd).unwrap())
        });
        let report = IngestReport {
            rows_read: self.transactions.len(),
            load_rejected: BTreeMap::new(),
            unknown_firm,
            intra_owner,
            multi_section_rows,
            entities_before_filter,
            entities_removed,
            accepted: txs.len(),
        };
        Ok(CleanWorld {
            entities,
            products: self.products.clone(),
            transactions: txs,
            report,
        })
    }
}

fn write_trade_csv(path: &Path, tm: &TradeMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["country_iso3", "product_hs4", "year", "export_usd"])
        .map_err(|e| Error::csv(path, e))?;
    for (p, product) in tm.products.iter().enumerate() {
        for (c, country) in tm.countries.iter().enumerate() {
            let v = tm.exports[(p, c)];
            if v > 0.0 {
                w.write_record([
                    country.clone(),
                    product.clone(),
                    tm.year.to_string(),
                    v.to_string(),
                ])
                .map_err(|e| Error::csv(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Binary retrieval scores of an inferred edge list against the truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub n_inferred: usize,
    pub n_truth: usize,
    pub n_hit: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Rank correlation of inferred weight vs planted intensity on hits.
    pub weight_intensity_spearman: Option<f64>,
    /// Set when precision is reported 0 because nothing was inferred.
    pub inferred_empty: bool,
}

pub fn score_recovery(
    inferred: &[(String, String, f64)],
    truth: &[(String, String, f64)],
) -> RecoveryScore {
    let truth_map: BTreeMap<(&str, &str), f64> = truth
        .iter()
        .map(|(s, t, i)| ((s.as_str(), t.as_str()), *i))
        .collect();
    let mut n_hit = 0usize;
    let mut weights = Vec::new();
    let mut intensities = Vec::new();
    for (s, t, w) in inferred {
        if let Some(&intensity) = truth_map.get(&(s.as_str(), t.as_str())) {
            n_hit += 1;
            weights.push(*w);
            intensities.push(intensity);
        }
    }
    let inferred_empty = inferred.is_empty();
    let precision = if inferred_empty {
        0.0
    } else {
        n_hit as f64 / inferred.len() as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        n_hit as f64 / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RecoveryScore {
        n_inferred: inferred.len(),
        n_truth: truth.len(),
        n_hit,
        precision,
        recall,
        f1,
        weight_intensity_spearman: spearman(&weights, &intensities).ok(),
        inferred_empty,
    }
}

/// Loads an edge list CSV with a numeric third column (weight or intensity).
pub fn load_scored_edges(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() < 3 {
            return Err(Error::Data(format!("malformed edge row: {record:?}")));
        }
        let v: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("bad numeric column: {}", &record[2])))?;
        out.push((record[0].trim().to_string(), record[1].trim().to_string(), v));
    }
    Ok(out)
}

/// Fraction of target products for which a given source product's raw ratio
/// stays below the edge threshold (or produces no edge at all).
pub fn downweighted_fraction(index: &ProducerBuyerIndex, source: u32, threshold: f64) -> f64 {
    let n = index.n_products as u32;
    let mut below = 0usize;
    let mut total = 0usize;
    for target in 0..n {
        if target == source || index.producer_set(target).is_empty() {
            continue;
        }
        total += 1;
        match index.excess_purchase_ratio(source, target) {
            Some(edge) if edge.weight > threshold => {}
            _ => below += 1,
        }
    }
    if total == 0 {
        1.0
    } else {
        below as f64 / total as f64
    }
}

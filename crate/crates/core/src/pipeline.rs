//! End-to-end pipeline orchestration: synth → ingest → infer → analyze →
//! communities → subgraph test → predict → score, with a manifest recording
//! input digests, seeds, and wall times.
//!
//! Every stage writes deterministic artifacts; the manifest isolates volatile
//! data (timestamps, durations) under its `timing` field so runs can be
//! compared byte-for-byte on everything else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::communities::{stability_scan, time_grid, DEFAULT_TAU};
use crate::compare::EdgeMode;
use crate::diversification::{build_entry_panel, probit_entry, EntryThresholds, Regressor};
use crate::error::{Error, Result};
use crate::hs::{Concordance, SectionTable};
use crate::ingest::{ingest, CleanWorld, Window};
use crate::network::{
    degrees, goods_classification, load_classification_csv, NetworkMeta, ProductNetwork,
};
use crate::centrality::{betweenness, hits, HITS_DEFAULT_MAX_ITER, HITS_DEFAULT_TOL};
use crate::probit::ProbitOptions;
use crate::recipe::{write_edges_csv, EdgeThresholds, ProducerBuyerIndex};
use crate::significance::{null_ensemble_pvalue, ModularityOptions};
use crate::synth::{generate_world, load_scored_edges, score_recovery, WorldSpec};
use crate::trade::TradeMatrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputPaths {
    pub transactions: Option<PathBuf>,
    pub firms: Option<PathBuf>,
    pub ownership: Option<PathBuf>,
    pub concordance: Option<PathBuf>,
    pub sections: Option<PathBuf>,
    pub trade_base: Option<PathBuf>,
    pub trade_end: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub sector: Option<PathBuf>,
    pub bec: Option<PathBuf>,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            transactions: None,
            firms: None,
            ownership: None,
            concordance: None,
            sections: None,
            trade_base: None,
            trade_end: None,
            population: None,
            sector: None,
            bec: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferConfig {
    pub weight_threshold: f64,
    pub firmcount: u32,
    pub value_min_usd: f64,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            weight_threshold: 2.0,
            firmcount: 2,
            value_min_usd: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub weighted_betweenness: bool,
    pub use_wcc: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            weighted_betweenness: false,
            use_wcc: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommunitiesConfig {
    pub tmin: f64,
    pub tmax: f64,
    pub steps: usize,
    pub iterations: usize,
    pub seed: u64,
    pub tau: f64,
}

impl Default for CommunitiesConfig {
    fn default() -> Self {
        CommunitiesConfig {
            tmin: 0.1,
            tmax: 100.0,
            steps: 40,
            iterations: 100,
            seed: 7,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignificanceConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            samples: 100_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub base_year: u16,
    pub end_year: u16,
    pub fixed_effects: bool,
    pub absence_threshold: f64,
    pub presence_threshold: f64,
    pub density_presence_threshold: f64,
    pub trade_min_usd: f64,
    pub top_k: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            base_year: 2016,
            end_year: 2021,
            fixed_effects: true,
            absence_threshold: 0.05,
            presence_threshold: 0.1,
            density_presence_threshold: 1.0,
            // synthetic trade values are small; real runs override this
            trade_min_usd: 0.0,
            top_k: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// When set, inputs are generated into `<out>/data` before ingesting.
    pub synth: Option<WorldSpec>,
    pub inputs: InputPaths,
    pub window: String,
    pub infer: InferConfig,
    pub analyze: AnalyzeConfig,
    pub communities: CommunitiesConfig,
    pub significance: SignificanceConfig,
    pub predict: PredictConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            synth: Some(WorldSpec::default()),
            inputs: InputPaths::default(),
            window: "2021-01:2023-12".into(),
            infer: InferConfig::default(),
            analyze: AnalyzeConfig::default(),
            communities: CommunitiesConfig::default(),
            significance: SignificanceConfig::default(),
            predict: PredictConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad pipeline config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Volatile fields; excluded from determinism comparisons.
    pub timing: ManifestTiming,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestTiming {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub stage_ms: BTreeMap<String, u128>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Reads a sector list: one HS4 code per line, `#` comments allowed.
pub fn read_sector_file(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Runs the configured pipeline into `out_dir`. Missing inputs are collected
/// into a single error before any work starts.
pub fn run_pipeline(config: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    let started = now_ms();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let resolved = serde_json::to_string_pretty(config).map_err(|e| Error::json("config", e))?;
    std::fs::write(out_dir.join("config.resolved.json"), resolved)
        .map_err(|e| Error::io(out_dir.join("config.resolved.json"), e))?;

    let mut stage_ms: BTreeMap<String, u128> = BTreeMap::new();
    let mut seeds: BTreeMap<String, u64> = BTreeMap::new();
    let mut paths = config.inputs.clone();

    // stage: synth
    if let Some(spec) = &config.synth {
        let t0 = Instant::now();
        let data_dir = out_dir.join("data");
        let world = generate_world(spec)?;
        world.write_dir(&data_dir)?;
        seeds.insert("synth".into(), spec.seed);
        paths.transactions = Some(data_dir.join("transactions.csv"));
        paths.firms = Some(data_dir.join("firms.csv"));
        paths.ownership = Some(data_dir.join("ownership.csv"));
        paths.sector = Some(data_dir.join("sector.txt"));
        if world.trade_base.is_some() {
            paths.trade_base = Some(data_dir.join("trade_base.csv"));
            paths.trade_end = Some(data_dir.join("trade_end.csv"));
            paths.population = Some(data_dir.join("population.csv"));
        }
        stage_ms.insert("synth".into(), t0.elapsed().as_millis());
    }

    // aggregate missing-input check before any processing
    let mut required: Vec<(&str, &Option<PathBuf>)> = vec![
        ("transactions", &paths.transactions),
        ("firms", &paths.firms),
        ("ownership", &paths.ownership),
    ];
    if paths.trade_base.is_some() || paths.trade_end.is_some() {
        required.push(("trade_base", &paths.trade_base));
        required.push(("trade_end", &paths.trade_end));
        required.push(("population", &paths.population));
    }
    let mut missing: Vec<String> = Vec::new();
    for (name, path) in &required {
        match path {
            None => missing.push(format!("{name} (not configured)")),
            Some(p) if !p.exists() => missing.push(format!("{name} ({})", p.display())),
            _ => {}
        }
    }
    for (name, path) in [
        ("concordance", &paths.concordance),
        ("sections", &paths.sections),
        ("sector", &paths.sector),
        ("bec", &paths.bec),
    ] {
        if let Some(p) = path {
            if !p.exists() {
                missing.push(format!("{name} ({})", p.display()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "missing inputs: {}",
            missing.join("; ")
        )));
    }
    let mut inputs: BTreeMap<String, String> = BTreeMap::new();
    for (name, path) in required {
        if let Some(p) = path {
            inputs.insert(name.to_string(), sha256_file(p)?);
        }
    }

    // stage: ingest
    let t0 = Instant::now();
    let concordance = match &paths.concordance {
        Some(p) => Concordance::from_csv(p)?,
        None => Concordance::identity(),
    };
    let sections = match &paths.sections {
        Some(p) => SectionTable::from_csv(p)?,
        None => SectionTable::builtin(),
    };
    let window: Window = config
        .window
        .parse()
        .map_err(|e: String| Error::Config(e))?;
    let clean = ingest(
        paths.transactions.as_ref().unwrap(),
        paths.firms.as_ref().unwrap(),
        paths.ownership.as_ref().unwrap(),
        &concordance,
        &window,
        &sections,
    )?;
    let ingest_dir = out_dir.join("ingest");
    clean.write_dir(&ingest_dir)?;
    stage_ms.insert("ingest".into(), t0.elapsed().as_millis());

    // stage: infer
    let t0 = Instant::now();
    let (network, edges) = infer_network(&clean, &config.infer);
    write_edges_csv(&out_dir.join("edges.csv"), &clean.products, &edges)?;
    network.to_json_file(&out_dir.join("network.json"))?;
    stage_ms.insert("infer".into(), t0.elapsed().as_millis());

    // stage: analyze
    let t0 = Instant::now();
    let analysis_net = if config.analyze.use_wcc {
        network.largest_wcc()
    } else {
        network.clone()
    };
    let bec = match &paths.bec {
        Some(p) => load_classification_csv(p)?,
        None => BTreeMap::new(),
    };
    write_nodes_csv(
        &out_dir.join("nodes.csv"),
        &analysis_net,
        config.analyze.weighted_betweenness,
        &bec,
    )?;
    stage_ms.insert("analyze".into(), t0.elapsed().as_millis());

    // stage: communities
    let t0 = Instant::now();
    let grid = time_grid(
        config.communities.tmin,
        config.communities.tmax,
        config.communities.steps,
    )?;
    let scan = stability_scan(
        &analysis_net,
        &grid,
        config.communities.iterations,
        config.communities.seed,
        config.communities.tau,
    )?;
    seeds.insert("communities".into(), config.communities.seed);
    let json = serde_json::to_string_pretty(&scan).map_err(|e| Error::json("partitions", e))?;
    std::fs::write(out_dir.join("partitions.json"), json)
        .map_err(|e| Error::io(out_dir.join("partitions.json"), e))?;
    stage_ms.insert("communities".into(), t0.elapsed().as_millis());

    // stage: subgraph significance (when a sector list is available)
    if let Some(sector_path) = &paths.sector {
        let t0 = Instant::now();
        let sector = read_sector_file(sector_path)?;
        let members: Vec<u32> = sector
            .iter()
            .filter_map(|code| analysis_net.node_index(code))
            .collect();
        if members.len() >= 2 {
            let test = null_ensemble_pvalue(
                &analysis_net,
                &members,
                config.significance.samples,
                config.significance.seed,
                ModularityOptions::default(),
            )?;
            seeds.insert("significance".into(), config.significance.seed);
            let json =
                serde_json::to_string_pretty(&test).map_err(|e| Error::json("subgraph test", e))?;
            std::fs::write(out_dir.join("subgraph_test.json"), json)
                .map_err(|e| Error::io(out_dir.join("subgraph_test.json"), e))?;
        }
        stage_ms.insert("subgraph-test".into(), t0.elapsed().as_millis());
    }

    // stage: predict
    if let (Some(base_path), Some(end_path), Some(pop_path)) =
        (&paths.trade_base, &paths.trade_end, &paths.population)
    {
        let t0 = Instant::now();
        let base = TradeMatrix::load(base_path, pop_path, config.predict.base_year)?;
        let end = TradeMatrix::load(end_path, pop_path, config.predict.end_year)?;
        let thresholds = EntryThresholds {
            absence: config.predict.absence_threshold,
            presence: config.predict.presence_threshold,
            density_presence: config.predict.density_presence_threshold,
            trade_min_usd: config.predict.trade_min_usd,
            top_k: config.predict.top_k,
        };
        let panel = build_entry_panel(&analysis_net, &base, &end, &thresholds)?;
        panel.write_csv(&out_dir.join("panel.csv"))?;
        let opts = ProbitOptions::default();
        let mut results: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        results.insert(
            "panel_stats".into(),
            serde_json::to_value(&panel.stats).map_err(|e| Error::json("panel stats", e))?,
        );
        for (key, reg) in [("downstream", Regressor::Down), ("upstream", Regressor::Up)] {
            let plain = probit_entry(&panel, &[reg], false, &opts)?;
            results.insert(
                key.to_string(),
                serde_json::to_value(&plain).map_err(|e| Error::json("probit", e))?,
            );
            if config.predict.fixed_effects {
                let fe = probit_entry(&panel, &[reg], true, &opts)?;
                results.insert(
                    format!("{key}_fixed_effects"),
                    serde_json::to_value(&fe).map_err(|e| Error::json("probit", e))?,
                );
            }
        }
        let json = serde_json::to_string_pretty(&results).map_err(|e| Error::json("results", e))?;
        std::fs::write(out_dir.join("results.json"), json)
            .map_err(|e| Error::io(out_dir.join("results.json"), e))?;
        stage_ms.insert("predict".into(), t0.elapsed().as_millis());
    }

    // stage: recovery score against planted truth (synthetic runs)
    if config.synth.is_some() {
        let t0 = Instant::now();
        let truth = load_scored_edges(&out_dir.join("data").join("truth_edges.csv"))?;
        let inferred = load_scored_edges(&out_dir.join("edges.csv"))?;
        let score = score_recovery(&inferred, &truth);
        let json = serde_json::to_string_pretty(&score).map_err(|e| Error::json("score", e))?;
        std::fs::write(out_dir.join("score.json"), json)
            .map_err(|e| Error::io(out_dir.join("score.json"), e))?;
        stage_ms.insert("score".into(), t0.elapsed().as_millis());
    }

    // manifest
    let mut outputs: BTreeMap<String, String> = BTreeMap::new();
    for name in [
        "edges.csv",
        "network.json",
        "nodes.csv",
        "partitions.json",
        "subgraph_test.json",
        "panel.csv",
        "results.json",
        "score.json",
    ] {
        let p = out_dir.join(name);
        if p.exists() {
            outputs.insert(name.to_string(), sha256_file(&p)?);
        }
    }
    let manifest = Manifest {
        version: VERSION.to_string(),
        seeds,
        inputs,
        outputs,
        timing: ManifestTiming {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
            stage_ms,
        },
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json("manifest", e))?;
    std::fs::write(out_dir.join("manifest.json"), json)
        .map_err(|e| Error::io(out_dir.join("manifest.json"), e))?;
    Ok(manifest)
}

/// Builds the inferred network along with the thresholded edge list.
pub fn infer_network(
    clean: &CleanWorld,
    cfg: &InferConfig,
) -> (ProductNetwork, Vec<crate::recipe::EdgeCandidate>) {
    let index = ProducerBuyerIndex::build(
        clean.entities.len(),
        clean.products.len(),
        &clean.transactions,
    );
    let edges = index.build_edge_list(&EdgeThresholds {
        weight_threshold: cfg.weight_threshold,
        firmcount_min: cfg.firmcount,
        value_min_usd: cfg.value_min_usd,
    });
    let net = ProductNetwork::from_candidates(
        &clean.products,
        &edges,
        NetworkMeta {
            weight_threshold: Some(cfg.weight_threshold),
            firmcount_min: Some(cfg.firmcount),
            value_min_usd: Some(cfg.value_min_usd),
            source: Some("inferred".into()),
        },
    );
    (net, edges)
}

/// Writes the per-node metrics CSV:
/// `hs4,in_degree,out_degree,betweenness,hub,authority,class`.
pub fn write_nodes_csv(
    path: &Path,
    net: &ProductNetwork,
    weighted_betweenness: bool,
    bec: &BTreeMap<String, String>,
) -> Result<()> {
    let deg = degrees(net);
    let bc = betweenness(net, weighted_betweenness);
    let hits_scores = hits(net, HITS_DEFAULT_TOL, HITS_DEFAULT_MAX_ITER);
    let (hub, authority) = match hits_scores {
        Ok(s) => (s.hub, s.authority),
        Err(_) => (vec![0.0; net.node_count()], vec![0.0; net.node_count()]),
    };
    let classes = goods_classification(net, bec);
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "hs4",
        "in_degree",
        "out_degree",
        "betweenness",
        "hub",
        "authority",
        "class",
    ])
    .map_err(|e| Error::csv(path, e))?;
    for (i, node) in net.nodes.iter().enumerate() {
        w.write_record([
            node.clone(),
            deg.in_degree[i].to_string(),
            deg.out_degree[i].to_string(),
            bc[i].to_string(),
            hub[i].to_string(),
            authority[i].to_string(),
            classes[i].clone(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads nodes.csv back into (hs4, betweenness, hub) tuples.
pub fn read_nodes_csv(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bc: f64 = record[3]
            .parse()
            .map_err(|_| Error::Data(format!("bad betweenness: {}", &record[3])))?;
        let hub: f64 = record[4]
            .parse()
            .map_err(|_| Error::Data(format!("bad hub score: {}", &record[4])))?;
        out.push((record[0].to_string(), bc, hub));
    }
    Ok(out)
}

/// Compares two run directories, ignoring the manifest's volatile timing.
/// Returns the relative paths that differ.
pub fn diff_run_dirs(a: &Path, b: &Path) -> Result<Vec<String>> {
    fn collect(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                collect(&path, base, out)?;
            } else {
                out.push(path.strip_prefix(base).unwrap().to_path_buf());
            }
        }
        Ok(())
    }
    let mut files_a = Vec::new();
    collect(a, a, &mut files_a)?;
    files_a.sort();
    let mut files_b = Vec::new();
    collect(b, b, &mut files_b)?;
    files_b.sort();
    let mut diffs: Vec<String> = Vec::new();
    if files_a != files_b {
        let set_a: std::collections::BTreeSet<_> = files_a.iter().collect();
        let set_b: std::collections::BTreeSet<_> = files_b.iter().collect();
        for missing in set_a.symmetric_difference(&set_b) {
            diffs.push(format!("{} (present in one run only)", missing.display()));
        }
    }
    for rel in files_a.iter().filter(|f| files_b.contains(f)) {
        if rel.file_name().and_then(|n| n.to_str()) == Some("manifest.json") {
            let strip = |p: &Path| -> Result<serde_json::Value> {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let mut v: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| Error::json("manifest", e))?;
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("timing");
                }
                Ok(v)
            };
            if strip(&a.join(rel))? != strip(&b.join(rel))? {
                diffs.push(rel.display().to_string());
            }
        } else {
            let bytes_a = std::fs::read(a.join(rel)).map_err(|e| Error::io(a.join(rel), e))?;
            let bytes_b = std::fs::read(b.join(rel)).map_err(|e| Error::io(b.join(rel), e))?;
            if bytes_a != bytes_b {
                diffs.push(rel.display().to_string());
            }
        }
    }
    Ok(diffs)
}

/// Mode selector for the sweep subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Compare,
    Predict,
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "compare" => Ok(SweepMode::Compare),
            "predict" => Ok(SweepMode::Predict),
            other => Err(format!("unknown sweep mode: {other}")),
        }
    }
}

/// Correlation sweep against an external network over (firmcount, threshold).
pub fn compare_sweep(
    clean: &CleanWorld,
    external: &ProductNetwork,
    firmcounts: &[u32],
    thresholds: &[f64],
    value_min_usd: f64,
    mode: EdgeMode,
) -> Result<Vec<CompareSweepCell>> {
    if firmcounts.is_empty() || thresholds.is_empty() {
        return Err(Error::Config("empty sweep range".into()));
    }
    let index = ProducerBuyerIndex::build(
        clean.entities.len(),
        clean.products.len(),
        &clean.transactions,
    );
    let mut cells = Vec::new();
    for &fc in firmcounts {
        for &thr in thresholds {
            let edges = index.build_edge_list(&EdgeThresholds {
                weight_threshold: thr,
                firmcount_min: fc,
                value_min_usd,
            });
            let net = ProductNetwork::from_candidates(&clean.products, &edges, NetworkMeta::default());
            let report = crate::compare::compare(&net, external, mode)?;
            cells.push(CompareSweepCell {
                firmcount: fc,
                weight_threshold: thr,
                n_edges: net.edge_count(),
                edge_correlation: report.edge_correlation,
                in_degree_correlation: report.in_degree_correlation,
                out_degree_correlation: report.out_degree_correlation,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSweepCell {
    pub firmcount: u32,
    pub weight_threshold: f64,
    pub n_edges: usize,
    pub edge_correlation: Option<f64>,
    pub in_degree_correlation: Option<f64>,
    pub out_degree_correlation: Option<f64>,
}

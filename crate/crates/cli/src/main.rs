//! recipe-net: infer product recipes from firm transactions and analyze the
//! resulting supply-chain network.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use recipe_net_core::communities::{stability_scan, time_grid};
use recipe_net_core::compare::{compare, EdgeMode};
use recipe_net_core::diversification::{
    build_entry_panel, probit_entry, threshold_sweep, DensityDirection, EntryThresholds, Regressor,
};
use recipe_net_core::error::{Error, Result};
use recipe_net_core::hs::{Concordance, SectionTable};
use recipe_net_core::ingest::{CleanWorld, Window};
use recipe_net_core::network::{load_classification_csv, ProductNetwork};
use recipe_net_core::pipeline::{
    compare_sweep, infer_network, read_nodes_csv, read_sector_file, run_pipeline, write_nodes_csv,
    InferConfig, PipelineConfig, SweepMode, VERSION,
};
use recipe_net_core::probit::ProbitOptions;
use recipe_net_core::recipe::write_edges_csv;
use recipe_net_core::significance::{null_ensemble_pvalue, ModularityOptions};
use recipe_net_core::synth::{generate_world, load_scored_edges, score_recovery, WorldSpec};
use recipe_net_core::trade::{
    country_mean_hub, load_score_csv, presence_matrix, top_bc_export_share, TradeMatrix,
};

#[derive(Parser)]
#[command(name = "recipe-net", version = VERSION, about = "Product supply-chain network toolkit")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, normalize, and filter raw firm and transaction data.
    Ingest(IngestArgs),
    /// Compute excess-purchase ratios and build the thresholded edge list.
    Infer(InferArgs),
    /// Degrees, betweenness, and hub/authority scores for a network.
    Analyze(AnalyzeArgs),
    /// Multi-scale Markov-stability community detection.
    Communities(CommunitiesArgs),
    /// Modularity significance test of a product set against random sets.
    SubgraphTest(SubgraphTestArgs),
    /// Country-product trade metrics (RCA, Rpop, presence, correlations).
    Trade(TradeArgs),
    /// Compare two networks on their common node set.
    Compare(CompareArgs),
    /// Parameter sweeps: network comparison or entry prediction grids.
    Sweep(SweepArgs),
    /// Probit entry prediction from network density metrics.
    Predict(PredictArgs),
    /// Generate a synthetic firm world with planted recipes.
    Synth(SynthArgs),
    /// Score inferred edges against planted truth.
    Score(ScoreArgs),
    /// Run the full pipeline from a declarative config.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    transactions: PathBuf,
    #[arg(long)]
    firms: PathBuf,
    #[arg(long)]
    ownership: PathBuf,
    /// HS concordance CSV (hs2017,hs2022); defaults to accepting any code.
    #[arg(long)]
    concordance: Option<PathBuf>,
    /// HS section override CSV (hs4,section); defaults to the built-in table.
    #[arg(long)]
    sections: Option<PathBuf>,
    /// Inclusive period window, e.g. 2021-01:2023-12.
    #[arg(long, default_value = "2021-01:2023-12")]
    window: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Directory produced by `ingest`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    weight_threshold: f64,
    #[arg(long, default_value_t = 2)]
    firmcount: u32,
    #[arg(long, default_value_t = 1000.0)]
    value_min: f64,
    /// Edge list CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the network as JSON.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Betweenness over 1/weight edge lengths instead of unit lengths.
    #[arg(long)]
    weighted: bool,
    /// Goods classification CSV (hs4,class).
    #[arg(long)]
    bec: Option<PathBuf>,
    /// Analyze the full network instead of its largest weakly connected
    /// component.
    #[arg(long)]
    no_wcc: bool,
}

#[derive(Args)]
struct CommunitiesArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    tmin: f64,
    #[arg(long, default_value_t = 100.0)]
    tmax: f64,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Teleportation rate of the random walk.
    #[arg(long, default_value_t = 0.15)]
    tau: f64,
    #[arg(long, default_value = "partitions.json")]
    out: PathBuf,
    #[arg(long)]
    no_wcc: bool,
}

#[derive(Args)]
struct SubgraphTestArgs {
    #[arg(long)]
    network: PathBuf,
    /// Plain text file of HS4 codes, one per line.
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "test.json")]
    out: PathBuf,
    /// Use edge weights instead of the binarized adjacency.
    #[arg(long)]
    weighted: bool,
    /// Count self-loop edges in the adjacency and degrees.
    #[arg(long)]
    include_self_loops: bool,
}

#[derive(Args)]
struct TradeArgs {
    #[arg(long)]
    trade: PathBuf,
    #[arg(long)]
    population: PathBuf,
    #[arg(long)]
    year: u16,
    /// Output directory for rca.csv, rpop.csv, presence.csv.
    #[arg(long)]
    out: PathBuf,
    /// Presence threshold on Rpop.
    #[arg(long, default_value_t = 1.0)]
    presence_threshold: f64,
    /// Product complexity scores (product_hs4,pci).
    #[arg(long)]
    pci: Option<PathBuf>,
    /// Country complexity scores (country_iso3,eci).
    #[arg(long)]
    eci: Option<PathBuf>,
    /// nodes.csv from `analyze`, enabling hub/BC cross-statistics.
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Top-k betweenness products for the export-share statistic.
    #[arg(long, default_value_t = 50)]
    top_k: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// First network (.json from `infer`, or an edge CSV).
    #[arg(long)]
    a: PathBuf,
    /// Second network (.json or edge CSV).
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "binary")]
    mode: String,
    #[arg(long, default_value = "compare.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// compare: correlation grids against an external network;
    /// predict: AUC grid over (firmcount, presence threshold).
    #[arg(long)]
    mode: String,
    /// Directory produced by `ingest`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Firmcount range, e.g. 2:10.
    #[arg(long, default_value = "2:6")]
    firmcount: String,
    /// Weight threshold range for compare mode, e.g. 1:5.
    #[arg(long, default_value = "2:2")]
    threshold: String,
    /// Presence threshold range for predict mode, e.g. 0.1:0.5:0.1.
    #[arg(long, default_value = "0.1:0.3:0.1")]
    presence: String,
    #[arg(long, default_value_t = 1000.0)]
    value_min: f64,
    /// External network for compare mode.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Trade files for predict mode.
    #[arg(long)]
    trade_base: Option<PathBuf>,
    #[arg(long)]
    trade_end: Option<PathBuf>,
    #[arg(long)]
    population: Option<PathBuf>,
    #[arg(long, default_value_t = 2016)]
    base_year: u16,
    #[arg(long, default_value_t = 2021)]
    end_year: u16,
    #[arg(long, default_value_t = 0.0)]
    trade_min: f64,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    trade_base: PathBuf,
    #[arg(long)]
    trade_end: PathBuf,
    #[arg(long)]
    population: PathBuf,
    #[arg(long, default_value_t = 2016)]
    base_year: u16,
    #[arg(long, default_value_t = 2021)]
    end_year: u16,
    /// downstream, upstream, or both.
    #[arg(long, default_value = "both")]
    direction: String,
    #[arg(long)]
    fixed_effects: bool,
    #[arg(long, default_value_t = 0.05)]
    absence_threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    presence_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    density_presence_threshold: f64,
    #[arg(long, default_value_t = 2e9)]
    trade_min: f64,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, default_value = "results.json")]
    out: PathBuf,
    /// Also export the estimation panel.
    #[arg(long)]
    panel: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// World spec JSON; omitted means the built-in default world.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    inferred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config JSON; omitted means the default synthetic pipeline.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    // usage errors are exit code 1; --help/--version exit 0
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_network(path: &Path) -> Result<ProductNetwork> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ProductNetwork::from_json_file(path),
        _ => ProductNetwork::from_edge_csv(path),
    }
}

/// Parses `a:b` or `a:b:step` into an inclusive numeric range.
fn parse_range<T>(s: &str) -> Result<Vec<T>>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T>,
{
    let parts: Vec<&str> = s.split(':').collect();
    let parse = |x: &str| -> Result<T> {
        x.trim()
            .parse::<T>()
            .map_err(|_| Error::Usage(format!("bad range component: {x}")))
    };
    match parts.as_slice() {
        [one] => Ok(vec![parse(one)?]),
        [a, b] | [a, b, _] => {
            let start = parse(a)?;
            let end = parse(b)?;
            let step = if parts.len() == 3 {
                parse(parts[2])?
            } else {
                parse("1")?
            };
            let mut out = Vec::new();
            let mut cur = start;
            let mut guard = 0;
            while cur <= end && guard < 10_000 {
                out.push(cur);
                cur = cur + step;
                guard += 1;
            }
            if out.is_empty() {
                return Err(Error::Usage(format!("empty range: {s}")));
            }
            Ok(out)
        }
        _ => Err(Error::Usage(format!("bad range: {s}"))),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => {
            let concordance = match &args.concordance {
                Some(p) => Concordance::from_csv(p)?,
                None => Concordance::identity(),
            };
            let sections = match &args.sections {
                Some(p) => SectionTable::from_csv(p)?,
                None => SectionTable::builtin(),
            };
            let window: Window = args.window.parse().map_err(Error::Usage)?;
            let clean = recipe_net_core::ingest::ingest(
                &args.transactions,
                &args.firms,
                &args.ownership,
                &concordance,
                &window,
                &sections,
            )?;
            clean.write_dir(&args.out)?;
            println!(
                "ingested {} rows -> {} transactions over {} entities ({} products)",
                clean.report.rows_read,
                clean.transactions.len(),
                clean.entities.len(),
                clean.products.len()
            );
            if !clean.report.reconciles() {
                return Err(Error::Data("row accounting failed to reconcile".into()));
            }
            Ok(())
        }
        Command::Infer(args) => {
            let clean = CleanWorld::read_dir(&args.input)?;
            let cfg = InferConfig {
                weight_threshold: args.weight_threshold,
                firmcount: args.firmcount,
                value_min_usd: args.value_min,
            };
            let (network, edges) = infer_network(&clean, &cfg);
            write_edges_csv(&args.out, &clean.products, &edges)?;
            if let Some(net_path) = &args.network {
                network.to_json_file(net_path)?;
            }
            println!(
                "inferred {} edges over {} products",
                edges.len(),
                network.node_count()
            );
            Ok(())
        }
        Command::Analyze(args) => {
            let network = load_network(&args.network)?;
            let network = if args.no_wcc {
                network
            } else {
                network.largest_wcc()
            };
            let bec = match &args.bec {
                Some(p) => load_classification_csv(p)?,
                None => BTreeMap::new(),
            };
            write_nodes_csv(&args.out, &network, args.weighted, &bec)?;
            if args.bec.is_some() {
                let classes = recipe_net_core::network::goods_classification(&network, &bec);
                let summary = recipe_net_core::network::class_summary(
                    &recipe_net_core::network::degrees(&network),
                    &classes,
                );
                println!("mean out-degree by goods class:");
                for (class, mean) in &summary {
                    println!("  {class}: {mean:.3}");
                }
            }
            println!(
                "analyzed {} nodes / {} edges -> {}",
                network.node_count(),
                network.edge_count(),
                args.out.display()
            );
            Ok(())
        }
        Command::Communities(args) => {
            let network = load_network(&args.network)?;
            let network = if args.no_wcc {
                network
            } else {
                network.largest_wcc()
            };
            let grid = time_grid(args.tmin, args.tmax, args.steps)?;
            let scan = stability_scan(&network, &grid, args.iterations, args.seed, args.tau)?;
            write_json(&args.out, &scan)?;
            let counts: Vec<usize> = scan
                .points
                .iter()
                .map(|p| p.partition.n_communities)
                .collect();
            println!("community counts along the scan: {counts:?}");
            Ok(())
        }
        Command::SubgraphTest(args) => {
            let network = load_network(&args.network)?;
            let codes = read_sector_file(&args.nodes)?;
            let mut members = Vec::new();
            let mut unknown = Vec::new();
            for code in &codes {
                match network.node_index(code) {
                    Some(i) => members.push(i),
                    None => unknown.push(code.clone()),
                }
            }
            if !unknown.is_empty() {
                eprintln!("warning: {} codes not in the network: {}", unknown.len(), unknown.join(", "));
            }
            let test = null_ensemble_pvalue(
                &network,
                &members,
                args.samples,
                args.seed,
                ModularityOptions {
                    include_self_loops: args.include_self_loops,
                    weighted: args.weighted,
                },
            )?;
            println!(
                "M_G = {:.6}, ensemble mean {:.6} (sd {:.6}), p = {:.6}",
                test.m_g, test.ensemble_mean, test.ensemble_sd, test.p_value
            );
            write_json(&args.out, &test)?;
            Ok(())
        }
        Command::Trade(args) => {
            let tm = TradeMatrix::load(&args.trade, &args.population, args.year)?;
            std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
            let rca = tm.rca()?;
            let rpop = tm.rpop()?;
            let presence = presence_matrix(&rpop, args.presence_threshold)?;
            for (name, matrix) in [("rca", &rca), ("rpop", &rpop), ("presence", &presence)] {
                let path = args.out.join(format!("{name}.csv"));
                let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
                let mut header = vec!["product_hs4".to_string()];
                header.extend(tm.countries.iter().cloned());
                w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
                for (p, product) in tm.products.iter().enumerate() {
                    let mut row = vec![product.clone()];
                    row.extend((0..tm.countries.len()).map(|c| matrix[(p, c)].to_string()));
                    w.write_record(&row).map_err(|e| Error::csv(&path, e))?;
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            if let Some(nodes_path) = &args.nodes {
                let nodes = read_nodes_csv(nodes_path)?;
                let bc: Vec<(String, f64)> =
                    nodes.iter().map(|(p, bc, _)| (p.clone(), *bc)).collect();
                let hub: Vec<(String, f64)> =
                    nodes.iter().map(|(p, _, h)| (p.clone(), *h)).collect();
                let shares =
                    top_bc_export_share(&bc, &tm.products, &rca, &tm.countries, args.top_k)?;
                let path = args.out.join("top_bc_share.csv");
                let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
                w.write_record(["country_iso3", "share"]).map_err(|e| Error::csv(&path, e))?;
                for (c, s) in &shares {
                    w.write_record([c.clone(), s.to_string()]).map_err(|e| Error::csv(&path, e))?;
                }
                w.flush().map_err(|e| Error::io(&path, e))?;

                let means = country_mean_hub(&hub, &tm.products, &rca, &tm.countries);
                let mut correlations: BTreeMap<String, f64> = BTreeMap::new();
                if let Some(pci_path) = &args.pci {
                    let pci = load_score_csv(pci_path)?;
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for (p, _, h) in &nodes {
                        if let Some(&score) = pci.get(p) {
                            xs.push(*h);
                            ys.push(score);
                        }
                    }
                    correlations.insert(
                        "pci_vs_hub_rank".into(),
                        recipe_net_core::stats::spearman(&xs, &ys)?,
                    );
                }
                if let Some(eci_path) = &args.eci {
                    let eci = load_score_csv(eci_path)?;
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for (country, mean) in &means {
                        if let (Some(&score), Some(m)) = (eci.get(country), mean) {
                            xs.push(*m);
                            ys.push(score);
                        }
                    }
                    correlations.insert(
                        "eci_vs_mean_hub_rank".into(),
                        recipe_net_core::stats::spearman(&xs, &ys)?,
                    );
                }
                let path = args.out.join("mean_hub.csv");
                let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
                w.write_record(["country_iso3", "mean_hub"]).map_err(|e| Error::csv(&path, e))?;
                for (c, m) in &means {
                    w.write_record([
                        c.clone(),
                        m.map(|v| v.to_string()).unwrap_or_else(|| "".into()),
                    ])
                    .map_err(|e| Error::csv(&path, e))?;
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
                if !correlations.is_empty() {
                    write_json(&args.out.join("correlations.json"), &correlations)?;
                    for (k, v) in &correlations {
                        println!("{k}: {v:.4}");
                    }
                }
            }
            println!("trade metrics written to {}", args.out.display());
            Ok(())
        }
        Command::Compare(args) => {
            let a = load_network(&args.a)?;
            let b = load_network(&args.b)?;
            let mode: EdgeMode = args.mode.parse().map_err(Error::Usage)?;
            let report = compare(&a, &b, mode)?;
            let fmt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.4}"),
                None => "n/a".to_string(),
            };
            println!(
                "common nodes {}, edge corr {}, in-degree corr {}, out-degree corr {}",
                report.common_nodes,
                fmt(report.edge_correlation),
                fmt(report.in_degree_correlation),
                fmt(report.out_degree_correlation)
            );
            write_json(&args.out, &report)?;
            Ok(())
        }
        Command::Sweep(args) => {
            let mode: SweepMode = args.mode.parse().map_err(Error::Usage)?;
            let clean = CleanWorld::read_dir(&args.input)?;
            let firmcounts: Vec<u32> = parse_range(&args.firmcount)?;
            match mode {
                SweepMode::Compare => {
                    let external_path = args.b.as_ref().ok_or_else(|| {
                        Error::Usage("compare sweep needs --b EXTERNAL_NETWORK".into())
                    })?;
                    let external = load_network(external_path)?;
                    let thresholds: Vec<f64> = parse_range(&args.threshold)?;
                    let cells = compare_sweep(
                        &clean,
                        &external,
                        &firmcounts,
                        &thresholds,
                        args.value_min,
                        EdgeMode::Binary,
                    )?;
                    let mut w =
                        csv::Writer::from_path(&args.out).map_err(|e| Error::csv(&args.out, e))?;
                    w.write_record([
                        "firmcount",
                        "weight_threshold",
                        "n_edges",
                        "edge_correlation",
                        "in_degree_correlation",
                        "out_degree_correlation",
                    ])
                    .map_err(|e| Error::csv(&args.out, e))?;
                    for c in &cells {
                        w.write_record([
                            c.firmcount.to_string(),
                            c.weight_threshold.to_string(),
                            c.n_edges.to_string(),
                            c.edge_correlation.map(|v| v.to_string()).unwrap_or_default(),
                            c.in_degree_correlation.map(|v| v.to_string()).unwrap_or_default(),
                            c.out_degree_correlation.map(|v| v.to_string()).unwrap_or_default(),
                        ])
                        .map_err(|e| Error::csv(&args.out, e))?;
                    }
                    w.flush().map_err(|e| Error::io(&args.out, e))?;
                }
                SweepMode::Predict => {
                    let (tb, te, pp) = match (&args.trade_base, &args.trade_end, &args.population) {
                        (Some(a), Some(b), Some(c)) => (a, b, c),
                        _ => {
                            return Err(Error::Usage(
                                "predict sweep needs --trade-base, --trade-end, --population"
                                    .into(),
                            ))
                        }
                    };
                    let base = TradeMatrix::load(tb, pp, args.base_year)?;
                    let end = TradeMatrix::load(te, pp, args.end_year)?;
                    let presences: Vec<f64> = parse_range(&args.presence)?;
                    let cells = threshold_sweep(
                        &clean,
                        &base,
                        &end,
                        &firmcounts,
                        &presences,
                        &recipe_net_core::recipe::EdgeThresholds {
                            value_min_usd: args.value_min,
                            ..Default::default()
                        },
                        &EntryThresholds {
                            trade_min_usd: args.trade_min,
                            top_k: args.top_k,
                            ..Default::default()
                        },
                        &ProbitOptions::default(),
                    )?;
                    let mut w =
                        csv::Writer::from_path(&args.out).map_err(|e| Error::csv(&args.out, e))?;
                    w.write_record([
                        "firmcount",
                        "presence_threshold",
                        "auc_down",
                        "auc_up",
                        "n_sample",
                        "entry_rate",
                        "n_edges",
                    ])
                    .map_err(|e| Error::csv(&args.out, e))?;
                    for c in &cells {
                        w.write_record([
                            c.firmcount.to_string(),
                            c.presence_threshold.to_string(),
                            c.auc_down.to_string(),
                            c.auc_up.to_string(),
                            c.n_sample.to_string(),
                            c.entry_rate.to_string(),
                            c.n_edges.to_string(),
                        ])
                        .map_err(|e| Error::csv(&args.out, e))?;
                    }
                    w.flush().map_err(|e| Error::io(&args.out, e))?;
                }
            }
            println!("sweep written to {}", args.out.display());
            Ok(())
        }
        Command::Predict(args) => {
            let network = load_network(&args.network)?;
            let base = TradeMatrix::load(&args.trade_base, &args.population, args.base_year)?;
            let end = TradeMatrix::load(&args.trade_end, &args.population, args.end_year)?;
            let thresholds = EntryThresholds {
                absence: args.absence_threshold,
                presence: args.presence_threshold,
                density_presence: args.density_presence_threshold,
                trade_min_usd: args.trade_min,
                top_k: args.top_k,
            };
            let panel = build_entry_panel(&network, &base, &end, &thresholds)?;
            if let Some(panel_path) = &args.panel {
                panel.write_csv(panel_path)?;
            }
            let directions: Vec<Regressor> = match args.direction.as_str() {
                "both" => vec![Regressor::Down, Regressor::Up],
                other => match other.parse::<DensityDirection>().map_err(Error::Usage)? {
                    DensityDirection::Downstream => vec![Regressor::Down],
                    DensityDirection::Upstream => vec![Regressor::Up],
                },
            };
            let opts = ProbitOptions::default();
            let mut results: BTreeMap<String, serde_json::Value> = BTreeMap::new();
            results.insert(
                "panel_stats".into(),
                serde_json::to_value(&panel.stats).map_err(|e| Error::json("stats", e))?,
            );
            let mut any_nonconverged = false;
            for reg in directions {
                let key = match reg {
                    Regressor::Down => "downstream",
                    Regressor::Up => "upstream",
                };
                let fit = probit_entry(&panel, &[reg], args.fixed_effects, &opts)?;
                println!(
                    "{key}: beta = {:.4}, AUC = {:.4} (converged: {})",
                    fit.fit
                        .coefficient(if matches!(reg, Regressor::Down) {
                            "down_density"
                        } else {
                            "up_density"
                        })
                        .unwrap_or(f64::NAN),
                    fit.fit.auc_in_sample,
                    fit.fit.converged
                );
                any_nonconverged |= !fit.fit.converged;
                results.insert(
                    key.to_string(),
                    serde_json::to_value(&fit).map_err(|e| Error::json("fit", e))?,
                );
            }
            write_json(&args.out, &results)?;
            if any_nonconverged {
                return Err(Error::NonConvergence(
                    "a probit fit did not converge; partial results written".into(),
                ));
            }
            Ok(())
        }
        Command::Synth(args) => {
            let spec = match &args.spec {
                Some(p) => WorldSpec::from_json_file(p)?,
                None => WorldSpec::default(),
            };
            let world = generate_world(&spec)?;
            world.write_dir(&args.out)?;
            println!(
                "generated {} firms, {} transactions, {} truth edges -> {}",
                world.firms.len(),
                world.transactions.len(),
                world.truth_edges.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Score(args) => {
            let inferred = load_scored_edges(&args.inferred)?;
            let truth = load_scored_edges(&args.truth)?;
            let score = score_recovery(&inferred, &truth);
            println!(
                "precision {:.4}, recall {:.4}, F1 {:.4} ({} hits / {} inferred / {} truth)",
                score.precision, score.recall, score.f1, score.n_hit, score.n_inferred, score.n_truth
            );
            if let Some(out) = &args.out {
                write_json(out, &score)?;
            }
            Ok(())
        }
        Command::Pipeline(args) => {
            let config = match &args.config {
                Some(p) => PipelineConfig::from_json_file(p)?,
                None => PipelineConfig::default(),
            };
            let manifest = run_pipeline(&config, &args.out)?;
            println!(
                "pipeline complete: {} outputs in {} ({} ms)",
                manifest.outputs.len(),
                args.out.display(),
                manifest.timing.finished_unix_ms - manifest.timing.started_unix_ms
            );
            Ok(())
        }
    }
}

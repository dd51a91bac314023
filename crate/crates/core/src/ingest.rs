//! Loading and normalization of raw firm and transaction data: HS edition
//! conversion, ownership resolution, owner-country aggregation, and the
//! multi-section (wholesaler) filter.
//!
//! Row accounting is exact: every input row ends up in exactly one bucket
//! (accepted, rejected-with-reason, intra-owner, or multi-section), and the
//! buckets reconcile against the input row count.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hs::{Concordance, SectionTable};

/// Year-month, parsed from `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Period {
    pub year: u16,
    pub month: u8,
}

impl FromStr for Period {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (y, m) = s.split_once('-').ok_or_else(|| format!("bad period: {s}"))?;
        let year: u16 = y.parse().map_err(|_| format!("bad period: {s}"))?;
        let month: u8 = m.parse().map_err(|_| format!("bad period: {s}"))?;
        if !(1..=12).contains(&month) || y.len() != 4 {
            return Err(format!("bad period: {s}"));
        }
        Ok(Period { year, month })
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Inclusive period window, parsed from `YYYY-MM:YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Period,
    pub end: Period,
}

impl Window {
    pub fn contains(&self, p: Period) -> bool {
        self.start <= p && p <= self.end
    }
}

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("bad window: {s}"))?;
        let start: Period = a.parse()?;
        let end: Period = b.parse()?;
        if end < start {
            return Err(format!("window end before start: {s}"));
        }
        Ok(Window { start, end })
    }
}

/// One cross-border firm-to-firm sale of a product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub supplier_id: String,
    pub buyer_id: String,
    pub product: String,
    pub value_usd: f64,
    pub period: Period,
}

/// A firm as declared in `firms.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub firm_id: String,
    pub country: String,
    pub is_financial: bool,
}

/// A child → parent ownership link, with an optional declared share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnershipEdge {
    pub child_id: String,
    pub parent_id: String,
    pub share: Option<f64>,
}

/// Per-reason rejection counts plus totals for one load pass.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
}

impl LoadReport {
    fn reject(&mut self, reason: &str) {
        *self.rejected.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

/// Loads `transactions.csv` (`supplier_id,buyer_id,product_hs4,value_usd,period`),
/// applying the concordance and the period window. Malformed rows are counted
/// per reason, never silently dropped.
pub fn load_transactions(
    path: &Path,
    concordance: &Concordance,
    window: &Window,
) -> Result<(Vec<TransactionRecord>, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    {
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?;
        let expected = ["supplier_id", "buyer_id", "product_hs4", "value_usd", "period"];
        if headers.len() < 5 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::Data(format!(
                "unexpected header in {}: {:?}",
                path.display(),
                headers
            )));
        }
    }
    let mut out = Vec::new();
    let mut report = LoadReport::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        report.rows_read += 1;
        if record.len() < 5 {
            report.reject("malformed row");
            continue;
        }
        let supplier_id = record[0].trim().to_string();
        let buyer_id = record[1].trim().to_string();
        if supplier_id.is_empty() || buyer_id.is_empty() {
            report.reject("malformed row");
            continue;
        }
        let value_usd: f64 = match record[3].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                report.reject("malformed row");
                continue;
            }
        };
        if value_usd < 0.0 {
            report.reject("negative value");
            continue;
        }
        let period: Period = match record[4].trim().parse() {
            Ok(p) => p,
            Err(_) => {
                report.reject("bad period");
                continue;
            }
        };
        if !window.contains(period) {
            report.reject("out of window");
            continue;
        }
        let product = match concordance.apply(record[2].trim()) {
            Ok(code) => code,
            Err(reason) => {
                report.reject(reason);
                continue;
            }
        };
        report.accepted += 1;
        out.push(TransactionRecord {
            supplier_id,
            buyer_id,
            product,
            value_usd,
            period,
        });
    }
    Ok((out, report))
}

/// Loads `firms.csv` (`firm_id,country,is_financial`).
pub fn load_firms(path: &Path) -> Result<Vec<FirmRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() < 3 {
            return Err(Error::Data(format!("malformed firms row: {record:?}")));
        }
        let flag = record[2].trim().to_ascii_lowercase();
        out.push(FirmRecord {
            firm_id: record[0].trim().to_string(),
            country: record[1].trim().to_string(),
            is_financial: matches!(flag.as_str(), "true" | "1" | "yes"),
        });
    }
    Ok(out)
}

/// Loads `ownership.csv` (`child_id,parent_id,share`), share optional.
pub fn load_ownership(path: &Path) -> Result<Vec<OwnershipEdge>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() < 2 {
            return Err(Error::Data(format!("malformed ownership row: {record:?}")));
        }
        let share = match record.get(2).map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad ownership share: {s}")))?,
            ),
        };
        out.push(OwnershipEdge {
            child_id: record[0].trim().to_string(),
            parent_id: record[1].trim().to_string(),
            share,
        });
    }
    Ok(out)
}

/// Resolves each firm to its ultimate operational owner.
///
/// The climb follows parent links upward and stops before any parent flagged
/// financial. Multi-parent children follow the parent with the largest
/// declared share (lexicographic order breaks ties and absent shares).
/// Ownership cycles resolve to the lexicographically smallest member.
pub fn resolve_ownership(
    firms: &[FirmRecord],
    edges: &[OwnershipEdge],
) -> BTreeMap<String, String> {
    let financial: BTreeSet<&str> = firms
        .iter()
        .filter(|f| f.is_financial)
        .map(|f| f.firm_id.as_str())
        .collect();

    // Reduce multi-parent children to a single parent link.
    let mut candidates: HashMap<&str, Vec<(&str, Option<f64>)>> = HashMap::new();
    for e in edges {
        if e.child_id == e.parent_id {
            continue; // cleaned edge set has no self-loops
        }
        candidates
            .entry(e.child_id.as_str())
            .or_default()
            .push((e.parent_id.as_str(), e.share));
    }
    let mut parent: HashMap<&str, &str> = HashMap::with_capacity(candidates.len());
    for (child, mut list) in candidates {
        list.sort_by(|a, b| {
            let sa = a.1.unwrap_or(f64::NEG_INFINITY);
            let sb = b.1.unwrap_or(f64::NEG_INFINITY);
            sb.partial_cmp(&sa).unwrap().then_with(|| a.0.cmp(b.0))
        });
        parent.insert(child, list[0].0);
    }

    // Memoized climb with path compression. After the single-parent reduction
    // the graph is functional, so every node on a climb path shares the final
    // owner.
    fn climb<'a>(
        start: &'a str,
        parent: &HashMap<&'a str, &'a str>,
        financial: &BTreeSet<&'a str>,
        owner: &mut HashMap<&'a str, &'a str>,
    ) {
        if owner.contains_key(start) {
            return;
        }
        let mut path: Vec<&'a str> = Vec::new();
        let mut position: HashMap<&'a str, usize> = HashMap::new();
        let mut current = start;
        let resolved: &'a str = loop {
            if let Some(&o) = owner.get(current) {
                break o;
            }
            if let Some(&pos) = position.get(current) {
                // cycle: members are path[pos..]; owner = smallest id
                break path[pos..].iter().min().unwrap();
            }
            position.insert(current, path.len());
            path.push(current);
            match parent.get(current) {
                Some(&p) if !financial.contains(p) => current = p,
                _ => break current,
            }
        };
        for node in path {
            owner.insert(node, resolved);
        }
    }

    let mut owner: HashMap<&str, &str> = HashMap::with_capacity(firms.len());
    for f in firms {
        climb(f.firm_id.as_str(), &parent, &financial, &mut owner);
    }
    // Transactions may reference firms known only through ownership edges;
    // resolve those too so aggregation can key them.
    let edge_nodes: BTreeSet<&str> = edges
        .iter()
        .flat_map(|e| [e.child_id.as_str(), e.parent_id.as_str()])
        .collect();
    for node in edge_nodes {
        climb(node, &parent, &financial, &mut owner);
    }

    owner
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// An owner-country entity: all subsidiaries of one resolved owner within one
/// country, merged into a single node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub owner_id: String,
    pub country: String,
}

impl Entity {
    pub fn key(&self) -> String {
        format!("{}|{}", self.owner_id, self.country)
    }
}

/// A transaction re-keyed to entity indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityTransaction {
    pub supplier: u32,
    pub buyer: u32,
    pub product: u32,
    pub value_usd: f64,
}

/// The cleaned world: entities, a sorted product list, and entity-keyed
/// transactions, plus full row accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanWorld {
    pub entities: Vec<Entity>,
    pub products: Vec<String>,
    pub transactions: Vec<EntityTransaction>,
    pub report: IngestReport,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub load_rejected: BTreeMap<String, usize>,
    pub unknown_firm: usize,
    pub intra_owner: usize,
    pub multi_section_rows: usize,
    pub entities_before_filter: usize,
    pub entities_removed: usize,
    pub accepted: usize,
}

impl IngestReport {
    /// input rows = accepted + rejected + intra-owner + multi-section.
    pub fn reconciles(&self) -> bool {
        let rejected: usize = self.load_rejected.values().sum::<usize>() + self.unknown_firm;
        self.rows_read == self.accepted + rejected + self.intra_owner + self.multi_section_rows
    }
}

/// Re-keys transactions to (owner, country) entities and drops intra-owner
/// transfers. Firms absent from `firms.csv` reject their rows.
pub fn aggregate_owner_country(
    firms: &[FirmRecord],
    owners: &BTreeMap<String, String>,
    transactions: &[TransactionRecord],
) -> (Vec<Entity>, Vec<(Entity, Entity, String, f64)>, usize, usize) {
    let country: HashMap<&str, &str> = firms
        .iter()
        .map(|f| (f.firm_id.as_str(), f.country.as_str()))
        .collect();
    let entity_of = |firm: &str| -> Option<Entity> {
        let c = country.get(firm)?;
        let o = owners.get(firm).map(String::as_str).unwrap_or(firm);
        Some(Entity {
            owner_id: o.to_string(),
            country: (*c).to_string(),
        })
    };

    let mut unknown_firm = 0usize;
    let mut intra_owner = 0usize;
    let mut keyed = Vec::with_capacity(transactions.len());
    let mut entities: BTreeSet<Entity> = BTreeSet::new();
    for t in transactions {
        let (s, b) = match (entity_of(&t.supplier_id), entity_of(&t.buyer_id)) {
            (Some(s), Some(b)) => (s, b),
            _ => {
                unknown_firm += 1;
                continue;
            }
        };
        if s == b {
            intra_owner += 1;
            continue;
        }
        entities.insert(s.clone());
        entities.insert(b.clone());
        keyed.push((s, b, t.product.clone(), t.value_usd));
    }
    (entities.into_iter().collect(), keyed, unknown_firm, intra_owner)
}

/// Removes entities whose exported (sold) products span five or more HS
/// sections, along with every transaction touching them.
pub fn filter_multi_section_firms(
    entities: Vec<Entity>,
    transactions: Vec<(Entity, Entity, String, f64)>,
    sections: &SectionTable,
) -> Result<(Vec<Entity>, Vec<(Entity, Entity, String, f64)>, usize, usize)> {
    let mut exported_sections: BTreeMap<&Entity, BTreeSet<u8>> = BTreeMap::new();
    for (supplier, _, product, _) in &transactions {
        let section = sections.section(product)?;
        exported_sections.entry(supplier).or_default().insert(section);
    }
    let dropped: BTreeSet<Entity> = exported_sections
        .iter()
        .filter(|(_, secs)| secs.len() >= 5)
        .map(|(e, _)| (*e).clone())
        .collect();
    let n_dropped_entities = dropped.len();
    let kept_entities: Vec<Entity> = entities
        .into_iter()
        .filter(|e| !dropped.contains(e))
        .collect();
    let before = transactions.len();
    let kept: Vec<_> = transactions
        .into_iter()
        .filter(|(s, b, _, _)| !dropped.contains(s) && !dropped.contains(b))
        .collect();
    let removed_rows = before - kept.len();
    Ok((kept_entities, kept, n_dropped_entities, removed_rows))
}

/// Full ingest pass: load, resolve, aggregate, filter. Produces the
/// index-keyed world consumed by recipe inference.
pub fn ingest(
    transactions_path: &Path,
    firms_path: &Path,
    ownership_path: &Path,
    concordance: &Concordance,
    window: &Window,
    sections: &SectionTable,
) -> Result<CleanWorld> {
    let (transactions, load_report) = load_transactions(transactions_path, concordance, window)?;
    let firms = load_firms(firms_path)?;
    let ownership = load_ownership(ownership_path)?;
    let owners = resolve_ownership(&firms, &ownership);
    let (entities, keyed, unknown_firm, intra_owner) =
        aggregate_owner_country(&firms, &owners, &transactions);
    let entities_before_filter = entities.len();
    let (entities, keyed, entities_removed, multi_section_rows) =
        filter_multi_section_firms(entities, keyed, sections)?;

    // Re-key to dense indices with deterministic (sorted) orderings.
    let entity_index: BTreeMap<String, u32> = entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.key(), i as u32))
        .collect();
    let products: BTreeSet<String> = keyed.iter().map(|(_, _, p, _)| p.clone()).collect();
    let products: Vec<String> = products.into_iter().collect();
    let product_index: BTreeMap<&str, u32> = products
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
        rows_read: load_report.rows_read,
        load_rejected: load_report.rejected.clone(),
        unknown_firm,
        intra_owner,
        multi_section_rows,
        entities_before_filter,
        entities_removed,
        accepted: txs.len(),
    };
    Ok(CleanWorld {
        entities,
        products,
        transactions: txs,
        report,
    })
}

impl CleanWorld {
    /// Writes `entities.csv`, `transactions_clean.csv`, and `report.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let epath = dir.join("entities.csv");
        let mut w = csv::Writer::from_path(&epath).map_err(|e| Error::csv(&epath, e))?;
        w.write_record(["entity_id", "owner_id", "country"])
            .map_err(|e| Error::csv(&epath, e))?;
        for e in &self.entities {
            w.write_record([&e.key(), &e.owner_id, &e.country])
                .map_err(|e2| Error::csv(&epath, e2))?;
        }
        w.flush().map_err(|e| Error::io(&epath, e))?;

        let tpath = dir.join("transactions_clean.csv");
        let mut w = csv::Writer::from_path(&tpath).map_err(|e| Error::csv(&tpath, e))?;
        w.write_record(["supplier_entity", "buyer_entity", "product_hs4", "value_usd"])
            .map_err(|e| Error::csv(&tpath, e))?;
        for t in &self.transactions {
            w.write_record([
                self.entities[t.supplier as usize].key(),
                self.entities[t.buyer as usize].key(),
                self.products[t.product as usize].clone(),
                t.value_usd.to_string(),
            ])
            .map_err(|e| Error::csv(&tpath, e))?;
        }
        w.flush().map_err(|e| Error::io(&tpath, e))?;

        let rpath = dir.join("report.json");
        let json = serde_json::to_string_pretty(&self.report)
            .map_err(|e| Error::json("ingest report", e))?;
        std::fs::write(&rpath, json).map_err(|e| Error::io(&rpath, e))?;
        Ok(())
    }

    /// Reads a directory written by [`CleanWorld::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<CleanWorld> {
        let epath = dir.join("entities.csv");
        let mut reader = csv::Reader::from_path(&epath).map_err(|e| Error::csv(&epath, e))?;
        let mut entities = Vec::new();
        let mut entity_index: BTreeMap<String, u32> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(&epath, e))?;
            let entity = Entity {
                owner_id: record[1].to_string(),
                country: record[2].to_string(),
            };
            entity_index.insert(record[0].to_string(), entities.len() as u32);
            entities.push(entity);
        }

        let tpath = dir.join("transactions_clean.csv");
        let mut reader = csv::Reader::from_path(&tpath).map_err(|e| Error::csv(&tpath, e))?;
        let mut rows: Vec<(u32, u32, String, f64)> = Vec::new();
        let mut products: BTreeSet<String> = BTreeSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(&tpath, e))?;
            let supplier = *entity_index
                .get(&record[0])
                .ok_or_else(|| Error::Data(format!("unknown entity {}", &record[0])))?;
            let buyer = *entity_index
                .get(&record[1])
                .ok_or_else(|| Error::Data(format!("unknown entity {}", &record[1])))?;
            let value: f64 = record[3]
                .parse()
                .map_err(|_| Error::Data(format!("bad value {}", &record[3])))?;
            products.insert(record[2].to_string());
            rows.push((supplier, buyer, record[2].to_string(), value));
        }
        let products: Vec<String> = products.into_iter().collect();
        let product_index: BTreeMap<&str, u32> = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i as u32))
            .collect();
        let transactions = rows
            .into_iter()
            .map(|(s, b, p, v)| EntityTransaction {
                supplier: s,
                buyer: b,
                product: product_index[p.as_str()],
                value_usd: v,
            })
            .collect();

        let rpath = dir.join("report.json");
        let report = match std::fs::read_to_string(&rpath) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::json("report.json", e))?,
            Err(_) => IngestReport::default(),
        };
        Ok(CleanWorld {
            entities,
            products,
            transactions,
            report,
        })
    }
}

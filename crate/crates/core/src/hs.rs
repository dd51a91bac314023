//! Harmonized System code handling: 4-digit code validation, the chapter →
//! section table, and edition concordance (HS 2017 → HS 2022).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Returns true when `code` is a well-formed 4-digit HS code.
pub fn is_valid_hs4(code: &str) -> bool {
    code.len() == 4 && code.bytes().all(|b| b.is_ascii_digit())
}

/// Chapter (first two digits) of a 4-digit code.
fn chapter(code: &str) -> Option<u8> {
    if !is_valid_hs4(code) {
        return None;
    }
    code[..2].parse::<u8>().ok()
}

/// Maps 4-digit HS codes to one of the 21 HS sections.
///
/// The built-in table follows the WCO chapter ranges; a CSV override
/// (`hs4,section`) can replace it for non-standard universes.
#[derive(Debug, Clone)]
pub enum SectionTable {
    Builtin,
    Explicit(BTreeMap<String, u8>),
}

impl SectionTable {
    pub fn builtin() -> Self {
        SectionTable::Builtin
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut map = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            let code = record.get(0).unwrap_or("").trim().to_string();
            let section: u8 = record
                .get(1)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("bad section number for hs4 {code}")))?;
            if !is_valid_hs4(&code) || !(1..=21).contains(&section) {
                return Err(Error::Data(format!(
                    "invalid section row: {code},{section}"
                )));
            }
            map.insert(code, section);
        }
        Ok(SectionTable::Explicit(map))
    }

    /// Section (1..=21) for a 4-digit code, or a configuration error when the
    /// code has no mapping.
    pub fn section(&self, hs4: &str) -> Result<u8> {
        match self {
            SectionTable::Builtin => {
                let ch = chapter(hs4)
                    .ok_or_else(|| Error::Config(format!("product {hs4} is not a 4-digit code")))?;
                builtin_section(ch)
                    .ok_or_else(|| Error::Config(format!("product {hs4} has no HS section mapping")))
            }
            SectionTable::Explicit(map) => map.get(hs4).copied().ok_or_else(|| {
                Error::Config(format!("product {hs4} has no HS section mapping"))
            }),
        }
    }
}

/// WCO section for an HS chapter (01..=97).
fn builtin_section(chapter: u8) -> Option<u8> {
    let s = match chapter {
        1..=5 => 1,
        6..=14 => 2,
        15 => 3,
        16..=24 => 4,
        25..=27 => 5,
        28..=38 => 6,
        39..=40 => 7,
        41..=43 => 8,
        44..=46 => 9,
        47..=49 => 10,
        50..=63 => 11,
        64..=67 => 12,
        68..=70 => 13,
        71 => 14,
        72..=83 => 15,
        84..=85 => 16,
        86..=89 => 17,
        90..=92 => 18,
        93 => 19,
        94..=96 => 20,
        97 => 21,
        _ => return None,
    };
    Some(s)
}

/// HS edition concordance applied at the 4-digit level.
///
/// The underlying correlation tables are 6-digit; rows are truncated to 4
/// digits and a fanning-out source maps to the modal 4-digit target (ties
/// broken by smallest code). A code already present in the target edition is
/// kept unchanged, which makes the mapping idempotent.
#[derive(Debug, Clone)]
pub struct Concordance {
    map: BTreeMap<String, String>,
    targets: BTreeSet<String>,
    /// When true, any well-formed 4-digit code is accepted as already current.
    permissive: bool,
}

impl Concordance {
    /// Identity concordance: any 4-digit code is accepted unchanged.
    pub fn identity() -> Self {
        Concordance {
            map: BTreeMap::new(),
            targets: BTreeSet::new(),
            permissive: true,
        }
    }

    /// Loads a `hs2017,hs2022` table. Rows may be 4- or 6-digit; 6-digit rows
    /// are truncated.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        // source hs4 -> target hs4 -> multiplicity
        let mut votes: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            let src = truncate4(record.get(0).unwrap_or(""))?;
            let dst = truncate4(record.get(1).unwrap_or(""))?;
            *votes.entry(src).or_default().entry(dst).or_insert(0) += 1;
        }
        if votes.is_empty() {
            return Err(Error::Data(format!(
                "concordance table {} has no rows",
                path.display()
            )));
        }
        let mut map = BTreeMap::new();
        let mut targets = BTreeSet::new();
        for (src, dsts) in votes {
            // modal target; BTreeMap order makes the tie-break the smallest code
            let best = dsts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(code, _)| code.clone())
                .expect("non-empty vote map");
            targets.extend(dsts.keys().cloned());
            map.insert(src, best);
        }
        Ok(Concordance {
            map,
            targets,
            permissive: false,
        })
    }

    /// Converts a code to the current edition. `Err` carries the rejection
    /// reason for the load report.
    pub fn apply(&self, code: &str) -> std::result::Result<String, &'static str> {
        if !is_valid_hs4(code) {
            return Err("bad product code");
        }
        if self.permissive || self.targets.contains(code) {
            return Ok(code.to_string());
        }
        match self.map.get(code) {
            Some(target) => Ok(target.clone()),
            None => Err("unknown hs code"),
        }
    }
}

fn truncate4(code: &str) -> Result<String> {
    let code = code.trim();
    if code.len() >= 4 && code[..4].bytes().all(|b| b.is_ascii_digit()) {
        Ok(code[..4].to_string())
    } else {
        Err(Error::Data(format!("bad hs code in concordance: {code}")))
    }
}

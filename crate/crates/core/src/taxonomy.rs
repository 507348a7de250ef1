//! Custom industry taxonomy, nested product/service taxonomy, the
//! source-taxonomy mapping, and company records.
//!
//! All loaders validate eagerly and report the offending line. Loaded
//! structures are immutable and indexed by id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDUSTRY_HEADER: [&str; 3] = ["id", "name", "description"];
pub const PS_HEADER: [&str; 4] = ["id", "industry_id", "name", "description"];
pub const MAPPING_HEADER: [&str; 4] = ["sector", "group", "code", "industry_id"];

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: u64, message: String },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("line {line}: empty id")]
    EmptyId { line: u64 },
    #[error("line {line}: duplicate id {0:?}", .id)]
    DuplicateId { id: String, line: u64 },
    #[error("line {line}: code {id:?} has an empty description")]
    EmptyDescription { id: String, line: u64 },
    #[error("line {line}: code {id:?} references unknown industry {industry_id:?}")]
    OrphanCode { id: String, industry_id: String, line: u64 },
    #[error("taxonomy is empty")]
    EmptyTaxonomy,
    #[error("industry {0:?} has no product/service codes")]
    IndustryWithoutCodes(String),
    #[error("line {line}: mapping targets unknown industry {industry_id:?}")]
    UnknownTarget { industry_id: String, line: u64 },
    #[error("line {line}: duplicate source triple {triple}")]
    DuplicateTriple { triple: SourceCodeTriple, line: u64 },
    #[error("line {line}: field `{field}` is empty")]
    EmptyField { field: &'static str, line: u64 },
}

pub type Result<T> = std::result::Result<T, TaxonomyError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndustryCode {
    pub id: String,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductServiceCode {
    pub id: String,
    pub industry_id: String,
    pub name: String,
    pub description: String,
}

/// Three-level classification from the source data provider.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceCodeTriple {
    pub sector: String,
    pub group: String,
    pub code: String,
}

impl SourceCodeTriple {
    pub fn new(sector: impl Into<String>, group: impl Into<String>, code: impl Into<String>) -> Self {
        Self {
            sector: sector.into(),
            group: group.into(),
            code: code.into(),
        }
    }
}

impl std::fmt::Display for SourceCodeTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.sector, self.group, self.code)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_codes: Option<SourceCodeTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_industries: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_ps_codes: Option<Vec<String>>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| TaxonomyError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_err(e: csv::Error) -> TaxonomyError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    TaxonomyError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Reads all records of a CSV with an exact expected header. Each record is
/// returned with its 1-based line number.
fn read_csv_rows<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found = rdr.headers().map_err(csv_err)?.clone();
    let found_fields: Vec<&str> = found.iter().map(str::trim).collect();
    if found_fields != header {
        return Err(TaxonomyError::BadHeader {
            expected: header.join(","),
            found: found_fields.join(","),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn io_write_err(e: impl std::fmt::Display) -> TaxonomyError {
    TaxonomyError::Io {
        path: "<writer>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct IndustryTaxonomy {
    codes: Vec<IndustryCode>,
    index: HashMap<String, usize>,
}

impl IndustryTaxonomy {
    /// Validates a list of codes in order. Line loci are reported as the
    /// position in the list plus one (header line).
    pub fn new(codes: Vec<IndustryCode>) -> Result<Self> {
        let rows = codes.into_iter().enumerate().map(|(i, c)| (i as u64 + 2, c)).collect();
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<(u64, IndustryCode)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(TaxonomyError::EmptyTaxonomy);
        }
        let mut index = HashMap::with_capacity(rows.len());
        let mut codes = Vec::with_capacity(rows.len());
        for (line, code) in rows {
            if code.id.is_empty() {
                return Err(TaxonomyError::EmptyId { line });
            }
            if index.contains_key(&code.id) {
                return Err(TaxonomyError::DuplicateId { id: code.id, line });
            }
            if code.description.trim().is_empty() {
                return Err(TaxonomyError::EmptyDescription { id: code.id, line });
            }
            index.insert(code.id.clone(), codes.len());
            codes.push(code);
        }
        Ok(Self { codes, index })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_csv_rows(reader, &INDUSTRY_HEADER)?
            .into_iter()
            .map(|(line, f)| {
                let mut f = f.into_iter();
                let mut next = || f.next().unwrap_or_default();
                (
                    line,
                    IndustryCode {
                        id: next().trim().to_owned(),
                        name: next(),
                        description: next(),
                    },
                )
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(INDUSTRY_HEADER).map_err(io_write_err)?;
        for c in &self.codes {
            w.write_record([&c.id, &c.name, &c.description]).map_err(io_write_err)?;
        }
        w.flush().map_err(io_write_err)
    }

    pub fn get(&self, id: &str) -> Option<&IndustryCode> {
        self.index.get(id).map(|&i| &self.codes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Codes in file order.
    pub fn codes(&self) -> &[IndustryCode] {
        &self.codes
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().map(|c| c.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

impl PartialEq for IndustryTaxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.codes == other.codes
    }
}

#[derive(Debug, Clone)]
pub struct ProductServiceTaxonomy {
    codes: Vec<ProductServiceCode>,
    index: HashMap<String, usize>,
    children: BTreeMap<String, Vec<usize>>,
}

impl ProductServiceTaxonomy {
    pub fn new(codes: Vec<ProductServiceCode>, industries: &IndustryTaxonomy) -> Result<Self> {
        let rows = codes.into_iter().enumerate().map(|(i, c)| (i as u64 + 2, c)).collect();
        Self::from_rows(rows, industries)
    }

    fn from_rows(rows: Vec<(u64, ProductServiceCode)>, industries: &IndustryTaxonomy) -> Result<Self> {
        if rows.is_empty() {
            return Err(TaxonomyError::EmptyTaxonomy);
        }
        let mut index = HashMap::with_capacity(rows.len());
        let mut children: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut codes = Vec::with_capacity(rows.len());
        for (line, code) in rows {
            if code.id.is_empty() {
                return Err(TaxonomyError::EmptyId { line });
            }
            if index.contains_key(&code.id) {
                return Err(TaxonomyError::DuplicateId { id: code.id, line });
            }
            if !industries.contains(&code.industry_id) {
                return Err(TaxonomyError::OrphanCode {
                    id: code.id,
                    industry_id: code.industry_id,
                    line,
                });
            }
            if code.description.trim().is_empty() {
                return Err(TaxonomyError::EmptyDescription { id: code.id, line });
            }
            index.insert(code.id.clone(), codes.len());
            children.entry(code.industry_id.clone()).or_default().push(codes.len());
            codes.push(code);
        }
        if let Some(missing) = industries.ids().find(|id| !children.contains_key(*id)) {
            return Err(TaxonomyError::IndustryWithoutCodes(missing.to_owned()));
        }
        Ok(Self { codes, index, children })
    }

    pub fn from_reader<R: Read>(reader: R, industries: &IndustryTaxonomy) -> Result<Self> {
        let rows = read_csv_rows(reader, &PS_HEADER)?
            .into_iter()
            .map(|(line, f)| {
                let mut f = f.into_iter();
                let mut next = || f.next().unwrap_or_default();
                (
                    line,
                    ProductServiceCode {
                        id: next().trim().to_owned(),
                        industry_id: next().trim().to_owned(),
                        name: next(),
                        description: next(),
                    },
                )
            })
            .collect();
        Self::from_rows(rows, industries)
    }

    pub fn load(path: impl AsRef<Path>, industries: &IndustryTaxonomy) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?, industries)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PS_HEADER).map_err(io_write_err)?;
        for c in &self.codes {
            w.write_record([&c.id, &c.industry_id, &c.name, &c.description])
                .map_err(io_write_err)?;
        }
        w.flush().map_err(io_write_err)
    }

    pub fn get(&self, id: &str) -> Option<&ProductServiceCode> {
        self.index.get(id).map(|&i| &self.codes[i])
    }

    /// Child codes of an industry in file order; empty if the industry is unknown.
    pub fn children(&self, industry_id: &str) -> Vec<&ProductServiceCode> {
        self.children
            .get(industry_id)
            .map(|ix| ix.iter().map(|&i| &self.codes[i]).collect())
            .unwrap_or_default()
    }

    pub fn industry_ids(&self) -> impl Iterator<Item = &str> {
        self.children.keys().map(String::as_str)
    }

    pub fn codes(&self) -> &[ProductServiceCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

impl PartialEq for ProductServiceTaxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.codes == other.codes
    }
}

/// Exact-match lookup from a source triple to a custom industry id.
#[derive(Debug, Clone)]
pub struct SourceMapping {
    entries: Vec<(SourceCodeTriple, String)>,
    index: HashMap<SourceCodeTriple, usize>,
}

impl SourceMapping {
    pub fn new(entries: Vec<(SourceCodeTriple, String)>, industries: &IndustryTaxonomy) -> Result<Self> {
        let rows = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| (i as u64 + 2, e))
            .collect();
        Self::from_rows(rows, industries)
    }

    /// A mapping with no entries; every company goes to similarity labeling.
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn from_rows(rows: Vec<(u64, (SourceCodeTriple, String))>, industries: &IndustryTaxonomy) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        let mut entries = Vec::with_capacity(rows.len());
        for (line, (triple, target)) in rows {
            for (field, value) in [
                ("sector", &triple.sector),
                ("group", &triple.group),
                ("code", &triple.code),
                ("industry_id", &target),
            ] {
                if value.is_empty() {
                    return Err(TaxonomyError::EmptyField { field, line });
                }
            }
            if !industries.contains(&target) {
                return Err(TaxonomyError::UnknownTarget {
                    industry_id: target,
                    line,
                });
            }
            if index.contains_key(&triple) {
                return Err(TaxonomyError::DuplicateTriple { triple, line });
            }
            index.insert(triple.clone(), entries.len());
            entries.push((triple, target));
        }
        Ok(Self { entries, index })
    }

    pub fn from_reader<R: Read>(reader: R, industries: &IndustryTaxonomy) -> Result<Self> {
        let rows = read_csv_rows(reader, &MAPPING_HEADER)?
            .into_iter()
            .map(|(line, f)| {
                let mut f = f.into_iter().map(|s| s.trim().to_owned());
                let mut next = || f.next().unwrap_or_default();
                let triple = SourceCodeTriple::new(next(), next(), next());
                (line, (triple, next()))
            })
            .collect();
        Self::from_rows(rows, industries)
    }

    pub fn load(path: impl AsRef<Path>, industries: &IndustryTaxonomy) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?, industries)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MAPPING_HEADER).map_err(io_write_err)?;
        for (t, target) in &self.entries {
            w.write_record([&t.sector, &t.group, &t.code, target])
                .map_err(io_write_err)?;
        }
        w.flush().map_err(io_write_err)
    }

    /// Exact lookup on the full triple. No partial-level fallback.
    pub fn map(&self, triple: &SourceCodeTriple) -> Option<&str> {
        self.index.get(triple).map(|&i| self.entries[i].1.as_str())
    }

    pub fn entries(&self) -> &[(SourceCodeTriple, String)] {
        &self.entries
    }

    /// Industry ids reachable through the mapping.
    pub fn covered(&self) -> BTreeSet<String> {
        self.entries.iter().map(|(_, t)| t.clone()).collect()
    }

    /// Industry ids of `taxonomy` not reachable through the mapping.
    pub fn uncovered(&self, taxonomy: &IndustryTaxonomy) -> BTreeSet<String> {
        let covered = self.covered();
        taxonomy
            .ids()
            .filter(|id| !covered.contains(*id))
            .map(str::to_owned)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Convenience wrapper over [`SourceMapping::map`].
pub fn map_source_codes<'a>(triple: &SourceCodeTriple, mapping: &'a SourceMapping) -> Option<&'a str> {
    mapping.map(triple)
}

/// Reads companies from JSON lines. Blank lines are skipped.
pub fn read_companies<R: Read>(reader: R) -> Result<Vec<CompanyRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|source| TaxonomyError::Io {
            path: "<companies>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CompanyRecord = serde_json::from_str(&line).map_err(|e| TaxonomyError::Json {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.id.is_empty() {
            return Err(TaxonomyError::EmptyId { line: line_no });
        }
        if rec.description.trim().is_empty() {
            return Err(TaxonomyError::EmptyDescription {
                id: rec.id,
                line: line_no,
            });
        }
        if let Some(t) = &rec.source_codes {
            for (field, value) in [("sector", &t.sector), ("group", &t.group), ("code", &t.code)] {
                if value.is_empty() {
                    return Err(TaxonomyError::EmptyField { field, line: line_no });
                }
            }
        }
        if !seen.insert(rec.id.clone()) {
            return Err(TaxonomyError::DuplicateId {
                id: rec.id,
                line: line_no,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_companies(path: impl AsRef<Path>) -> Result<Vec<CompanyRecord>> {
    read_companies(open(path.as_ref())?)
}

pub fn write_companies<W: Write>(mut writer: W, companies: &[CompanyRecord]) -> std::io::Result<()> {
    for c in companies {
        serde_json::to_writer(&mut writer, c)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

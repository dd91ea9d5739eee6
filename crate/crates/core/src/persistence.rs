//! Document formats and file I/O.
//!
//! A corpus file holds one JSON [`ItemDocument`] per line, in insertion
//! order. Saving writes canonical documents: normalized labels in sorted
//! order, canonical enumeration tokens, optional fields omitted when empty.
//! The network document is a single JSON object with `nodes` and `edges`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::matching::{Edge, ExchangeNetwork, Node};
use crate::model::{
    label_set, Category, Corpus, CorpusError, DataJacket, DataKind, DataRequest, Item,
    ValidationError, ValidationErrors,
};

/// Wire form of a single item, shared by files, the HTTP service and the CLI.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: String,
    pub name: String,
    pub variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// Fields this format does not define.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ItemDocument {
    pub fn from_item(item: &Item) -> Self {
        let variables = item
            .variables()
            .iter()
            .map(|l| l.as_str().to_string())
            .collect();
        match item {
            Item::Request(r) => ItemDocument {
                id: Some(r.id.clone()),
                kind: DataKind::Request.as_str().into(),
                name: r.name.clone(),
                variables,
                purpose: r.purpose.clone(),
                category: r.category.map(|c| c.as_str().into()),
                ..Default::default()
            },
            Item::Jacket(j) => ItemDocument {
                id: Some(j.id.clone()),
                kind: DataKind::Providable.as_str().into(),
                name: j.name.clone(),
                variables,
                outline: j.outline.clone(),
                types: (!j.types.is_empty())
                    .then(|| j.types.iter().map(|t| t.as_str().into()).collect()),
                formats: (!j.formats.is_empty())
                    .then(|| j.formats.iter().map(|f| f.as_str().into()).collect()),
                sharing: j.sharing.map(|s| s.as_str().into()),
                ..Default::default()
            },
        }
    }

    /// Validates the document into an item. A missing id yields an item with
    /// an empty id, which [`Corpus::insert`] replaces with a generated one.
    pub fn to_item(&self) -> Result<Item, ValidationErrors> {
        let kind = DataKind::parse(&self.kind)
            .map_err(|_| ValidationError::UnknownKind(self.kind.clone()))?;
        let mut errors = Vec::new();

        let id = match &self.id {
            Some(id) if id.trim().is_empty() => {
                errors.push(ValidationError::BlankId);
                String::new()
            }
            Some(id) => id.clone(),
            None => String::new(),
        };

        let forbidden: &[(&'static str, bool)] = match kind {
            DataKind::Request => &[
                ("outline", self.outline.is_some()),
                ("types", self.types.is_some()),
                ("formats", self.formats.is_some()),
                ("sharing", self.sharing.is_some()),
            ],
            DataKind::Providable => &[
                ("purpose", self.purpose.is_some()),
                ("category", self.category.is_some()),
            ],
        };
        for (field, present) in forbidden {
            if *present {
                errors.push(ValidationError::FieldNotAllowed { field, kind });
            }
        }

        let item: Option<Item> = match kind {
            DataKind::Request => {
                let category = match self.category.as_deref() {
                    None => None,
                    Some(raw) => match Category::parse(raw) {
                        Ok(c) => Some(c),
                        Err(_) => {
                            errors.push(ValidationError::UnknownCategory(raw.to_string()));
                            None
                        }
                    },
                };
                match crate::model::validate_request(
                    &self.name,
                    &self.variables,
                    self.purpose.as_deref(),
                ) {
                    Ok(r) => Some(Item::Request(DataRequest {
                        id,
                        category,
                        ..r
                    })),
                    Err(e) => {
                        errors.extend(e.0);
                        None
                    }
                }
            }
            DataKind::Providable => {
                let empty: Vec<String> = Vec::new();
                match crate::model::validate_jacket(
                    &self.name,
                    &self.variables,
                    self.outline.as_deref(),
                    self.types.as_ref().unwrap_or(&empty),
                    self.formats.as_ref().unwrap_or(&empty),
                    self.sharing.as_deref(),
                ) {
                    Ok(j) => Some(Item::Jacket(DataJacket { id, ..j })),
                    Err(e) => {
                        errors.extend(e.0);
                        None
                    }
                }
            }
        };

        match item {
            Some(item) if errors.is_empty() => Ok(item),
            _ => Err(ValidationErrors(errors)),
        }
    }
}

/// What to do with document fields the format does not define.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldPolicy {
    /// Reject the record.
    #[default]
    Strict,
    /// Keep the fields with the item and write them back on save.
    Lenient,
}

#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {errors}")]
    Validation {
        line: usize,
        errors: ValidationErrors,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
}

fn io_error(path: &Path, source: io::Error) -> PersistenceError {
    PersistenceError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_line(line_no: usize, line: &str, policy: FieldPolicy) -> Result<(Item, Map<String, Value>), PersistenceError> {
    let doc: ItemDocument = serde_json::from_str(line).map_err(|e| PersistenceError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if policy == FieldPolicy::Strict {
        if let Some(field) = doc.extra.keys().next() {
            return Err(PersistenceError::Parse {
                line: line_no,
                message: format!("unknown field {field:?}"),
            });
        }
    }
    let item = doc.to_item().map_err(|errors| PersistenceError::Validation {
        line: line_no,
        errors,
    })?;
    Ok((item, doc.extra))
}

/// Parses corpus records from text. Blank lines are skipped.
pub fn parse_corpus(text: &str, policy: FieldPolicy) -> Result<Corpus, PersistenceError> {
    let mut corpus = Corpus::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let (item, extra) = parse_line(line_no, line, policy)?;
        let id = corpus.insert(item).map_err(|e| match e {
            CorpusError::DuplicateId(id) => PersistenceError::DuplicateId { line: line_no, id },
            other => PersistenceError::Parse {
                line: line_no,
                message: other.to_string(),
            },
        })?;
        corpus.set_extras(&id, extra);
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, PersistenceError> {
    load_corpus_with(path, FieldPolicy::Strict)
}

pub fn load_corpus_with(
    path: impl AsRef<Path>,
    policy: FieldPolicy,
) -> Result<Corpus, PersistenceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_corpus(&text, policy)
}

/// Serializes one item (with any preserved extra fields) to a single line.
pub fn render_item(corpus: &Corpus, item: &Item) -> String {
    let mut doc = ItemDocument::from_item(item);
    if let Some(extra) = corpus.extras(item.id()) {
        doc.extra = extra.clone();
    }
    serde_json::to_string(&doc).expect("item documents always serialize")
}

pub fn render_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for item in corpus.items() {
        out.push_str(&render_item(corpus, item));
        out.push('\n');
    }
    out
}

/// Writes the corpus through a temporary sibling file and renames it into place.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), PersistenceError> {
    write_atomic(path.as_ref(), render_corpus(corpus).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistenceError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes).map_err(|e| io_error(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| io_error(path, e))
}

/// A problem with one row of a bulk import.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowProblem {
    #[error("{0}")]
    Invalid(ValidationErrors),
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("row {row}: {problem}")]
pub struct RowError {
    /// 1-based line number in the source file.
    pub row: usize,
    pub problem: RowProblem,
}

/// Outcome of a bulk import: accepted items and rejected rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Import {
    pub items: Vec<Item>,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
}

const LIST_DELIMITER: char = ';';

fn split_list(cell: &str) -> Vec<String> {
    cell.split(LIST_DELIMITER)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn csv_columns(kind: DataKind) -> (&'static [&'static str], &'static [&'static str]) {
    match kind {
        DataKind::Request => (&["name", "variables"], &["id", "purpose", "category"]),
        DataKind::Providable => (
            &["name", "variables"],
            &["id", "outline", "types", "formats", "sharing"],
        ),
    }
}

/// Imports items of one kind from CSV.
///
/// The header must contain `name` and `variables`; requests may add `id`,
/// `purpose` and `category`, jackets `id`, `outline`, `types`, `formats` and
/// `sharing`. List cells use `;` between entries. Invalid rows are collected
/// in [`Import::errors`] and never abort the import.
pub fn import_csv_reader<R: Read>(reader: R, kind: DataKind) -> Result<Import, ImportError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| ImportError::HeaderMismatch(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();

    let (required, optional) = csv_columns(kind);
    for col in required {
        if !headers.iter().any(|h| h == col) {
            return Err(ImportError::HeaderMismatch(format!(
                "missing required column {col:?}"
            )));
        }
    }
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !required.contains(&h.as_str()) && !optional.contains(&h.as_str()) {
            return Err(ImportError::HeaderMismatch(format!(
                "column {h:?} is not defined for {kind} items"
            )));
        }
        if !seen.insert(h.as_str()) {
            return Err(ImportError::HeaderMismatch(format!("duplicate column {h:?}")));
        }
    }

    let mut import = Import::default();
    for (i, record) in rdr.records().enumerate() {
        let row = record
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map_or(i + 2, |p| p.line() as usize);
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                import.errors.push(RowError {
                    row,
                    problem: RowProblem::Malformed(e.to_string()),
                });
                continue;
            }
        };
        let cell = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| record.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let doc = ItemDocument {
            id: cell("id").map(str::to_string),
            kind: kind.as_str().into(),
            name: cell("name").unwrap_or("").to_string(),
            variables: cell("variables").map(split_list).unwrap_or_default(),
            purpose: cell("purpose").map(str::to_string),
            outline: cell("outline").map(str::to_string),
            types: cell("types").map(split_list),
            formats: cell("formats").map(split_list),
            sharing: cell("sharing").map(str::to_string),
            category: cell("category").map(str::to_string),
            extra: Map::new(),
        };
        match doc.to_item() {
            Ok(item) => import.items.push(item),
            Err(errors) => import.errors.push(RowError {
                row,
                problem: RowProblem::Invalid(errors),
            }),
        }
    }
    Ok(import)
}

pub fn import_csv(path: impl AsRef<Path>, kind: DataKind) -> Result<Import, ImportError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| ImportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    import_csv_reader(file, kind)
}

/// Imports item records of one kind, collecting per-line errors.
pub fn import_records_str(text: &str, kind: DataKind, policy: FieldPolicy) -> Import {
    let mut import = Import::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        match parse_line(row, line, policy) {
            Ok((item, _)) if item.kind() != kind => import.errors.push(RowError {
                row,
                problem: RowProblem::Malformed(format!(
                    "expected a {kind} record, found {}",
                    item.kind()
                )),
            }),
            Ok((item, _)) => import.items.push(item),
            Err(PersistenceError::Validation { errors, .. }) => import.errors.push(RowError {
                row,
                problem: RowProblem::Invalid(errors),
            }),
            Err(other) => import.errors.push(RowError {
                row,
                problem: RowProblem::Malformed(other.to_string()),
            }),
        }
    }
    import
}

pub fn import_records(path: impl AsRef<Path>, kind: DataKind) -> Result<Import, ImportError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ImportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(import_records_str(&text, kind, FieldPolicy::Strict))
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("item {id:?}: {value:?} contains the list delimiter ';'")]
    Delimiter { id: String, value: String },
}

fn join_list<'a>(id: &str, values: impl IntoIterator<Item = &'a str>) -> Result<String, ExportError> {
    let mut out = Vec::new();
    for v in values {
        if v.contains(LIST_DELIMITER) {
            return Err(ExportError::Delimiter {
                id: id.to_string(),
                value: v.to_string(),
            });
        }
        out.push(v);
    }
    Ok(out.join("; "))
}

/// Writes the items of one kind as CSV in the layout [`import_csv_reader`] reads.
/// Returns the number of rows written.
pub fn export_csv_writer<W: io::Write>(
    corpus: &Corpus,
    kind: DataKind,
    writer: W,
) -> Result<usize, ExportError> {
    let (required, optional) = csv_columns(kind);
    let mut wtr = csv::Writer::from_writer(writer);
    let header: Vec<&str> = ["id"]
        .into_iter()
        .chain(required.iter().copied())
        .chain(optional.iter().copied().filter(|c| *c != "id"))
        .collect();
    wtr.write_record(&header)?;
    let mut rows = 0;
    for item in corpus.items_of(kind) {
        let doc = ItemDocument::from_item(item);
        let id = item.id();
        let list = |v: &Option<Vec<String>>| {
            join_list(id, v.iter().flatten().map(String::as_str))
        };
        let mut record = Vec::with_capacity(header.len());
        for col in &header {
            record.push(match *col {
                "id" => id.to_string(),
                "name" => doc.name.clone(),
                "variables" => join_list(id, doc.variables.iter().map(String::as_str))?,
                "purpose" => doc.purpose.clone().unwrap_or_default(),
                "category" => doc.category.clone().unwrap_or_default(),
                "outline" => doc.outline.clone().unwrap_or_default(),
                "types" => list(&doc.types)?,
                "formats" => list(&doc.formats)?,
                "sharing" => doc.sharing.clone().unwrap_or_default(),
                other => unreachable!("column {other} has no source field"),
            });
        }
        wtr.write_record(&record)?;
        rows += 1;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(rows)
}

pub fn export_csv(corpus: &Corpus, kind: DataKind, path: impl AsRef<Path>) -> Result<usize, ExportError> {
    let mut buf = Vec::new();
    let rows = export_csv_writer(corpus, kind, &mut buf)?;
    let path = path.as_ref();
    write_atomic(path, &buf).map_err(|e| match e {
        PersistenceError::Io { path, source } => ExportError::Io { path, source },
        other => ExportError::Io {
            path: path.display().to_string(),
            source: io::Error::other(other.to_string()),
        },
    })?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub kind: DataKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub source: String,
    pub target: String,
    pub weight: usize,
    pub shared: Vec<String>,
}

/// Nodes and edges of the exchange network. `seq` is set by the service to
/// the last event the network reflects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkDocumentError {
    #[error("edge {0}-{1} references an unknown node")]
    DanglingEdge(String, String),
    #[error("edge {0}-{1} has weight {2} but {3} shared labels")]
    WeightMismatch(String, String, usize, usize),
    #[error("edge {0}-{1} is not stored with source < target")]
    Unordered(String, String),
    #[error("edge {0}-{1} shares no labels")]
    EmptyEdge(String, String),
}

impl NetworkDocument {
    pub fn from_network(network: &ExchangeNetwork) -> Self {
        NetworkDocument {
            seq: None,
            nodes: network
                .nodes
                .iter()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    kind: n.kind,
                    name: n.name.clone(),
                })
                .collect(),
            edges: network
                .edges
                .iter()
                .map(|e| EdgeDocument {
                    source: e.a.clone(),
                    target: e.b.clone(),
                    weight: e.weight(),
                    shared: e.shared.iter().map(|l| l.as_str().to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> Result<ExchangeNetwork, NetworkDocumentError> {
        let mut nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                kind: n.kind,
                name: n.name.clone(),
            })
            .collect();
        nodes.sort_by(|x, y| x.id.cmp(&y.id));
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();

        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let pair = || (e.source.clone(), e.target.clone());
            if !ids.contains(e.source.as_str()) || !ids.contains(e.target.as_str()) {
                let (a, b) = pair();
                return Err(NetworkDocumentError::DanglingEdge(a, b));
            }
            if e.source >= e.target {
                let (a, b) = pair();
                return Err(NetworkDocumentError::Unordered(a, b));
            }
            let shared = label_set(&e.shared);
            if shared.is_empty() {
                let (a, b) = pair();
                return Err(NetworkDocumentError::EmptyEdge(a, b));
            }
            if shared.len() != e.weight {
                let (a, b) = pair();
                return Err(NetworkDocumentError::WeightMismatch(a, b, e.weight, shared.len()));
            }
            edges.push(Edge {
                a: e.source.clone(),
                b: e.target.clone(),
                shared,
            });
        }
        edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        Ok(ExchangeNetwork { nodes, edges })
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network documents always serialize");
        s.push('\n');
        s
    }
}

pub fn export_network(
    network: &ExchangeNetwork,
    path: impl AsRef<Path>,
) -> Result<(), PersistenceError> {
    write_atomic(
        path.as_ref(),
        NetworkDocument::from_network(network).render().as_bytes(),
    )
}

#[derive(Debug, Error)]
pub enum LoadNetworkError {
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] NetworkDocumentError),
}

pub fn load_network(path: impl AsRef<Path>) -> Result<ExchangeNetwork, LoadNetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let doc: NetworkDocument = serde_json::from_str(&text)?;
    Ok(doc.to_network()?)
}

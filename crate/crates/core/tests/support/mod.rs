//! Random corpus generation and brute-force oracles.
//!
//! The oracles work on plain strings and nested loops only. They never call
//! into the matching or analytics code they are used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use teeda_core::model::{validate_jacket, validate_request};
use teeda_core::{Category, Corpus, Item};

const VOCABULARY: &[&str] = &[
    "date", "area name", "address", "location", "country", "country name", "age", "age group",
    "sex", "prefecture name", "city name", "number of cases", "total number of cases",
    "daily number of cases", "number of tests", "reason", "needs", "product name",
    "service name", "type of business", "number of contacts", "hospital name",
    "number of beds", "temperature", "time of day", "population", "event name",
    "degree of seriousness", "place of residence", "type of anxiety", "consultation content",
    "都道府県名", "日付", "市区町村", "âge", "région", "número de casos", "occupation",
    "income", "household size", "store name", "measure", "industry", "latitude", "longitude",
    "mesh code", "station name", "ridership", "price", "stock level", "symptom", "test result",
    "vaccine", "school name", "closure period", "mobility index", "sentiment", "keyword",
    "url", "source",
];

const TYPES: &[&str] = &[
    "time series", "numerical value", "text", "table", "image", "graph", "movie", "sound",
    "other", "number", "others", "Time Series",
];
const FORMATS: &[&str] = &[
    "CSV", "txt", "RDB", "markup", "RDF", "weka", "shape", "PDF", "other", "others", "csv",
];
const SHARING: &[&str] = &[
    "generally shareable",
    "conditions/negotiations are required",
    "shareable within a limited range",
    "non-shareable",
    "shareable by purchase",
    "shareable by purchased",
    "not yet decided",
    "other conditions",
];
const CATEGORIES: &[&str] = &[
    "phenomenon understanding",
    "individual decision-making",
    "organizational decision-making",
];

/// An item as it would be typed in: surface forms, aliases and all.
#[derive(Debug, Clone)]
pub struct RawItem {
    pub id: String,
    pub is_request: bool,
    pub name: String,
    pub variables: Vec<String>,
    pub types: Vec<String>,
    pub formats: Vec<String>,
    pub sharing: Option<String>,
    pub category: Option<String>,
}

fn surface_form<R: Rng>(rng: &mut R, label: &str) -> String {
    match rng.random_range(0..4) {
        0 => label.to_uppercase(),
        1 => format!("  {}\t", label.replace(' ', "   ")),
        _ => label.to_string(),
    }
}

/// A random corpus with at most `max_items` items and at most 18 variables each.
pub fn random_raw_corpus<R: Rng>(rng: &mut R, max_items: usize) -> Vec<RawItem> {
    let n = rng.random_range(0..=max_items);
    // a small vocabulary slice per corpus keeps overlaps frequent
    let vocab_size = rng.random_range(3..=VOCABULARY.len());
    let vocab: Vec<&str> = VOCABULARY.choose_multiple(rng, vocab_size).copied().collect();

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids.into_iter()
        .map(|k| {
            let is_request = rng.random_bool(0.5);
            let n_vars = rng.random_range(1..=18);
            let variables = (0..n_vars)
                .map(|_| {
                    let label = vocab.choose(rng).unwrap();
                    surface_form(rng, label)
                })
                .collect();
            let pick = |rng: &mut R, pool: &[&str], max: usize| -> Vec<String> {
                let m = rng.random_range(0..=max);
                (0..m).map(|_| pool.choose(rng).unwrap().to_string()).collect()
            };
            let (types, formats, sharing, category) = if is_request {
                let category = rng
                    .random_bool(0.7)
                    .then(|| CATEGORIES.choose(rng).unwrap().to_string());
                (Vec::new(), Vec::new(), None, category)
            } else {
                let types = pick(rng, TYPES, 4);
                let formats = pick(rng, FORMATS, 3);
                let sharing = rng
                    .random_bool(0.8)
                    .then(|| SHARING.choose(rng).unwrap().to_string());
                (types, formats, sharing, None)
            };
            RawItem {
                id: format!("{}{k}", if is_request { "r" } else { "j" }),
                is_request,
                name: format!("item {k}"),
                variables,
                types,
                formats,
                sharing,
                category,
            }
        })
        .collect()
}

/// Builds a corpus through the public validators.
pub fn to_corpus(raw: &[RawItem]) -> Corpus {
    let mut corpus = Corpus::new();
    for r in raw {
        let item: Item = if r.is_request {
            let mut req = validate_request(&r.name, &r.variables, None)
                .unwrap()
                .with_id(&r.id);
            req.category = r.category.as_deref().map(|c| Category::parse(c).unwrap());
            req.into()
        } else {
            validate_jacket(
                &r.name,
                &r.variables,
                None,
                &r.types,
                &r.formats,
                r.sharing.as_deref(),
            )
            .unwrap()
            .with_id(&r.id)
            .into()
        };
        corpus.insert(item).unwrap();
    }
    corpus
}

// ---------------------------------------------------------------------------
// oracles

/// Item reduced to plain strings.
#[derive(Debug, Clone)]
pub struct Plain {
    pub id: String,
    pub is_request: bool,
    pub labels: Vec<String>,
    pub types: Vec<String>,
    pub formats: Vec<String>,
    pub sharing: Option<String>,
    pub category: Option<String>,
}

fn norm(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn canonical(raw: &str, table: &[(&str, &str)]) -> String {
    let n = norm(raw);
    for (from, to) in table {
        if n == from.to_lowercase() {
            return to.to_string();
        }
    }
    panic!("oracle has no token for {raw:?}")
}

const TYPE_TABLE: &[(&str, &str)] = &[
    ("time series", "time series"),
    ("numerical value", "numerical value"),
    ("number", "numerical value"),
    ("text", "text"),
    ("table", "table"),
    ("image", "image"),
    ("graph", "graph"),
    ("movie", "movie"),
    ("sound", "sound"),
    ("other", "other"),
    ("others", "other"),
];
const FORMAT_TABLE: &[(&str, &str)] = &[
    ("csv", "CSV"),
    ("txt", "txt"),
    ("rdb", "RDB"),
    ("markup", "markup"),
    ("rdf", "RDF"),
    ("weka", "weka"),
    ("shape", "shape"),
    ("pdf", "PDF"),
    ("other", "other"),
    ("others", "other"),
];
const SHARING_TABLE: &[(&str, &str)] = &[
    ("generally shareable", "generally shareable"),
    ("conditions/negotiations are required", "conditions/negotiations are required"),
    ("shareable within a limited range", "shareable within a limited range"),
    ("non-shareable", "non-shareable"),
    ("shareable by purchase", "shareable by purchase"),
    ("shareable by purchased", "shareable by purchase"),
    ("not yet decided", "not yet decided"),
    ("other conditions", "other conditions"),
];

fn dedup(mut v: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    v.retain(|s| !s.is_empty());
    for s in v {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

pub fn plain(raw: &[RawItem]) -> Vec<Plain> {
    raw.iter()
        .map(|r| Plain {
            id: r.id.clone(),
            is_request: r.is_request,
            labels: dedup(r.variables.iter().map(|v| norm(v)).collect()),
            types: dedup(r.types.iter().map(|t| canonical(t, TYPE_TABLE)).collect()),
            formats: dedup(r.formats.iter().map(|f| canonical(f, FORMAT_TABLE)).collect()),
            sharing: r.sharing.as_deref().map(|s| canonical(s, SHARING_TABLE)),
            category: r.category.clone(),
        })
        .collect()
}

/// Every unordered pair with a non-empty intersection, as `(min id, max id) -> shared`.
pub fn oracle_edges(items: &[Plain]) -> BTreeMap<(String, String), BTreeSet<String>> {
    let mut out = BTreeMap::new();
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let mut shared = BTreeSet::new();
            for a in &items[i].labels {
                for b in &items[j].labels {
                    if a == b {
                        shared.insert(a.clone());
                    }
                }
            }
            if !shared.is_empty() {
                let (x, y) = (items[i].id.clone(), items[j].id.clone());
                let key = if x < y { (x, y) } else { (y, x) };
                out.insert(key, shared);
            }
        }
    }
    out
}

pub fn oracle_neighbors(items: &[Plain], id: &str) -> BTreeSet<String> {
    let me = items.iter().find(|p| p.id == id).unwrap();
    items
        .iter()
        .filter(|p| p.id != id && p.labels.iter().any(|l| me.labels.contains(l)))
        .map(|p| p.id.clone())
        .collect()
}

/// `(items, occurrences, distinct, max, min)`; `None` side filter means all.
pub fn oracle_side(items: &[Plain], requests: Option<bool>) -> (usize, usize, usize, usize, usize) {
    let side: Vec<&Plain> = items
        .iter()
        .filter(|p| requests.is_none_or(|r| p.is_request == r))
        .collect();
    let mut distinct = HashSet::new();
    let mut total = 0;
    let mut max = 0;
    let mut min = usize::MAX;
    for p in &side {
        total += p.labels.len();
        max = max.max(p.labels.len());
        min = min.min(p.labels.len());
        for l in &p.labels {
            distinct.insert(l.clone());
        }
    }
    (side.len(), total, distinct.len(), max, min)
}

/// Frequency table sorted by count desc, label asc.
pub fn oracle_frequency(items: &[Plain], requests: Option<bool>) -> Vec<(String, usize)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for p in items.iter().filter(|p| requests.is_none_or(|r| p.is_request == r)) {
        for l in &p.labels {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
    }
    let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows
}

pub fn oracle_common(items: &[Plain]) -> BTreeSet<String> {
    let req: HashSet<&String> = items
        .iter()
        .filter(|p| p.is_request)
        .flat_map(|p| &p.labels)
        .collect();
    items
        .iter()
        .filter(|p| !p.is_request)
        .flat_map(|p| &p.labels)
        .filter(|l| req.contains(l))
        .cloned()
        .collect()
}

pub fn oracle_singletons(items: &[Plain], requests: bool) -> (usize, usize) {
    let rows = oracle_frequency(items, Some(requests));
    (rows.iter().filter(|r| r.1 == 1).count(), rows.len())
}

/// Count per canonical token and the proportion denominator.
pub fn oracle_breakdown(items: &[Plain], dimension: &str) -> (BTreeMap<String, usize>, usize) {
    let mut counts = BTreeMap::new();
    let mut population = 0;
    for p in items.iter().filter(|p| !p.is_request) {
        let tokens: Vec<String> = match dimension {
            "sharing" => p.sharing.iter().cloned().collect(),
            "types" => p.types.clone(),
            "formats" => p.formats.clone(),
            _ => unreachable!(),
        };
        if dimension != "sharing" || !tokens.is_empty() {
            population += 1;
        }
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    (counts, population)
}

/// For each request with best coverage < 1: `(id, covered, total, missing)`,
/// sorted by coverage asc then id.
pub fn oracle_unmet(items: &[Plain]) -> Vec<(String, usize, usize, BTreeSet<String>)> {
    let mut out = Vec::new();
    for r in items.iter().filter(|p| p.is_request) {
        let total = r.labels.len();
        // best: (covered, jacket size, jacket id, missing)
        let mut best: Option<(usize, usize, String, BTreeSet<String>)> = None;
        for j in items.iter().filter(|p| !p.is_request) {
            let covered = r.labels.iter().filter(|l| j.labels.contains(l)).count();
            if covered == 0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((c, size, id, _)) => {
                    covered > *c
                        || (covered == *c && j.labels.len() < *size)
                        || (covered == *c && j.labels.len() == *size && j.id < *id)
                }
            };
            if better {
                let missing = r
                    .labels
                    .iter()
                    .filter(|l| !j.labels.contains(l))
                    .cloned()
                    .collect();
                best = Some((covered, j.labels.len(), j.id.clone(), missing));
            }
        }
        match best {
            Some((c, ..)) if c == total => {}
            Some((c, _, _, missing)) => out.push((r.id.clone(), c, total, missing)),
            None => out.push((r.id.clone(), 0, total, r.labels.iter().cloned().collect())),
        }
    }
    // covered/total ascending, compared by cross-multiplication
    out.sort_by(|a, b| (a.1 * b.2).cmp(&(b.1 * a.2)).then(a.0.cmp(&b.0)));
    out
}

/// Labels of a category's requests that no jacket carries.
pub fn oracle_missing(items: &[Plain], category: &str) -> BTreeSet<String> {
    let provided: HashSet<&String> = items
        .iter()
        .filter(|p| !p.is_request)
        .flat_map(|p| &p.labels)
        .collect();
    items
        .iter()
        .filter(|p| p.is_request && p.category.as_deref() == Some(category))
        .flat_map(|p| &p.labels)
        .filter(|l| !provided.contains(l))
        .cloned()
        .collect()
}

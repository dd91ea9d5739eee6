//! Corpus statistics: per-side counts, variable frequencies, singleton and
//! common-variable metrics, and categorical breakdowns of jacket metadata.
//!
//! Everything is computed exactly. Averages and proportions are [`Ratio`]s;
//! the text renderers format them with two decimals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::matching::rank_candidates;
use crate::model::{
    Corpus, DataFormat, DataJacket, DataKind, DataType, Item, SharingCondition, UnknownToken,
    VariableLabel,
};
use crate::ratio::{as_f64, opt_as_f64};
use crate::{format_two_decimals, Ratio};

/// Counts for one population of items (all items, requests, or jackets).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SideStats {
    pub items: usize,
    /// Sum of variable-set sizes.
    pub variables: usize,
    /// Number of distinct labels.
    pub variable_types: usize,
    #[serde(serialize_with = "opt_as_f64::serialize")]
    pub average: Option<Ratio>,
    pub maximum: Option<usize>,
    pub minimum: Option<usize>,
}

impl SideStats {
    fn of<'a>(items: impl Iterator<Item = &'a Item>) -> Self {
        let mut count = 0;
        let mut total = 0;
        let mut max = None;
        let mut min = None;
        let mut distinct = BTreeSet::new();
        for item in items {
            let n = item.variables().len();
            count += 1;
            total += n;
            max = Some(max.map_or(n, |m: usize| m.max(n)));
            min = Some(min.map_or(n, |m: usize| m.min(n)));
            distinct.extend(item.variables().iter());
        }
        SideStats {
            items: count,
            variables: total,
            variable_types: distinct.len(),
            average: (count > 0).then(|| Ratio::new(total as u64, count as u64)),
            maximum: max,
            minimum: min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub all: SideStats,
    pub requests: SideStats,
    pub providable: SideStats,
}

impl CorpusStats {
    pub fn n_items(&self) -> usize {
        self.all.items
    }

    pub fn n_requests(&self) -> usize {
        self.requests.items
    }

    pub fn n_jackets(&self) -> usize {
        self.providable.items
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    CorpusStats {
        all: SideStats::of(corpus.items()),
        requests: SideStats::of(corpus.items_of(DataKind::Request)),
        providable: SideStats::of(corpus.items_of(DataKind::Providable)),
    }
}

/// One-line summary, e.g. `items 2, requests 1, providable 1, variable types 11, avg 5.50`.
pub fn render_stats_summary(stats: &CorpusStats) -> String {
    let avg = stats
        .all
        .average
        .map_or_else(|| "-".to_string(), format_two_decimals);
    format!(
        "items {}, requests {}, providable {}, variable types {}, avg {}",
        stats.all.items, stats.requests.items, stats.providable.items, stats.all.variable_types, avg
    )
}

/// The characteristic-values table: one row per measure, one column per side.
pub fn render_stats_table(stats: &CorpusStats) -> String {
    fn count(v: Option<usize>) -> String {
        v.map_or_else(|| "-".to_string(), |n| n.to_string())
    }
    fn avg(v: Option<Ratio>) -> String {
        v.map_or_else(|| "-".to_string(), format_two_decimals)
    }

    let sides = [&stats.all, &stats.requests, &stats.providable];
    let rows: [(&str, [String; 3]); 6] = [
        ("No. of data items", sides.map(|s| s.items.to_string())),
        ("No. of variables", sides.map(|s| s.variables.to_string())),
        ("Types of variables", sides.map(|s| s.variable_types.to_string())),
        (
            "Average no. of variables in each data item",
            sides.map(|s| avg(s.average)),
        ),
        (
            "Maximum no. of variables in each data item",
            sides.map(|s| count(s.maximum)),
        ),
        (
            "Minimum no. of variables in each data item",
            sides.map(|s| count(s.minimum)),
        ),
    ];

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<44}{:>10}{:>14}{:>17}",
        "", "All data", "Data request", "Providable data"
    );
    for (label, [a, r, p]) in rows {
        let _ = writeln!(out, "{label:<44}{a:>10}{r:>14}{p:>17}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyRow {
    pub label: VariableLabel,
    pub count: usize,
}

/// Label occurrence counts, sorted by count descending then label ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    /// Tallies labels over variable sets; each set contributes at most 1 per label.
    pub fn tally<'a>(
        sets: impl IntoIterator<Item = &'a BTreeSet<VariableLabel>>,
        top_k: Option<usize>,
    ) -> Self {
        let mut counts: BTreeMap<&VariableLabel, usize> = BTreeMap::new();
        for set in sets {
            for label in set {
                *counts.entry(label).or_default() += 1;
            }
        }
        let mut rows: Vec<FrequencyRow> = counts
            .into_iter()
            .map(|(label, count)| FrequencyRow {
                label: label.clone(),
                count,
            })
            .collect();
        // Stable sort keeps the BTreeMap's label order among equal counts.
        rows.sort_by_key(|r| std::cmp::Reverse(r.count));
        if let Some(k) = top_k {
            rows.truncate(k);
        }
        FrequencyTable { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count_of(&self, label: &str) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.label.as_str() == label)
            .map(|r| r.count)
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn render(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.as_str().chars().count())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut out = String::new();
        for (rank, row) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>3}. {:<width$}  {}",
                rank + 1,
                row.label.as_str(),
                row.count
            );
        }
        out
    }
}

/// How many items (optionally of one kind) contain each label.
pub fn variable_frequency(
    corpus: &Corpus,
    kind_filter: Option<DataKind>,
    top_k: Option<usize>,
) -> FrequencyTable {
    FrequencyTable::tally(
        corpus
            .items()
            .filter(|i| kind_filter.is_none_or(|k| i.kind() == k))
            .map(Item::variables),
        top_k,
    )
}

fn distinct_labels(corpus: &Corpus, kind: DataKind) -> BTreeSet<&VariableLabel> {
    corpus
        .items_of(kind)
        .flat_map(|i| i.variables().iter())
        .collect()
}

/// Labels used on both the request side and the jacket side.
pub fn common_variable_types(corpus: &Corpus) -> (BTreeSet<VariableLabel>, usize) {
    let requested = distinct_labels(corpus, DataKind::Request);
    let common: BTreeSet<VariableLabel> = distinct_labels(corpus, DataKind::Providable)
        .into_iter()
        .filter(|l| requested.contains(l))
        .cloned()
        .collect();
    let n = common.len();
    (common, n)
}

/// `(labels occurring in exactly one item of kind, distinct labels of kind)`.
pub fn singleton_ratio(corpus: &Corpus, kind: DataKind) -> (usize, usize) {
    let table = variable_frequency(corpus, Some(kind), None);
    let singles = table.rows.iter().filter(|r| r.count == 1).count();
    (singles, table.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Sharing,
    Types,
    Formats,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Sharing, Dimension::Types, Dimension::Formats];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Sharing => "sharing",
            Dimension::Types => "types",
            Dimension::Formats => "formats",
        }
    }

    pub fn parse(raw: &str) -> Result<Self, UnknownToken> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(raw.trim()))
            .ok_or_else(|| UnknownToken(raw.to_string()))
    }

    fn tokens(self) -> Vec<&'static str> {
        match self {
            Dimension::Sharing => SharingCondition::ALL.iter().map(|s| s.as_str()).collect(),
            Dimension::Types => DataType::ALL.iter().map(|t| t.as_str()).collect(),
            Dimension::Formats => DataFormat::ALL.iter().map(|f| f.as_str()).collect(),
        }
    }

    fn tokens_of(self, jacket: &DataJacket) -> Vec<&'static str> {
        match self {
            Dimension::Sharing => jacket.sharing.iter().map(|s| s.as_str()).collect(),
            Dimension::Types => jacket.types.iter().map(|t| t.as_str()).collect(),
            Dimension::Formats => jacket.formats.iter().map(|f| f.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BreakdownRow {
    pub token: &'static str,
    pub count: usize,
    #[serde(serialize_with = "opt_as_f64::serialize")]
    pub proportion: Option<Ratio>,
}

/// Jacket counts per canonical token, rows in canonical token order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BreakdownReport {
    pub dimension: Dimension,
    /// Proportion denominator: jackets declaring a sharing condition for
    /// `sharing`, all jackets for `types` and `formats`.
    pub population: usize,
    pub rows: Vec<BreakdownRow>,
}

impl BreakdownReport {
    pub fn row(&self, token: &str) -> Option<&BreakdownRow> {
        self.rows.iter().find(|r| r.token == token)
    }
}

/// Breaks jackets down by sharing condition, data type or format.
///
/// Sharing is single-select, so its proportions sum to 1 over jackets that
/// declare one. Types and formats are multi-select; their proportions are
/// per-jacket incidence and can sum past 1.
pub fn breakdown(corpus: &Corpus, dimension: Dimension) -> BreakdownReport {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut population = 0;
    for jacket in corpus.jackets() {
        let tokens = dimension.tokens_of(jacket);
        if dimension != Dimension::Sharing || !tokens.is_empty() {
            population += 1;
        }
        for token in tokens {
            *counts.entry(token).or_default() += 1;
        }
    }
    let rows = dimension
        .tokens()
        .into_iter()
        .map(|token| {
            let count = counts.get(token).copied().unwrap_or(0);
            BreakdownRow {
                token,
                count,
                proportion: (population > 0)
                    .then(|| Ratio::new(count as u64, population as u64)),
            }
        })
        .collect();
    BreakdownReport {
        dimension,
        population,
        rows,
    }
}

/// Two breakdowns of the same dimension with aligned rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairedBreakdown {
    pub dimension: Dimension,
    pub a: BreakdownReport,
    pub b: BreakdownReport,
}

impl PairedBreakdown {
    pub fn swapped(self) -> Self {
        PairedBreakdown {
            dimension: self.dimension,
            a: self.b,
            b: self.a,
        }
    }

    pub fn render(&self, label_a: &str, label_b: &str) -> String {
        fn pct(p: Option<Ratio>) -> String {
            p.map_or_else(|| "-".to_string(), |p| format_two_decimals(p * 100) + "%")
        }
        let width = self
            .a
            .rows
            .iter()
            .map(|r| r.token.len())
            .max()
            .unwrap_or(0)
            .max(self.dimension.as_str().len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>8} {:>8}  {:>8} {:>8}",
            self.dimension.as_str(),
            label_a,
            "",
            label_b,
            ""
        );
        for (ra, rb) in self.a.rows.iter().zip(&self.b.rows) {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8} {:>8}  {:>8} {:>8}",
                ra.token,
                ra.count,
                pct(ra.proportion),
                rb.count,
                pct(rb.proportion)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>8} {:>8}  {:>8} {:>8}",
            "(population)", self.a.population, "", self.b.population, ""
        );
        out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
    }
}

pub fn compare_breakdowns(a: &Corpus, b: &Corpus, dimension: Dimension) -> PairedBreakdown {
    PairedBreakdown {
        dimension,
        a: breakdown(a, dimension),
        b: breakdown(b, dimension),
    }
}

/// A request no single jacket fully covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmetRequest {
    pub request_id: String,
    #[serde(serialize_with = "as_f64::serialize")]
    pub best_coverage: Ratio,
    /// Jacket achieving the best coverage (first in ranking order), if any overlaps.
    pub best_jacket: Option<String>,
    pub missing: BTreeSet<VariableLabel>,
}

/// Requests whose best single-jacket coverage is below 1, least covered first.
pub fn unmet_requests(corpus: &Corpus) -> Vec<UnmetRequest> {
    let mut out: Vec<UnmetRequest> = corpus
        .requests()
        .filter_map(|request| {
            let best = rank_candidates(request, corpus, Some(1)).into_iter().next();
            let entry = match best {
                Some(report) if report.satisfied => return None,
                Some(report) => UnmetRequest {
                    request_id: request.id.clone(),
                    best_coverage: report.coverage,
                    best_jacket: Some(report.jacket_id),
                    missing: report.missing,
                },
                None => UnmetRequest {
                    request_id: request.id.clone(),
                    best_coverage: Ratio::from_integer(0),
                    best_jacket: None,
                    missing: request.variables.clone(),
                },
            };
            Some(entry)
        })
        .collect();
    out.sort_by(|x, y| {
        x.best_coverage
            .cmp(&y.best_coverage)
            .then_with(|| x.request_id.cmp(&y.request_id))
    });
    out
}

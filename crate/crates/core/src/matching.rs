//! Shared-variable network and request satisfaction.
//!
//! Two items are linked when their variable sets intersect, regardless of
//! kind: request–jacket, request–request and jacket–jacket pairs all use the
//! same rule. Edges are found through an inverted index from label to items,
//! so only pairs that actually share a label are ever visited.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Corpus, DataJacket, DataKind, DataRequest, Item, VariableLabel};
use crate::ratio::as_f64;
use crate::Ratio;

/// Labels present in both items.
pub fn shared_variables(a: &Item, b: &Item) -> BTreeSet<VariableLabel> {
    intersect(a.variables(), b.variables())
}

fn intersect(
    a: &BTreeSet<VariableLabel>,
    b: &BTreeSet<VariableLabel>,
) -> BTreeSet<VariableLabel> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|l| large.contains(*l)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: DataKind,
    pub name: String,
}

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub shared: BTreeSet<VariableLabel>,
}

impl Edge {
    pub fn weight(&self) -> usize {
        self.shared.len()
    }

    /// The endpoint opposite `id`, if `id` is an endpoint.
    pub fn other(&self, id: &str) -> Option<&str> {
        if self.a == id {
            Some(&self.b)
        } else if self.b == id {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// Nodes sorted by id and edges sorted by `(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExchangeNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no node with id {0:?}")]
pub struct UnknownNode(pub String);

impl ExchangeNetwork {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    /// Ids adjacent to `id`.
    pub fn neighbors(&self, id: &str) -> Result<BTreeSet<String>, UnknownNode> {
        if self.node(id).is_none() {
            return Err(UnknownNode(id.to_string()));
        }
        Ok(self
            .edges
            .iter()
            .filter_map(|e| e.other(id))
            .map(str::to_string)
            .collect())
    }
}

/// Builds the network over every item of the corpus.
pub fn build_network(corpus: &Corpus) -> ExchangeNetwork {
    let mut nodes: Vec<Node> = corpus
        .items()
        .map(|item| Node {
            id: item.id().to_string(),
            kind: item.kind(),
            name: item.name().to_string(),
        })
        .collect();
    nodes.sort_by(|x, y| x.id.cmp(&y.id));

    let mut postings: BTreeMap<&VariableLabel, Vec<&str>> = BTreeMap::new();
    for item in corpus.items() {
        for label in item.variables() {
            postings.entry(label).or_default().push(item.id());
        }
    }

    let mut pairs: BTreeMap<(&str, &str), BTreeSet<VariableLabel>> = BTreeMap::new();
    for (label, ids) in &postings {
        for (i, x) in ids.iter().enumerate() {
            for y in &ids[i + 1..] {
                let key = if x < y { (*x, *y) } else { (*y, *x) };
                pairs.entry(key).or_default().insert((*label).clone());
            }
        }
    }

    let edges = pairs
        .into_iter()
        .map(|((a, b), shared)| Edge {
            a: a.to_string(),
            b: b.to_string(),
            shared,
        })
        .collect();

    ExchangeNetwork { nodes, edges }
}

/// How much of a request a single jacket covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SatisfactionReport {
    pub request_id: String,
    pub jacket_id: String,
    pub covered: BTreeSet<VariableLabel>,
    pub missing: BTreeSet<VariableLabel>,
    /// `|covered| / |request variables|`.
    #[serde(serialize_with = "as_f64::serialize")]
    pub coverage: Ratio,
    /// Every requested variable is present in the jacket.
    pub satisfied: bool,
    /// Size of the jacket's variable set; used as a ranking tie-break.
    pub jacket_size: usize,
}

pub fn satisfaction(request: &DataRequest, jacket: &DataJacket) -> SatisfactionReport {
    let (covered, missing): (BTreeSet<_>, BTreeSet<_>) = request
        .variables
        .iter()
        .cloned()
        .partition(|l| jacket.variables.contains(l));
    let total = request.variables.len().max(1) as u64;
    SatisfactionReport {
        request_id: request.id.clone(),
        jacket_id: jacket.id.clone(),
        coverage: Ratio::new(covered.len() as u64, total),
        satisfied: missing.is_empty(),
        covered,
        missing,
        jacket_size: jacket.variables.len(),
    }
}

fn rank_order(x: &SatisfactionReport, y: &SatisfactionReport) -> Ordering {
    y.coverage
        .cmp(&x.coverage)
        .then(x.jacket_size.cmp(&y.jacket_size))
        .then_with(|| x.jacket_id.cmp(&y.jacket_id))
}

/// Jackets with non-zero coverage of `request`, best first.
///
/// Order: coverage descending, then smaller jackets first (the smallest
/// sufficient data), then jacket id.
pub fn rank_candidates(
    request: &DataRequest,
    corpus: &Corpus,
    top_k: Option<usize>,
) -> Vec<SatisfactionReport> {
    let mut reports: Vec<_> = corpus
        .jackets()
        .filter(|j| !request.variables.is_disjoint(&j.variables))
        .map(|j| satisfaction(request, j))
        .collect();
    reports.sort_by(rank_order);
    if let Some(k) = top_k {
        reports.truncate(k);
    }
    reports
}

//! Browser bindings for exploring a corpus: the shared-variable network with
//! neighbor lookup, jacket ranking for a request, and corpus statistics.
//!
//! Every exported method returns JSON or plain text. The `*_json` methods on
//! [`Explorer`] are ordinary Rust and are what the native tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use teeda_core::analytics::{corpus_stats, render_stats_summary, render_stats_table, variable_frequency};
use teeda_core::matching::{build_network, rank_candidates, ExchangeNetwork};
use teeda_core::persistence::{parse_corpus, FieldPolicy, NetworkDocument};
use teeda_core::{Corpus, DataKind, Item};

#[wasm_bindgen]
pub struct Explorer {
    corpus: Corpus,
    network: ExchangeNetwork,
}

#[derive(Serialize)]
struct Ranking<'a> {
    request_id: &'a str,
    unmet: bool,
    matches: Vec<teeda_core::matching::SatisfactionReport>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("documents always serialize")
}

impl Explorer {
    /// Parses a corpus file (one JSON record per line).
    pub fn parse(records: &str) -> Result<Explorer, String> {
        let corpus = parse_corpus(records, FieldPolicy::Strict).map_err(|e| e.to_string())?;
        let network = build_network(&corpus);
        Ok(Explorer { corpus, network })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn neighbors_json(&self, id: &str) -> Result<String, String> {
        let ids = self.network.neighbors(id).map_err(|e| e.to_string())?;
        Ok(to_json(&ids))
    }

    pub fn rank_json(&self, request_id: &str, top_k: usize) -> Result<String, String> {
        let request = self
            .corpus
            .get(request_id)
            .and_then(Item::as_request)
            .ok_or_else(|| format!("no request with id {request_id:?}"))?;
        let all = rank_candidates(request, &self.corpus, None);
        let unmet = !all.first().is_some_and(|r| r.satisfied);
        Ok(to_json(&Ranking {
            request_id,
            unmet,
            matches: all.into_iter().take(top_k).collect(),
        }))
    }

    pub fn frequency_json(&self, kind: &str, top_k: usize) -> Result<String, String> {
        let kind = match kind {
            "" | "all" => None,
            other => Some(DataKind::parse(other).map_err(|e| e.to_string())?),
        };
        Ok(to_json(&variable_frequency(&self.corpus, kind, Some(top_k))))
    }
}

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(constructor)]
    pub fn new(records: &str) -> Result<Explorer, JsError> {
        Explorer::parse(records).map_err(|e| JsError::new(&e))
    }

    /// The network document: `{nodes: [{id, kind, name}], edges: [{source, target, weight, shared}]}`.
    #[wasm_bindgen(js_name = network)]
    pub fn network_json(&self) -> String {
        NetworkDocument::from_network(&self.network).render()
    }

    /// Ids adjacent to `id`, as a JSON array.
    pub fn neighbors(&self, id: &str) -> Result<String, JsError> {
        self.neighbors_json(id).map_err(|e| JsError::new(&e))
    }

    /// Ranked jackets for a request: `{request_id, unmet, matches}`.
    pub fn rank(&self, request_id: &str, top_k: usize) -> Result<String, JsError> {
        self.rank_json(request_id, top_k).map_err(|e| JsError::new(&e))
    }

    /// Summary line and characteristic-values table.
    #[wasm_bindgen(js_name = statsText)]
    pub fn stats_text(&self) -> String {
        let stats = corpus_stats(&self.corpus);
        format!("{}\n\n{}", render_stats_summary(&stats), render_stats_table(&stats))
    }

    /// Top variables as `[{label, count}]`; `kind` is `all`, `request` or `providable`.
    pub fn frequency(&self, kind: &str, top_k: usize) -> Result<String, JsError> {
        self.frequency_json(kind, top_k).map_err(|e| JsError::new(&e))
    }
}

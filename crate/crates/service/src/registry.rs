//! The registry: a corpus behind a single commit point, its event log, and
//! the broadcast of committed events to subscribers.
//!
//! Every write validates, applies the change to a copy of the corpus, appends
//! the event to the log (and to disk when a store is attached), swaps the new
//! snapshot in and only then broadcasts. Readers clone an `Arc` of the
//! current snapshot and never hold the lock while computing.

use std::sync::{Arc, Mutex, MutexGuard};

use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;

use teeda_core::analytics::{
    common_variable_types, corpus_stats, singleton_ratio, unmet_requests, variable_frequency,
    CorpusStats, FrequencyTable, UnmetRequest,
};
use teeda_core::matching::{build_network, rank_candidates, SatisfactionReport};
use teeda_core::model::{ValidationError, ValidationErrors, Warning};
use teeda_core::persistence::{ItemDocument, NetworkDocument};
use teeda_core::scenario::{assign_category, scenario_report, ScenarioReport};
use teeda_core::{Category, Corpus, DataKind, Item, VariableLabel};

use crate::event::{apply_event, now_millis, Action, Event};
use crate::store::{Store, StoreError};

const CHANNEL_CAPACITY: usize = 1024;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("validation failed: {0}")]
    ValidationFailed(ValidationErrors),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("no item with id {0:?}")]
    UnknownItem(String),
    #[error("no request with id {0:?}")]
    UnknownRequest(String),
    #[error("item {0:?} is not a data request")]
    NotARequest(String),
    #[error("item {0:?} cannot change kind")]
    KindChange(String),
    #[error("requested events after {since}, but the log ends at {current}")]
    ReplayGap { since: u64, current: u64 },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// A consistent view of the registry at event `seq`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub seq: u64,
    pub corpus: Arc<Corpus>,
}

/// Result of a successful write.
#[derive(Debug, Clone, Serialize)]
pub struct Committed {
    pub event: Event,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

/// Events already committed after `since`, followed by live events on `live`.
pub struct Subscription {
    pub replay: Vec<Event>,
    pub live: broadcast::Receiver<Event>,
}

struct State {
    corpus: Arc<Corpus>,
    log: Vec<Event>,
    store: Option<Store>,
}

pub struct Registry {
    state: Mutex<State>,
    tx: broadcast::Sender<Event>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommonVariables {
    pub labels: Vec<VariableLabel>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Singletons {
    pub singletons: usize,
    pub distinct: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub stats: CorpusStats,
    pub frequency: FrequencyTable,
    pub request_frequency: FrequencyTable,
    pub providable_frequency: FrequencyTable,
    pub common: CommonVariables,
    pub request_singletons: Singletons,
    pub providable_singletons: Singletons,
    pub unmet: Vec<UnmetRequest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub report: ScenarioReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchesDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub request_id: String,
    /// No jacket covers every requested variable.
    pub unmet: bool,
    pub matches: Vec<SatisfactionReport>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl Registry {
    /// A registry that keeps everything in memory.
    pub fn in_memory() -> Self {
        Self::from_parts(Corpus::new(), Vec::new(), None)
    }

    /// A registry persisted to `corpus_path` and its event log.
    pub fn open(corpus_path: impl AsRef<std::path::Path>) -> Result<Self, StoreError> {
        let (store, corpus, log) = Store::open(corpus_path)?;
        Ok(Self::from_parts(corpus, log, Some(store)))
    }

    fn from_parts(corpus: Corpus, log: Vec<Event>, store: Option<Store>) -> Self {
        let (tx, _) = broadcast::channel(CHANNEL_CAPACITY);
        Registry {
            state: Mutex::new(State {
                corpus: Arc::new(corpus),
                log,
                store,
            }),
            tx,
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn snapshot(&self) -> Snapshot {
        let state = self.lock();
        Snapshot {
            seq: state.log.len() as u64,
            corpus: Arc::clone(&state.corpus),
        }
    }

    pub fn seq(&self) -> u64 {
        self.lock().log.len() as u64
    }

    /// Copy of the full event log.
    pub fn events(&self) -> Vec<Event> {
        self.lock().log.clone()
    }

    /// The single commit point. `build` computes the event from the current
    /// corpus; the event is then applied, logged, persisted and broadcast.
    fn commit<F>(&self, build: F) -> Result<Event, RegistryError>
    where
        F: FnOnce(&Corpus, u64) -> Result<Event, RegistryError>,
    {
        let mut state = self.lock();
        let seq = state.log.len() as u64 + 1;
        let event = build(&state.corpus, seq)?;
        let mut next = Corpus::clone(&state.corpus);
        apply_event(&mut next, &event).map_err(|e| RegistryError::Internal(e.to_string()))?;
        if let Some(store) = state.store.as_mut() {
            store.append(&event)?;
            if let Err(e) = store.save(&next) {
                tracing::warn!("event {} logged but corpus file not saved: {e}", event.seq);
            }
        }
        state.corpus = Arc::new(next);
        state.log.push(event.clone());
        // Sent under the lock so every subscriber sees commit order.
        let _ = self.tx.send(event.clone());
        Ok(event)
    }

    fn event(seq: u64, action: Action, id: &str, item: Option<&Item>) -> Event {
        Event {
            seq,
            action,
            id: id.to_string(),
            item: item.map(ItemDocument::from_item),
            timestamp: now_millis(),
        }
    }

    pub fn create_item(&self, doc: &ItemDocument) -> Result<Committed, RegistryError> {
        reject_extra_fields(doc)?;
        let mut item = doc.to_item().map_err(RegistryError::ValidationFailed)?;
        let warnings = item.warnings();
        let event = self.commit(|corpus, seq| {
            if item.id().is_empty() {
                item = match item {
                    Item::Request(r) => Item::Request(r.with_id(corpus.peek_generated_id())),
                    Item::Jacket(j) => Item::Jacket(j.with_id(corpus.peek_generated_id())),
                };
            } else if corpus.contains(item.id()) {
                return Err(RegistryError::DuplicateId(item.id().to_string()));
            }
            Ok(Self::event(seq, Action::Created, item.id(), Some(&item)))
        })?;
        Ok(Committed { event, warnings })
    }

    /// Replaces an item. The document's id, when present, must equal `id`.
    pub fn update_item(&self, id: &str, doc: &ItemDocument) -> Result<Committed, RegistryError> {
        reject_extra_fields(doc)?;
        if let Some(doc_id) = doc.id.as_deref().filter(|doc_id| *doc_id != id) {
            return Err(RegistryError::ValidationFailed(
                ValidationError::IdMismatch(doc_id.to_string()).into(),
            ));
        }
        let mut item = doc.to_item().map_err(RegistryError::ValidationFailed)?;
        let warnings = item.warnings();
        item = match item {
            Item::Request(r) => Item::Request(r.with_id(id)),
            Item::Jacket(j) => Item::Jacket(j.with_id(id)),
        };
        let event = self.commit(|corpus, seq| {
            let old = corpus
                .get(id)
                .ok_or_else(|| RegistryError::UnknownItem(id.to_string()))?;
            if old.kind() != item.kind() {
                return Err(RegistryError::KindChange(id.to_string()));
            }
            Ok(Self::event(seq, Action::Updated, id, Some(&item)))
        })?;
        Ok(Committed { event, warnings })
    }

    pub fn delete_item(&self, id: &str) -> Result<Committed, RegistryError> {
        let event = self.commit(|corpus, seq| {
            if !corpus.contains(id) {
                return Err(RegistryError::UnknownItem(id.to_string()));
            }
            Ok(Self::event(seq, Action::Deleted, id, None))
        })?;
        Ok(Committed {
            event,
            warnings: Vec::new(),
        })
    }

    /// Sets or clears a request's category.
    pub fn categorize(
        &self,
        id: &str,
        category: Option<Category>,
    ) -> Result<Committed, RegistryError> {
        let event = self.commit(|corpus, seq| {
            let mut scratch = Corpus::clone(corpus);
            assign_category(&mut scratch, id, category).map_err(|e| match e {
                teeda_core::scenario::CategoryError::UnknownRequest(id) => {
                    RegistryError::UnknownRequest(id)
                }
                teeda_core::scenario::CategoryError::NotARequest(id) => {
                    RegistryError::NotARequest(id)
                }
            })?;
            Ok(Self::event(seq, Action::Categorized, id, scratch.get(id)))
        })?;
        Ok(Committed {
            event,
            warnings: Vec::new(),
        })
    }

    pub fn list_items(&self, kind: Option<DataKind>) -> Vec<ItemDocument> {
        let snap = self.snapshot();
        snap.corpus
            .items()
            .filter(|i| kind.is_none_or(|k| i.kind() == k))
            .map(ItemDocument::from_item)
            .collect()
    }

    pub fn get_item(&self, id: &str) -> Option<ItemDocument> {
        self.snapshot().corpus.get(id).map(ItemDocument::from_item)
    }

    pub fn network(&self) -> NetworkDocument {
        let snap = self.snapshot();
        let mut doc = NetworkDocument::from_network(&build_network(&snap.corpus));
        doc.seq = Some(snap.seq);
        doc
    }

    pub fn stats(&self) -> StatsDocument {
        let snap = self.snapshot();
        stats_document(&snap.corpus, Some(snap.seq))
    }

    pub fn report(&self) -> ReportDocument {
        let snap = self.snapshot();
        report_document(&snap.corpus, Some(snap.seq))
    }

    pub fn matches(&self, id: &str, top_k: Option<usize>) -> Result<MatchesDocument, RegistryError> {
        let snap = self.snapshot();
        matches_document(&snap.corpus, Some(snap.seq), id, top_k)
    }

    /// Events after `since` (default 0) plus a receiver for everything later.
    pub fn subscribe(&self, since: Option<u64>) -> Result<Subscription, RegistryError> {
        let state = self.lock();
        let current = state.log.len() as u64;
        let since = since.unwrap_or(0);
        if since > current {
            return Err(RegistryError::ReplayGap { since, current });
        }
        // Subscribing while holding the lock leaves no gap between replay and live.
        let live = self.tx.subscribe();
        Ok(Subscription {
            replay: state.log[since as usize..].to_vec(),
            live,
        })
    }
}

fn reject_extra_fields(doc: &ItemDocument) -> Result<(), RegistryError> {
    if doc.extra.is_empty() {
        return Ok(());
    }
    Err(RegistryError::ValidationFailed(ValidationErrors(
        doc.extra
            .keys()
            .map(|k| ValidationError::UnknownField(k.clone()))
            .collect(),
    )))
}

/// Statistics document for a corpus; `seq` is the event it reflects, if any.
pub fn stats_document(corpus: &Corpus, seq: Option<u64>) -> StatsDocument {
    let (common, count) = common_variable_types(corpus);
    let singles = |kind| {
        let (singletons, distinct) = singleton_ratio(corpus, kind);
        Singletons {
            singletons,
            distinct,
        }
    };
    StatsDocument {
        seq,
        stats: corpus_stats(corpus),
        frequency: variable_frequency(corpus, None, None),
        request_frequency: variable_frequency(corpus, Some(DataKind::Request), None),
        providable_frequency: variable_frequency(corpus, Some(DataKind::Providable), None),
        common: CommonVariables {
            labels: common.into_iter().collect(),
            count,
        },
        request_singletons: singles(DataKind::Request),
        providable_singletons: singles(DataKind::Providable),
        unmet: unmet_requests(corpus),
    }
}

pub fn report_document(corpus: &Corpus, seq: Option<u64>) -> ReportDocument {
    ReportDocument {
        seq,
        report: scenario_report(corpus),
    }
}

/// Ranked jackets for request `id`; `unmet` is set when none covers it fully.
pub fn matches_document(
    corpus: &Corpus,
    seq: Option<u64>,
    id: &str,
    top_k: Option<usize>,
) -> Result<MatchesDocument, RegistryError> {
    let request = corpus
        .get(id)
        .and_then(Item::as_request)
        .ok_or_else(|| RegistryError::UnknownRequest(id.to_string()))?;
    let mut matches = rank_candidates(request, corpus, None);
    let unmet = !matches.first().is_some_and(|r| r.satisfied);
    if let Some(k) = top_k {
        matches.truncate(k);
    }
    Ok(MatchesDocument {
        seq,
        request_id: id.to_string(),
        unmet,
        matches,
    })
}

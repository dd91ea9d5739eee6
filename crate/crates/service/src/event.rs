use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use teeda_core::model::CorpusError;
use teeda_core::persistence::ItemDocument;
use teeda_core::scenario::{assign_category, CategoryError};
use teeda_core::{Category, Corpus, Item};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Created,
    Updated,
    Deleted,
    Categorized,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Created => "created",
            Action::Updated => "updated",
            Action::Deleted => "deleted",
            Action::Categorized => "categorized",
        }
    }
}

/// One committed change to the registry.
///
/// `item` holds the item's full document after the change; it is absent for
/// deletions, where `id` alone identifies the removed item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub seq: u64,
    pub action: Action,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ItemDocument>,
    /// Milliseconds since the Unix epoch at commit time.
    pub timestamp: u64,
}

pub(crate) fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("event {found} out of order, expected {expected}")]
    OutOfOrder { expected: u64, found: u64 },
    #[error("event {seq}: {message}")]
    Invalid { seq: u64, message: String },
}

fn invalid(seq: u64, message: impl ToString) -> ReplayError {
    ReplayError::Invalid {
        seq,
        message: message.to_string(),
    }
}

fn item_of(event: &Event) -> Result<Item, ReplayError> {
    let doc = event
        .item
        .as_ref()
        .ok_or_else(|| invalid(event.seq, "missing item document"))?;
    let item = doc.to_item().map_err(|e| invalid(event.seq, e))?;
    if item.id() != event.id {
        return Err(invalid(event.seq, "item id does not match event id"));
    }
    Ok(item)
}

/// Applies a single event to a corpus.
pub fn apply_event(corpus: &mut Corpus, event: &Event) -> Result<(), ReplayError> {
    let seq = event.seq;
    match event.action {
        Action::Created => {
            corpus
                .insert(item_of(event)?)
                .map_err(|e: CorpusError| invalid(seq, e))?;
        }
        Action::Updated => {
            corpus
                .replace(&event.id, item_of(event)?)
                .map_err(|e| invalid(seq, e))?;
        }
        Action::Deleted => {
            corpus.remove(&event.id).map_err(|e| invalid(seq, e))?;
        }
        Action::Categorized => {
            let item = item_of(event)?;
            let category: Option<Category> = item
                .as_request()
                .ok_or_else(|| invalid(seq, "categorized item is not a request"))?
                .category;
            assign_category(corpus, &event.id, category)
                .map_err(|e: CategoryError| invalid(seq, e))?;
        }
    }
    Ok(())
}

/// Rebuilds a corpus from an event log that starts at seq 1.
pub fn replay(events: &[Event]) -> Result<Corpus, ReplayError> {
    let mut corpus = Corpus::new();
    for (i, event) in events.iter().enumerate() {
        let expected = i as u64 + 1;
        if event.seq != expected {
            return Err(ReplayError::OutOfOrder {
                expected,
                found: event.seq,
            });
        }
        apply_event(&mut corpus, event)?;
    }
    Ok(corpus)
}

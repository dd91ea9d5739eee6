//! On-disk state: the corpus file plus an append-only event log beside it.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use teeda_core::persistence::{self, ItemDocument, PersistenceError};
use teeda_core::Corpus;

use crate::event::{now_millis, replay, Action, Event, ReplayError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Log {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Corpus(#[from] PersistenceError),
    #[error("event log does not replay: {0}")]
    Replay(#[from] ReplayError),
}

#[derive(Debug)]
pub struct Store {
    corpus_path: PathBuf,
    log_path: PathBuf,
    log: File,
}

/// Log file used for a corpus file: `<corpus>.events.jsonl`.
pub fn log_path_for(corpus_path: &Path) -> PathBuf {
    let mut p = corpus_path.as_os_str().to_owned();
    p.push(".events.jsonl");
    PathBuf::from(p)
}

fn read_log(path: &Path) -> Result<Vec<Event>, StoreError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.display().to_string(),
                source,
            })
        }
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StoreError::Log {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Events that turn `from` into `to`: deletions, then updates and creations in `to` order.
fn reconcile(from: &Corpus, to: &Corpus, first_seq: u64) -> Vec<Event> {
    let mut events = Vec::new();
    let mut seq = first_seq;
    let mut push = |action, id: &str, item: Option<ItemDocument>| {
        events.push(Event {
            seq,
            action,
            id: id.to_string(),
            item,
            timestamp: now_millis(),
        });
        seq += 1;
    };
    for item in from.items() {
        if !to.contains(item.id()) {
            push(Action::Deleted, item.id(), None);
        }
    }
    for item in to.items() {
        let doc = Some(ItemDocument::from_item(item));
        match from.get(item.id()) {
            None => push(Action::Created, item.id(), doc),
            Some(old) if old.kind() != item.kind() => {
                push(Action::Deleted, item.id(), None);
                push(Action::Created, item.id(), doc);
            }
            Some(old) if old != item => push(Action::Updated, item.id(), doc),
            Some(_) => {}
        }
    }
    events
}

impl Store {
    /// Opens (or creates) the corpus at `corpus_path` and its event log.
    ///
    /// State is the replay of the log. If the corpus file was changed outside
    /// the service, the differences are appended to the log as events so that
    /// replay keeps reproducing the registry.
    pub fn open(corpus_path: impl AsRef<Path>) -> Result<(Store, Corpus, Vec<Event>), StoreError> {
        let corpus_path = corpus_path.as_ref().to_path_buf();
        let log_path = log_path_for(&corpus_path);
        let mut events = read_log(&log_path)?;
        let replayed = replay(&events)?;

        let on_disk = if corpus_path.exists() {
            persistence::load_corpus(&corpus_path)?
        } else {
            Corpus::new()
        };
        let catch_up = reconcile(&replayed, &on_disk, events.len() as u64 + 1);

        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|source| StoreError::Io {
                path: log_path.display().to_string(),
                source,
            })?;
        let mut store = Store {
            corpus_path,
            log_path,
            log,
        };
        for event in &catch_up {
            store.append(event)?;
        }
        events.extend(catch_up);
        let corpus = replay(&events)?;
        store.save(&corpus)?;
        Ok((store, corpus, events))
    }

    pub fn corpus_path(&self) -> &Path {
        &self.corpus_path
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub(crate) fn append(&mut self, event: &Event) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(event).expect("events always serialize");
        line.push('\n');
        self.log
            .write_all(line.as_bytes())
            .and_then(|_| self.log.flush())
            .map_err(|source| StoreError::Io {
                path: self.log_path.display().to_string(),
                source,
            })
    }

    pub(crate) fn save(&self, corpus: &Corpus) -> Result<(), StoreError> {
        persistence::save_corpus(corpus, &self.corpus_path)?;
        Ok(())
    }
}

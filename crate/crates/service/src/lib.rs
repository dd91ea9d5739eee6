//! Network-facing registry for data requests and data jackets.
//!
//! [`Registry`] serializes every write through one commit point and keeps
//! the full event log, so any subscriber can replay from an arbitrary
//! sequence number and then follow live events in commit order.
//! [`http::router`] exposes it over HTTP with a server-sent event feed.

pub mod event;
pub mod http;
pub mod registry;
pub mod store;

pub use event::{replay, Action, Event};
pub use registry::{
    matches_document, report_document, stats_document, Committed, MatchesDocument, Registry,
    RegistryError, ReportDocument, Snapshot, StatsDocument, Subscription,
};
pub use store::{Store, StoreError};

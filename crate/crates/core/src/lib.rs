//! Core model and analyses for a data-exchange matchmaking registry.
//!
//! Data users register *data requests* (what they want, and why) and data
//! holders register *data jackets* (metadata about data they can provide,
//! without the data itself). Items are linked wherever their variable label
//! sets intersect; that network, the per-request coverage reports, the corpus
//! statistics and the per-category scenario reports are all computed here.
//!
//! - [`model`]: labels, enumerations, items, validation and the [`Corpus`].
//! - [`matching`]: shared-variable network, satisfaction and ranking.
//! - [`analytics`]: counts, frequency tables, singleton/common metrics, breakdowns.
//! - [`scenario`]: purpose categories and data-design scenario reports.
//! - [`persistence`]: line-delimited record files, CSV import, network documents.

pub mod analytics;
pub mod matching;
pub mod model;
pub mod persistence;
pub mod scenario;

mod ratio;

pub use model::{
    Category, Corpus, DataFormat, DataJacket, DataKind, DataRequest, DataType, Item,
    SharingCondition, VariableLabel,
};
pub use ratio::{format_two_decimals, Ratio};

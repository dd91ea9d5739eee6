//! Domain types for data requests and data jackets.
//!
//! Variables are natural-language labels and the only matching key. Labels
//! are normalized for whitespace and case only: "address" and "location"
//! stay distinct on purpose, so the measured mismatch between what users ask
//! for and what holders provide is not smoothed over.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A normalized variable label: trimmed, inner whitespace collapsed, lowercased.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableLabel(String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("variable label is empty")]
pub struct EmptyLabel;

/// Normalizes a raw label.
pub fn normalize_label(raw: &str) -> Result<VariableLabel, EmptyLabel> {
    let text = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    if text.is_empty() {
        Err(EmptyLabel)
    } else {
        Ok(VariableLabel(text))
    }
}

impl VariableLabel {
    pub fn new(raw: &str) -> Result<Self, EmptyLabel> {
        normalize_label(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for VariableLabel {
    type Err = EmptyLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_label(s)
    }
}

impl AsRef<str> for VariableLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for VariableLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for VariableLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_label(&raw).map_err(serde::de::Error::custom)
    }
}

/// Normalizes and deduplicates a list of raw labels, dropping blank entries.
pub fn label_set<I, S>(raw: I) -> BTreeSet<VariableLabel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    raw.into_iter()
        .filter_map(|s| normalize_label(s.as_ref()).ok())
        .collect()
}

/// Error returned when a token is not one of an enumeration's canonical values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown token {0:?}")]
pub struct UnknownToken(pub String);

/// Defines a closed enumeration with canonical string tokens.
///
/// Parsing is case-insensitive, trims the input and consults the alias list
/// after the canonical tokens. Serialization always emits the canonical token.
macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident {
            $( $variant:ident => $token:literal ),+ $(,)?
        }
        aliases { $( $alias:literal => $target:ident ),* $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $( $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant ),+ ];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $token ),+
                }
            }

            pub fn parse(raw: &str) -> Result<Self, UnknownToken> {
                let wanted = raw.split_whitespace().collect::<Vec<_>>().join(" ");
                $(
                    if wanted.eq_ignore_ascii_case($token) {
                        return Ok($name::$variant);
                    }
                )+
                $(
                    if wanted.eq_ignore_ascii_case($alias) {
                        return Ok($name::$target);
                    }
                )*
                Err(UnknownToken(raw.to_string()))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::parse(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(deserializer)?;
                Self::parse(&raw).map_err(serde::de::Error::custom)
            }
        }
    };
}

token_enum! {
    /// Whether an item is a call for data or a data jacket.
    DataKind {
        Request => "request",
        Providable => "providable",
    }
    aliases {}
}

token_enum! {
    /// Data types a jacket may declare (multi-select).
    DataType {
        TimeSeries => "time series",
        NumericalValue => "numerical value",
        Text => "text",
        Table => "table",
        Image => "image",
        Graph => "graph",
        Movie => "movie",
        Sound => "sound",
        Other => "other",
    }
    aliases {
        "number" => NumericalValue,
        "others" => Other,
    }
}

token_enum! {
    /// File formats a jacket may declare (multi-select).
    DataFormat {
        Csv => "CSV",
        Txt => "txt",
        Rdb => "RDB",
        Markup => "markup",
        Rdf => "RDF",
        Weka => "weka",
        Shape => "shape",
        Pdf => "PDF",
        Other => "other",
    }
    aliases {
        "others" => Other,
    }
}

token_enum! {
    /// The single sharing condition a holder attaches to a jacket.
    SharingCondition {
        GenerallyShareable => "generally shareable",
        ConditionsNegotiationsRequired => "conditions/negotiations are required",
        ShareableWithinLimitedRange => "shareable within a limited range",
        NonShareable => "non-shareable",
        ShareableByPurchase => "shareable by purchase",
        NotYetDecided => "not yet decided",
        OtherConditions => "other conditions",
    }
    aliases {
        "shareable by purchased" => ShareableByPurchase,
    }
}

token_enum! {
    /// Purpose category of a data request.
    Category {
        PhenomenonUnderstanding => "phenomenon understanding",
        IndividualDecisionMaking => "individual decision-making",
        OrganizationalDecisionMaking => "organizational decision-making",
    }
    aliases {}
}

/// A call for data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRequest {
    pub id: String,
    pub name: String,
    pub variables: BTreeSet<VariableLabel>,
    pub purpose: Option<String>,
    pub category: Option<Category>,
}

/// Metadata of data a holder can provide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataJacket {
    pub id: String,
    pub name: String,
    pub variables: BTreeSet<VariableLabel>,
    pub outline: Option<String>,
    pub types: BTreeSet<DataType>,
    pub formats: BTreeSet<DataFormat>,
    pub sharing: Option<SharingCondition>,
}

impl DataRequest {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

impl DataJacket {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Request(DataRequest),
    Jacket(DataJacket),
}

impl Item {
    pub fn id(&self) -> &str {
        match self {
            Item::Request(r) => &r.id,
            Item::Jacket(j) => &j.id,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Item::Request(r) => &r.name,
            Item::Jacket(j) => &j.name,
        }
    }

    pub fn kind(&self) -> DataKind {
        match self {
            Item::Request(_) => DataKind::Request,
            Item::Jacket(_) => DataKind::Providable,
        }
    }

    pub fn variables(&self) -> &BTreeSet<VariableLabel> {
        match self {
            Item::Request(r) => &r.variables,
            Item::Jacket(j) => &j.variables,
        }
    }

    pub fn as_request(&self) -> Option<&DataRequest> {
        match self {
            Item::Request(r) => Some(r),
            Item::Jacket(_) => None,
        }
    }

    pub fn as_jacket(&self) -> Option<&DataJacket> {
        match self {
            Item::Jacket(j) => Some(j),
            Item::Request(_) => None,
        }
    }

    pub(crate) fn set_id(&mut self, id: String) {
        match self {
            Item::Request(r) => r.id = id,
            Item::Jacket(j) => j.id = id,
        }
    }

    /// Non-fatal observations about an otherwise valid item.
    pub fn warnings(&self) -> Vec<Warning> {
        let count = self.variables().len();
        if count < 2 {
            vec![Warning::FewVariables { count }]
        } else {
            Vec::new()
        }
    }
}

impl From<DataRequest> for Item {
    fn from(r: DataRequest) -> Self {
        Item::Request(r)
    }
}

impl From<DataJacket> for Item {
    fn from(j: DataJacket) -> Self {
        Item::Jacket(j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    /// Fewer than two variables; accepted, but unusually sparse.
    FewVariables { count: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::FewVariables { count } => {
                write!(f, "only {count} variable(s); most items carry at least 2")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("data name is required")]
    MissingName,
    #[error("at least one variable is required")]
    MissingVariables,
    #[error("unknown data type {0:?}")]
    UnknownType(String),
    #[error("unknown data format {0:?}")]
    UnknownFormat(String),
    #[error("unknown sharing condition {0:?}")]
    UnknownSharingCondition(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown kind {0:?}")]
    UnknownKind(String),
    #[error("field is not allowed on a {kind} item")]
    FieldNotAllowed { field: &'static str, kind: DataKind },
    #[error("id must not be blank")]
    BlankId,
    #[error("id {0:?} does not match the addressed item")]
    IdMismatch(String),
    #[error("field is not defined by the document format")]
    UnknownField(String),
}

impl ValidationError {
    /// Name of the document field the error refers to.
    pub fn field(&self) -> &str {
        match self {
            ValidationError::MissingName => "name",
            ValidationError::MissingVariables => "variables",
            ValidationError::UnknownType(_) => "types",
            ValidationError::UnknownFormat(_) => "formats",
            ValidationError::UnknownSharingCondition(_) => "sharing",
            ValidationError::UnknownCategory(_) => "category",
            ValidationError::UnknownKind(_) => "kind",
            ValidationError::FieldNotAllowed { field, .. } => field,
            ValidationError::BlankId | ValidationError::IdMismatch(_) => "id",
            ValidationError::UnknownField(field) => field,
        }
    }
}

/// Every problem found while validating one item.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ValidationError> {
        self.0.iter()
    }

    pub fn contains(&self, err: &ValidationError) -> bool {
        self.0.contains(err)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", err.field(), err)?;
        }
        Ok(())
    }
}

impl From<ValidationError> for ValidationErrors {
    fn from(err: ValidationError) -> Self {
        ValidationErrors(vec![err])
    }
}

fn required_name(name: &str, errors: &mut Vec<ValidationError>) -> String {
    let name = name.trim();
    if name.is_empty() {
        errors.push(ValidationError::MissingName);
    }
    name.to_string()
}

fn required_variables<S: AsRef<str>>(
    variables: &[S],
    errors: &mut Vec<ValidationError>,
) -> BTreeSet<VariableLabel> {
    let set = label_set(variables);
    if set.is_empty() {
        errors.push(ValidationError::MissingVariables);
    }
    set
}

fn optional_text(text: Option<&str>) -> Option<String> {
    text.filter(|t| !t.trim().is_empty()).map(str::to_string)
}

/// Validates a data request. The returned item has an empty id; callers
/// assign one with [`DataRequest::with_id`] or let [`Corpus::insert`] do it.
pub fn validate_request<S: AsRef<str>>(
    name: &str,
    variables: &[S],
    purpose: Option<&str>,
) -> Result<DataRequest, ValidationErrors> {
    let mut errors = Vec::new();
    let name = required_name(name, &mut errors);
    let variables = required_variables(variables, &mut errors);
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    Ok(DataRequest {
        id: String::new(),
        name,
        variables,
        purpose: optional_text(purpose),
        category: None,
    })
}

/// Validates a data jacket. Type, format and sharing tokens are matched
/// case-insensitively against the canonical tokens and the alias table.
pub fn validate_jacket<S: AsRef<str>, T: AsRef<str>, F: AsRef<str>>(
    name: &str,
    variables: &[S],
    outline: Option<&str>,
    types: &[T],
    formats: &[F],
    sharing: Option<&str>,
) -> Result<DataJacket, ValidationErrors> {
    let mut errors = Vec::new();
    let name = required_name(name, &mut errors);
    let variables = required_variables(variables, &mut errors);

    let mut type_set = BTreeSet::new();
    for raw in types {
        match DataType::parse(raw.as_ref()) {
            Ok(t) => {
                type_set.insert(t);
            }
            Err(UnknownToken(token)) => errors.push(ValidationError::UnknownType(token)),
        }
    }
    let mut format_set = BTreeSet::new();
    for raw in formats {
        match DataFormat::parse(raw.as_ref()) {
            Ok(f) => {
                format_set.insert(f);
            }
            Err(UnknownToken(token)) => errors.push(ValidationError::UnknownFormat(token)),
        }
    }
    let sharing = match sharing.filter(|s| !s.trim().is_empty()) {
        None => None,
        Some(raw) => match SharingCondition::parse(raw) {
            Ok(s) => Some(s),
            Err(UnknownToken(token)) => {
                errors.push(ValidationError::UnknownSharingCondition(token));
                None
            }
        },
    };

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    Ok(DataJacket {
        id: String::new(),
        name,
        variables,
        outline: optional_text(outline),
        types: type_set,
        formats: format_set,
        sharing,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("no item with id {0:?}")]
    UnknownItem(String),
    #[error("item {0:?} cannot change kind")]
    KindChange(String),
}

/// Requests and jackets keyed by id, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    items: IndexMap<String, Item>,
    extras: IndexMap<String, serde_json::Map<String, serde_json::Value>>,
    next_id: u64,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        // IndexMap equality ignores order; corpora compare in order.
        self.items.len() == other.items.len()
            && self.items.iter().eq(other.items.iter())
            && self.extras == other.extras
    }
}

impl Eq for Corpus {}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Item> {
        self.items.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.contains_key(id)
    }

    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.items.values()
    }

    pub fn requests(&self) -> impl Iterator<Item = &DataRequest> {
        self.items.values().filter_map(Item::as_request)
    }

    pub fn jackets(&self) -> impl Iterator<Item = &DataJacket> {
        self.items.values().filter_map(Item::as_jacket)
    }

    pub fn items_of(&self, kind: DataKind) -> impl Iterator<Item = &Item> {
        self.items.values().filter(move |item| item.kind() == kind)
    }

    /// The id [`Corpus::insert`] would generate next.
    ///
    /// Generated ids never repeat within a corpus's history: inserting an
    /// explicit `item-N` id advances the counter past `N`, and removals do
    /// not move it back.
    pub fn peek_generated_id(&self) -> String {
        let mut n = self.next_id;
        loop {
            n += 1;
            let id = format!("item-{n:04}");
            if !self.items.contains_key(&id) {
                return id;
            }
        }
    }

    fn note_id(&mut self, id: &str) {
        if let Some(n) = id.strip_prefix("item-").and_then(|n| n.parse::<u64>().ok()) {
            self.next_id = self.next_id.max(n);
        }
    }

    /// Adds an item, generating an id when the item's id is empty.
    /// Returns the stored id.
    pub fn insert(&mut self, item: impl Into<Item>) -> Result<String, CorpusError> {
        let mut item = item.into();
        if item.id().is_empty() {
            item.set_id(self.peek_generated_id());
        } else if self.items.contains_key(item.id()) {
            return Err(CorpusError::DuplicateId(item.id().to_string()));
        }
        let id = item.id().to_string();
        self.note_id(&id);
        self.items.insert(id.clone(), item);
        Ok(id)
    }

    /// Replaces an existing item in place, keeping its position.
    pub fn replace(&mut self, id: &str, item: impl Into<Item>) -> Result<(), CorpusError> {
        let mut item = item.into();
        let slot = self
            .items
            .get_mut(id)
            .ok_or_else(|| CorpusError::UnknownItem(id.to_string()))?;
        if slot.kind() != item.kind() {
            return Err(CorpusError::KindChange(id.to_string()));
        }
        item.set_id(id.to_string());
        *slot = item;
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<Item, CorpusError> {
        self.extras.shift_remove(id);
        self.items
            .shift_remove(id)
            .ok_or_else(|| CorpusError::UnknownItem(id.to_string()))
    }

    pub(crate) fn get_mut(&mut self, id: &str) -> Option<&mut Item> {
        self.items.get_mut(id)
    }

    /// Unrecognized document fields kept for an item when loading leniently.
    pub fn extras(&self, id: &str) -> Option<&serde_json::Map<String, serde_json::Value>> {
        self.extras.get(id)
    }

    pub fn set_extras(&mut self, id: &str, extras: serde_json::Map<String, serde_json::Value>) {
        if extras.is_empty() {
            self.extras.shift_remove(id);
        } else {
            self.extras.insert(id.to_string(), extras);
        }
    }
}

impl FromIterator<Item> for Corpus {
    /// Collects items, skipping any whose id is already present.
    fn from_iter<I: IntoIterator<Item = Item>>(iter: I) -> Self {
        let mut corpus = Corpus::new();
        for item in iter {
            let _ = corpus.insert(item);
        }
        corpus
    }
}

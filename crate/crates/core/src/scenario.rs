//! Purpose categories and data-design scenario reports.
//!
//! Requests are categorized by hand; [`suggest_category`] only offers a
//! keyword-based hint. For each category the report lists how often each
//! variable was asked for, which of those variables no jacket in the corpus
//! carries, and the suggested variable set for new data.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::analytics::FrequencyTable;
pub use crate::model::Category;
use crate::model::{Corpus, DataRequest, Item, VariableLabel};

/// Label emphasized in every category when requested.
pub const CENTRAL_VARIABLE: &str = "date";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CategoryError {
    #[error("no request with id {0:?}")]
    UnknownRequest(String),
    #[error("item {0:?} is not a data request")]
    NotARequest(String),
}

/// Sets (or with `None`, clears) the category of a request.
pub fn assign_category(
    corpus: &mut Corpus,
    id: &str,
    category: Option<Category>,
) -> Result<(), CategoryError> {
    match corpus.get_mut(id) {
        None => Err(CategoryError::UnknownRequest(id.to_string())),
        Some(Item::Jacket(_)) => Err(CategoryError::NotARequest(id.to_string())),
        Some(Item::Request(request)) => {
            request.category = category;
            Ok(())
        }
    }
}

pub fn category_profile(corpus: &Corpus, category: Category) -> FrequencyTable {
    FrequencyTable::tally(
        corpus
            .requests()
            .filter(|r| r.category == Some(category))
            .map(|r| &r.variables),
        None,
    )
}

const KEYWORDS: &[(Category, &[&str])] = &[
    (
        Category::IndividualDecisionMaking,
        &["going out", "go out", "staying home", "stay home", "one's life"],
    ),
    (
        Category::OrganizationalDecisionMaking,
        &["business", "guidelines", "policy", "policies"],
    ),
    (
        Category::PhenomenonUnderstanding,
        &["verify", "understand", "compare countries"],
    ),
];

/// Keyword hint for categorizing a request; never assigns anything.
///
/// Counts keyword hits in the name and purpose per category and returns the
/// category with strictly the most hits.
pub fn suggest_category(request: &DataRequest) -> Option<Category> {
    let text = format!(
        "{} {}",
        request.name.to_lowercase(),
        request.purpose.as_deref().unwrap_or("").to_lowercase()
    );
    let mut scores: Vec<(Category, usize)> = KEYWORDS
        .iter()
        .map(|(category, words)| {
            let hits = words.iter().filter(|w| text.contains(*w)).count();
            (*category, hits)
        })
        .collect();
    scores.sort_by_key(|s| std::cmp::Reverse(s.1));
    match scores.as_slice() {
        [(best, top), (_, second), ..] if *top > 0 && top > second => Some(*best),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryScenario {
    pub category: Category,
    pub count: usize,
    pub profile: FrequencyTable,
    /// Requested labels that no jacket in the corpus carries, in profile order.
    pub missing: Vec<VariableLabel>,
    /// Variable set suggested for new data: the central variable when it was
    /// requested, followed by every missing label.
    pub suggestions: Vec<VariableLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub categories: Vec<CategoryScenario>,
    pub uncategorized: usize,
}

impl ScenarioReport {
    pub fn get(&self, category: Category) -> &CategoryScenario {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .expect("report covers every category")
    }

    pub fn counts(&self) -> Vec<usize> {
        self.categories.iter().map(|c| c.count).collect()
    }

    /// Plain-text rendering naming the `top_k` profile variables per category.
    pub fn render(&self, top_k: usize) -> String {
        let mut out = String::new();
        for (i, scenario) in self.categories.iter().enumerate() {
            let _ = writeln!(
                out,
                "Scenario {} ({}): {} request(s)",
                i + 1,
                scenario.category,
                scenario.count
            );
            if scenario.profile.is_empty() {
                let _ = writeln!(out, "  no variables requested");
                out.push('\n');
                continue;
            }
            let top: Vec<String> = scenario
                .profile
                .rows
                .iter()
                .take(top_k)
                .map(|row| {
                    let mark = if row.label.as_str() == CENTRAL_VARIABLE {
                        " [central]"
                    } else {
                        ""
                    };
                    format!("{} ({}){}", row.label, row.count, mark)
                })
                .collect();
            let _ = writeln!(out, "  top variables: {}", top.join(", "));
            let _ = writeln!(
                out,
                "  missing from all providable data ({}): {}",
                scenario.missing.len(),
                join_labels(&scenario.missing)
            );
            let _ = writeln!(
                out,
                "  suggested data design: acquire data with {}",
                join_labels(&scenario.suggestions)
            );
            out.push('\n');
        }
        let _ = writeln!(out, "Uncategorized requests: {}", self.uncategorized);
        out
    }
}

fn join_labels(labels: &[VariableLabel]) -> String {
    if labels.is_empty() {
        "-".to_string()
    } else {
        labels
            .iter()
            .map(VariableLabel::as_str)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn scenario_report(corpus: &Corpus) -> ScenarioReport {
    let provided: BTreeSet<&VariableLabel> =
        corpus.jackets().flat_map(|j| j.variables.iter()).collect();

    let categories = Category::ALL
        .iter()
        .map(|&category| {
            let count = corpus
                .requests()
                .filter(|r| r.category == Some(category))
                .count();
            let profile = category_profile(corpus, category);
            let missing: Vec<VariableLabel> = profile
                .rows
                .iter()
                .filter(|row| !provided.contains(&row.label))
                .map(|row| row.label.clone())
                .collect();
            let mut suggestions = Vec::with_capacity(missing.len() + 1);
            if let Some(row) = profile
                .rows
                .iter()
                .find(|row| row.label.as_str() == CENTRAL_VARIABLE)
            {
                suggestions.push(row.label.clone());
            }
            for label in &missing {
                if !suggestions.contains(label) {
                    suggestions.push(label.clone());
                }
            }
            CategoryScenario {
                category,
                count,
                profile,
                missing,
                suggestions,
            }
        })
        .collect();

    ScenarioReport {
        categories,
        uncategorized: corpus.requests().filter(|r| r.category.is_none()).count(),
    }
}

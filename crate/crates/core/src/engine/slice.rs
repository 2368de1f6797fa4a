use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::LabeledRecord;

/// Key used for the whole-population slice.
pub const WHOLE_POPULATION_KEY: &str = "*";

/// A conjunction of `attribute = value` clauses; empty means everyone.
///
/// The map representation enforces at most one clause per attribute.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceFilter {
    clauses: BTreeMap<String, String>,
}

impl SliceFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn from_clauses<I, K, V>(clauses: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            clauses: clauses.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    /// Adds a clause, replacing any existing clause on the same attribute.
    pub fn with(mut self, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        self.clauses.insert(attribute.into(), value.into());
        self
    }

    pub fn clauses(&self) -> &BTreeMap<String, String> {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn constrains(&self, attribute: &str) -> bool {
        self.clauses.contains_key(attribute)
    }

    pub fn matches(&self, record: &LabeledRecord) -> bool {
        self.clauses
            .iter()
            .all(|(attr, value)| record.attribute(attr) == Some(value.as_str()))
    }

    /// Conjunction of both filters; `None` when they disagree on an attribute.
    pub fn and(&self, other: &SliceFilter) -> Option<SliceFilter> {
        let mut merged = self.clauses.clone();
        for (k, v) in &other.clauses {
            match merged.get(k) {
                Some(existing) if existing != v => return None,
                _ => {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
        Some(SliceFilter { clauses: merged })
    }

    /// Stable textual key: `attr=value` clauses sorted by attribute and
    /// joined with `&`, or `*` for the whole population.
    pub fn key(&self) -> String {
        if self.clauses.is_empty() {
            return WHOLE_POPULATION_KEY.to_string();
        }
        self.clauses
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("&")
    }
}

impl fmt::Display for SliceFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

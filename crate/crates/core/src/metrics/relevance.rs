use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::Real;

/// How test-period events become graded relevance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    /// Sale = 2, view only = 1.
    #[default]
    Graded,
    /// Any interaction = 1.
    Binary,
    /// Sale = 1, views ignored.
    SalesOnly,
}

/// Per user, the positive relevance of each candidate item they touched.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RelevanceJudgments<T> {
    pub per_user: BTreeMap<String, BTreeMap<String, T>>,
}

impl<T: Real> RelevanceJudgments<T> {
    pub fn for_user(&self, user: &str) -> Option<&BTreeMap<String, T>> {
        self.per_user.get(user)
    }

    /// Relevance aligned with `candidates` (zeros where absent).
    pub fn aligned(&self, user: &str, candidates: &[String]) -> Vec<T> {
        match self.per_user.get(user) {
            None => vec![T::zero(); candidates.len()],
            Some(m) => candidates
                .iter()
                .map(|c| m.get(c).copied().unwrap_or_else(T::zero))
                .collect(),
        }
    }
}

pub fn build_relevance<T: Real>(test: &Dataset, candidates: &HashSet<&str>, grading: Grading) -> RelevanceJudgments<T> {
    let mut per_user: BTreeMap<String, BTreeMap<String, T>> = BTreeMap::new();
    for e in test.events() {
        if !candidates.contains(e.item_id.as_str()) {
            continue;
        }
        let grade = match (grading, e.is_sale()) {
            (Grading::Graded, true) => 2.0,
            (Grading::Graded, false) | (Grading::Binary, _) | (Grading::SalesOnly, true) => 1.0,
            (Grading::SalesOnly, false) => continue,
        };
        let slot = per_user
            .entry(e.user_id.clone())
            .or_default()
            .entry(e.item_id.clone())
            .or_insert_with(T::zero);
        *slot = slot.max(T::of(grade));
    }
    RelevanceJudgments { per_user }
}

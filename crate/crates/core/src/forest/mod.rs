//! Regression random forest over concatenated user and product attributes,
//! trained on interaction labels augmented with ALS predictions.

mod augment;
mod features;
mod model;
mod tree;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use augment::{augment_labels, AugmentedTable, Column};
pub use features::{FeatureJoin, FeatureKind, FeatureSchema, FeatureSpec, FeatureValue};
pub use model::{fit_forest, predict_forest, ForestModel};
pub use tree::{Node, Split, SplitRule, Tree};

/// Level counts above this use the mean-label ordering instead of an
/// exhaustive subset search.
pub const EXHAUSTIVE_LEVELS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌈p/3⌉.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features_per_split: Option<usize>,
    pub negatives_per_user: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 5,
            features_per_split: None,
            negatives_per_user: 50,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("forest: {m}")));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be positive");
        }
        if self.negatives_per_user == 0 {
            return bad("negatives_per_user must be positive");
        }
        if self.features_per_split == Some(0) {
            return bad("features_per_split must be positive");
        }
        Ok(())
    }

    /// Resolves the per-split feature count for `p` features.
    pub fn mtry(&self, p: usize) -> Result<usize> {
        match self.features_per_split {
            None => Ok(p.div_ceil(3).max(1)),
            Some(m) if m <= p => Ok(m),
            Some(m) => Err(Error::InvalidConfig(format!(
                "forest: features_per_split {m} exceeds feature count {p}"
            ))),
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;

/// Units sold per item, with a descending ranking (ties by ascending id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularityTable {
    quantities: BTreeMap<String, u64>,
    ranking: Vec<String>,
}

impl PopularityTable {
    pub fn from_quantities(quantities: BTreeMap<String, u64>) -> Self {
        let mut ranking: Vec<String> = quantities.keys().cloned().collect();
        // keys are already in id order, so a stable sort keeps the tie-break
        ranking.sort_by(|a, b| quantities[b].cmp(&quantities[a]));
        PopularityTable {
            quantities,
            ranking,
        }
    }

    pub fn quantity(&self, item: &str) -> u64 {
        self.quantities.get(item).copied().unwrap_or(0)
    }

    pub fn quantities(&self) -> &BTreeMap<String, u64> {
        &self.quantities
    }

    pub fn ranking(&self) -> &[String] {
        &self.ranking
    }

    pub fn total(&self) -> u64 {
        self.quantities.values().sum()
    }

    /// Sum of the `k` largest quantities.
    pub fn top_k_total(&self, k: usize) -> u64 {
        self.ranking.iter().take(k).map(|i| self.quantities[i]).sum()
    }

    pub fn len(&self) -> usize {
        self.quantities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantities.is_empty()
    }
}

pub fn popularity_table(data: &Dataset) -> PopularityTable {
    let mut q: BTreeMap<String, u64> = data.items().iter().map(|i| (i.clone(), 0)).collect();
    for e in data.events().iter().filter(|e| e.is_sale()) {
        *q.get_mut(&e.item_id).expect("event item in dataset universe") += u64::from(e.quantity);
    }
    PopularityTable::from_quantities(q)
}

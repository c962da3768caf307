//! Interaction logs, feature tables, and the bookkeeping derived from them.

mod features;
pub mod io;
mod popularity;
mod segment;
mod split;
mod stats;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use features::{ColumnData, FeatureColumn, FeatureTable};
pub use io::{load_events, write_events, EventFormat};
pub use popularity::{popularity_table, PopularityTable};
pub use segment::{segment_users, Segment, SegmentAssignment};
pub use split::{temporal_split, TemporalSplit};
pub use stats::{dataset_stats, DatasetStats, PeriodStats, SegmentStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Sale,
    View,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Sale => "sale",
            InteractionKind::View => "view",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub user_id: String,
    pub item_id: String,
    pub kind: InteractionKind,
    pub timestamp: DateTime<Utc>,
    pub quantity: u32,
}

impl InteractionEvent {
    pub fn view(user: impl Into<String>, item: impl Into<String>, at: DateTime<Utc>) -> Self {
        InteractionEvent {
            user_id: user.into(),
            item_id: item.into(),
            kind: InteractionKind::View,
            timestamp: at,
            quantity: 1,
        }
    }

    pub fn sale(
        user: impl Into<String>,
        item: impl Into<String>,
        at: DateTime<Utc>,
        quantity: u32,
    ) -> Self {
        InteractionEvent {
            user_id: user.into(),
            item_id: item.into(),
            kind: InteractionKind::Sale,
            timestamp: at,
            quantity,
        }
    }

    pub fn is_sale(&self) -> bool {
        self.kind == InteractionKind::Sale
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if self.quantity == 0 {
            return Err("quantity must be at least 1".into());
        }
        if self.kind == InteractionKind::View && self.quantity != 1 {
            return Err(format!("view events carry quantity 1, got {}", self.quantity));
        }
        Ok(())
    }
}

/// A time-ordered interaction log with the user/item universes it touches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    events: Vec<InteractionEvent>,
    users: BTreeSet<String>,
    items: BTreeSet<String>,
    pub user_features: FeatureTable,
    pub item_features: FeatureTable,
}

impl Dataset {
    /// Builds a dataset, stably sorting `events` by timestamp.
    pub fn new(
        mut events: Vec<InteractionEvent>,
        user_features: FeatureTable,
        item_features: FeatureTable,
    ) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            e.validate().map_err(|reason| Error::MalformedRecord {
                line: i + 1,
                reason,
            })?;
        }
        events.sort_by_key(|e| e.timestamp);
        let users = events.iter().map(|e| e.user_id.clone()).collect();
        let items = events.iter().map(|e| e.item_id.clone()).collect();
        Ok(Dataset {
            events,
            users,
            items,
            user_features,
            item_features,
        })
    }

    pub fn from_events(events: Vec<InteractionEvent>) -> Result<Self> {
        Self::new(events, FeatureTable::default(), FeatureTable::default())
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn users(&self) -> &BTreeSet<String> {
        &self.users
    }

    pub fn items(&self) -> &BTreeSet<String> {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn sale_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_sale()).count()
    }

    pub fn view_count(&self) -> usize {
        self.events.len() - self.sale_count()
    }

    /// Subset of events (already sorted) sharing this dataset's feature tables.
    pub(crate) fn with_events(&self, events: Vec<InteractionEvent>) -> Dataset {
        let users = events.iter().map(|e| e.user_id.clone()).collect();
        let items = events.iter().map(|e| e.item_id.clone()).collect();
        Dataset {
            events,
            users,
            items,
            user_features: self.user_features.clone(),
            item_features: self.item_features.clone(),
        }
    }
}

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TemporalSplit;

/// Test-user segment, decided by training-period history alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    NewUser,
    ViewUser,
    SaleUser,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::SaleUser, Segment::ViewUser, Segment::NewUser];

    pub fn label(self) -> &'static str {
        match self {
            Segment::NewUser => "New Users",
            Segment::ViewUser => "View Users",
            Segment::SaleUser => "Sale Users",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmentAssignment {
    pub mapping: BTreeMap<String, Segment>,
}

impl SegmentAssignment {
    pub fn get(&self, user: &str) -> Option<Segment> {
        self.mapping.get(user).copied()
    }

    /// Users of one segment, in id order.
    pub fn users_in(&self, seg: Segment) -> Vec<&str> {
        self.mapping
            .iter()
            .filter(|(_, s)| **s == seg)
            .map(|(u, _)| u.as_str())
            .collect()
    }

    pub fn count(&self, seg: Segment) -> usize {
        self.mapping.values().filter(|s| **s == seg).count()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

pub fn segment_users(split: &TemporalSplit) -> SegmentAssignment {
    let mut buyers = HashSet::new();
    let mut viewers = HashSet::new();
    for e in split.train.events() {
        if e.is_sale() {
            buyers.insert(e.user_id.as_str());
        } else {
            viewers.insert(e.user_id.as_str());
        }
    }
    let mapping = split
        .test
        .users()
        .iter()
        .map(|u| {
            let seg = if buyers.contains(u.as_str()) {
                Segment::SaleUser
            } else if viewers.contains(u.as_str()) {
                Segment::ViewUser
            } else {
                Segment::NewUser
            };
            (u.clone(), seg)
        })
        .collect();
    SegmentAssignment { mapping }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::t;
    use crate::data::{temporal_split, Dataset, InteractionEvent};

    fn split() -> TemporalSplit {
        let events = vec![
            InteractionEvent::view("viewer", "a", t(1)),
            InteractionEvent::view("buyer", "a", t(1)),
            InteractionEvent::sale("buyer", "b", t(2), 1),
            InteractionEvent::sale("gone", "b", t(2), 1),
            InteractionEvent::view("viewer", "b", t(20)),
            InteractionEvent::view("buyer", "a", t(20)),
            InteractionEvent::sale("fresh", "a", t(21), 1),
        ];
        temporal_split(&Dataset::from_events(events).unwrap(), t(10))
    }

    #[test]
    fn labels_follow_training_history() {
        let seg = segment_users(&split());
        assert_eq!(seg.get("viewer"), Some(Segment::ViewUser));
        assert_eq!(seg.get("buyer"), Some(Segment::SaleUser));
        assert_eq!(seg.get("fresh"), Some(Segment::NewUser));
        // only test-period users are labeled
        assert_eq!(seg.get("gone"), None);
        assert_eq!(seg.len(), 3);
        let total: usize = Segment::ALL.iter().map(|s| seg.count(*s)).sum();
        assert_eq!(total, seg.len());
    }

    #[test]
    fn independent_of_test_event_detail() {
        let s = split();
        let base = segment_users(&s);
        // rewriting test events while keeping the user set leaves labels unchanged
        let rewritten: Vec<_> = s
            .test
            .users()
            .iter()
            .map(|u| InteractionEvent::sale(u.clone(), "zzz", t(99), 3))
            .collect();
        let s2 = TemporalSplit {
            test: Dataset::from_events(rewritten).unwrap(),
            ..s
        };
        assert_eq!(segment_users(&s2), base);
    }
}

use chrono::{DateTime, Utc};

use super::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub boundary: DateTime<Utc>,
}

/// Events strictly before `boundary` go to training, the rest to test.
pub fn temporal_split(data: &Dataset, boundary: DateTime<Utc>) -> TemporalSplit {
    let (train, test): (Vec<_>, Vec<_>) = data
        .events()
        .iter()
        .cloned()
        .partition(|e| e.timestamp < boundary);
    TemporalSplit {
        train: data.with_events(train),
        test: data.with_events(test),
        boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::t;
    use crate::data::InteractionEvent;
    use proptest::prelude::*;

    fn ds(times: &[i64]) -> Dataset {
        Dataset::from_events(
            times
                .iter()
                .enumerate()
                .map(|(i, &s)| InteractionEvent::view(format!("u{i}"), "a", t(s)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn splits_at_boundary() {
        let s = temporal_split(&ds(&[1, 2, 3]), t(2) + chrono::Duration::milliseconds(500));
        let train: Vec<_> = s.train.events().iter().map(|e| e.timestamp.timestamp()).collect();
        let test: Vec<_> = s.test.events().iter().map(|e| e.timestamp.timestamp()).collect();
        assert_eq!(train, vec![1, 2]);
        assert_eq!(test, vec![3]);
    }

    #[test]
    fn boundary_event_goes_to_test() {
        let s = temporal_split(&ds(&[1, 2, 3]), t(2));
        assert_eq!(s.train.events().len(), 1);
        assert_eq!(s.test.events().len(), 2);
    }

    #[test]
    fn boundary_before_everything() {
        let s = temporal_split(&ds(&[5, 6]), t(0));
        assert!(s.train.is_empty());
        assert_eq!(s.test.events().len(), 2);
        assert!(s.train.users().is_empty());
    }

    proptest! {
        #[test]
        fn split_is_partition(times in proptest::collection::vec(0i64..100, 0..40), b in -5i64..105) {
            let data = ds(&times);
            let s = temporal_split(&data, t(b));
            prop_assert_eq!(s.train.events().len() + s.test.events().len(), data.events().len());
            prop_assert!(s.train.events().iter().all(|e| e.timestamp < s.boundary));
            prop_assert!(s.test.events().iter().all(|e| e.timestamp >= s.boundary));
        }
    }
}

use std::collections::HashMap;

use super::AlsConfig;
use crate::data::Dataset;
use crate::{Error, Real, Result};

/// Sparse implicit ratings over the training users × training items.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix<T> {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    /// Per user: (item column, r) sorted by column.
    by_user: Vec<Vec<(u32, T)>>,
    /// Per item: (user row, r) sorted by row.
    by_item: Vec<Vec<(u32, T)>>,
    alpha: T,
}

impl<T: Real> ConfidenceMatrix<T> {
    /// Builds the matrix from explicit `(user, item, r)` triples. Users and
    /// items are indexed in the given order; duplicate cells keep the largest r.
    pub fn from_ratings(
        users: Vec<String>,
        items: Vec<String>,
        ratings: impl IntoIterator<Item = (usize, usize, T)>,
        alpha: T,
    ) -> Result<Self> {
        let user_index = index_of(&users)?;
        let item_index = index_of(&items)?;
        let mut by_user: Vec<Vec<(u32, T)>> = vec![Vec::new(); users.len()];
        for (u, i, r) in ratings {
            if u >= users.len() || i >= items.len() {
                return Err(Error::InvalidConfig(format!("rating cell ({u},{i}) out of range")));
            }
            if !(r > T::zero()) {
                return Err(Error::InvalidConfig(format!("rating at ({u},{i}) must be positive")));
            }
            by_user[u].push((i as u32, r));
        }
        for row in &mut by_user {
            row.sort_by_key(|(i, _)| *i);
            row.dedup_by(|later, kept| {
                if later.0 == kept.0 {
                    kept.1 = kept.1.max(later.1);
                    true
                } else {
                    false
                }
            });
        }
        let mut by_item: Vec<Vec<(u32, T)>> = vec![Vec::new(); items.len()];
        for (u, row) in by_user.iter().enumerate() {
            for &(i, r) in row {
                by_item[i as usize].push((u as u32, r));
            }
        }
        Ok(ConfidenceMatrix {
            users,
            items,
            user_index,
            item_index,
            by_user,
            by_item,
            alpha,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn nnz(&self) -> usize {
        self.by_user.iter().map(Vec::len).sum()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn user_row(&self, user: &str) -> Option<usize> {
        self.user_index.get(user).map(|&u| u as usize)
    }

    pub fn item_col(&self, item: &str) -> Option<usize> {
        self.item_index.get(item).map(|&i| i as usize)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn user_ratings(&self, u: usize) -> &[(u32, T)] {
        &self.by_user[u]
    }

    pub fn item_ratings(&self, i: usize) -> &[(u32, T)] {
        &self.by_item[i]
    }

    pub(crate) fn rows_by_user(&self) -> &[Vec<(u32, T)>] {
        &self.by_user
    }

    pub(crate) fn rows_by_item(&self) -> &[Vec<(u32, T)>] {
        &self.by_item
    }

    /// Stored r for a cell, if observed.
    pub fn rating(&self, u: usize, i: usize) -> Option<T> {
        let row = &self.by_user[u];
        row.binary_search_by_key(&(i as u32), |(c, _)| *c)
            .ok()
            .map(|k| row[k].1)
    }

    /// `1 + α·r` on observed cells, 1 elsewhere.
    pub fn confidence(&self, u: usize, i: usize) -> T {
        self.rating(u, i)
            .map(|r| T::one() + self.alpha * r)
            .unwrap_or_else(T::one)
    }
}

fn index_of(ids: &[String]) -> Result<HashMap<String, u32>> {
    let mut m = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if m.insert(id.clone(), k as u32).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate id {id:?}")));
        }
    }
    Ok(m)
}

pub fn build_confidence<T: Real>(train: &Dataset, cfg: &AlsConfig) -> Result<ConfidenceMatrix<T>> {
    if train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    cfg.validate()?;
    let users: Vec<String> = train.users().iter().cloned().collect();
    let items: Vec<String> = train.items().iter().cloned().collect();
    let uidx = index_of(&users)?;
    let iidx = index_of(&items)?;
    let sale = T::of(cfg.sale_weight);
    // sale weight dominates a view for the same pair; quantity does not scale it
    let ratings = train.events().iter().map(|e| {
        let r = if e.is_sale() { sale } else { T::one() };
        (uidx[&e.user_id] as usize, iidx[&e.item_id] as usize, r)
    });
    ConfidenceMatrix::from_ratings(users, items, ratings, T::of(cfg.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::t;
    use crate::data::InteractionEvent;

    fn matrix() -> ConfidenceMatrix<f64> {
        let ds = Dataset::from_events(vec![
            InteractionEvent::view("u1", "a", t(1)),
            InteractionEvent::view("u1", "a", t(2)),
            InteractionEvent::sale("u1", "b", t(3), 3),
            InteractionEvent::view("u2", "b", t(4)),
            InteractionEvent::sale("u2", "b", t(5), 1),
            InteractionEvent::view("u2", "c", t(6)),
        ])
        .unwrap();
        build_confidence(&ds, &AlsConfig::default()).unwrap()
    }

    #[test]
    fn view_rating_and_confidence() {
        let m = matrix();
        let (u1, a) = (m.user_row("u1").unwrap(), m.item_col("a").unwrap());
        assert_eq!(m.rating(u1, a), Some(1.0));
        assert_eq!(m.confidence(u1, a), 41.0);
    }

    #[test]
    fn sale_weight_not_scaled_by_quantity() {
        let m = matrix();
        let (u1, b) = (m.user_row("u1").unwrap(), m.item_col("b").unwrap());
        assert_eq!(m.rating(u1, b), Some(5.0));
        assert_eq!(m.confidence(u1, b), 201.0);
    }

    #[test]
    fn sale_dominates_view() {
        let m = matrix();
        let (u2, b) = (m.user_row("u2").unwrap(), m.item_col("b").unwrap());
        assert_eq!(m.rating(u2, b), Some(5.0));
        let c = m.item_col("c").unwrap();
        let u1 = m.user_row("u1").unwrap();
        assert_eq!(m.rating(u1, c), None);
        assert_eq!(m.confidence(u1, c), 1.0);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.item_ratings(b).len(), 2);
    }

    #[test]
    fn empty_training_rejected() {
        let ds = Dataset::from_events(vec![]).unwrap();
        assert!(matches!(
            build_confidence::<f64>(&ds, &AlsConfig::default()),
            Err(Error::EmptyTraining)
        ));
    }
}

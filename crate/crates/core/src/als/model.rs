use std::collections::HashMap;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::AlsConfig;
use crate::{Error, Real, Result};

/// Fitted user and item factors (row-major) with their id maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel<T> {
    factors: usize,
    users: Vec<String>,
    items: Vec<String>,
    user_factors: Vec<T>,
    item_factors: Vec<T>,
    config: AlsConfig,
    loss_trace: Vec<T>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
}

impl<T: Real> FactorModel<T> {
    pub fn new(
        users: Vec<String>,
        items: Vec<String>,
        factors: usize,
        user_factors: Vec<T>,
        item_factors: Vec<T>,
        config: AlsConfig,
        loss_trace: Vec<T>,
    ) -> Result<Self> {
        if user_factors.len() != users.len() * factors || item_factors.len() != items.len() * factors {
            return Err(Error::Serde("factor matrix dimensions do not match id lists".into()));
        }
        if user_factors.iter().chain(&item_factors).any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem {
                row: 0,
                regularization: config.regularization,
            });
        }
        let user_index = users.iter().enumerate().map(|(k, u)| (u.clone(), k)).collect();
        let item_index = items.iter().enumerate().map(|(k, i)| (i.clone(), k)).collect();
        Ok(FactorModel {
            factors,
            users,
            items,
            user_factors,
            item_factors,
            config,
            loss_trace,
            user_index,
            item_index,
        })
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn user_factors(&self) -> &[T] {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &[T] {
        &self.item_factors
    }

    pub fn config(&self) -> &AlsConfig {
        &self.config
    }

    pub fn loss_trace(&self) -> &[T] {
        &self.loss_trace
    }

    pub fn user_row(&self, user: &str) -> Option<usize> {
        self.user_index.get(user).copied()
    }

    pub fn item_row(&self, item: &str) -> Option<usize> {
        self.item_index.get(item).copied()
    }

    pub fn user_vector(&self, u: usize) -> &[T] {
        &self.user_factors[u * self.factors..(u + 1) * self.factors]
    }

    pub fn item_vector(&self, i: usize) -> &[T] {
        &self.item_factors[i * self.factors..(i + 1) * self.factors]
    }

    pub fn score(&self, u: usize, i: usize) -> T {
        self.user_vector(u)
            .iter()
            .zip(self.item_vector(i))
            .fold(T::zero(), |s, (a, b)| s + *a * *b)
    }

    /// Scores of user row `u` against every item, in item order.
    pub fn predict_row(&self, u: usize) -> Vec<T> {
        (0..self.items.len()).map(|i| self.score(u, i)).collect()
    }
}

/// `xᵤᵀyᵢ` for each requested item, in input order.
pub fn predict_scores<T: Real, S: AsRef<str>>(
    model: &FactorModel<T>,
    user_id: &str,
    item_ids: &[S],
) -> Result<Vec<T>> {
    let u = model
        .user_row(user_id)
        .ok_or_else(|| Error::UnknownUser(user_id.to_string()))?;
    item_ids
        .iter()
        .map(|id| {
            let id = id.as_ref();
            model
                .item_row(id)
                .map(|i| model.score(u, i))
                .ok_or_else(|| Error::UnknownItem(id.to_string()))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct Repr<T> {
    n_users: usize,
    n_items: usize,
    factors: usize,
    users: Vec<String>,
    items: Vec<String>,
    user_factors: Vec<T>,
    item_factors: Vec<T>,
    config: AlsConfig,
    loss_trace: Vec<T>,
}

impl<T: Real> Serialize for FactorModel<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            n_users: self.users.len(),
            n_items: self.items.len(),
            factors: self.factors,
            users: self.users.clone(),
            items: self.items.clone(),
            user_factors: self.user_factors.clone(),
            item_factors: self.item_factors.clone(),
            config: self.config.clone(),
            loss_trace: self.loss_trace.clone(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for FactorModel<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Repr::<T>::deserialize(d)?;
        if r.n_users != r.users.len() || r.n_items != r.items.len() {
            return Err(serde::de::Error::custom("dimensions do not match id lists"));
        }
        FactorModel::new(
            r.users,
            r.items,
            r.factors,
            r.user_factors,
            r.item_factors,
            r.config,
            r.loss_trace,
        )
        .map_err(serde::de::Error::custom)
    }
}

use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, FeatureTable};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn check_row<T: Real>(&self, row: &[FeatureValue<T>]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::SchemaMismatch(format!(
                "row has {} values, schema has {} features",
                row.len(),
                self.features.len()
            )));
        }
        for (spec, v) in self.features.iter().zip(row) {
            match (&spec.kind, v) {
                (FeatureKind::Numeric, FeatureValue::Num(_)) => {}
                (FeatureKind::Categorical { levels }, FeatureValue::Cat(c)) => {
                    if *c as usize >= levels.len() {
                        return Err(Error::SchemaMismatch(format!(
                            "{}: level code {c} out of vocabulary",
                            spec.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "{}: wrong value type",
                        spec.name
                    )))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue<T> {
    Num(T),
    Cat(u32),
}

/// User attributes followed by product attributes, prefixed `user.` / `item.`.
#[derive(Debug, Clone)]
pub struct FeatureJoin {
    schema: FeatureSchema,
    users: FeatureTable,
    items: FeatureTable,
}

fn specs(prefix: &str, table: &FeatureTable) -> Vec<FeatureSpec> {
    table
        .columns()
        .iter()
        .map(|c| FeatureSpec {
            name: format!("{prefix}.{}", c.name),
            kind: match &c.data {
                ColumnData::Numeric(_) => FeatureKind::Numeric,
                ColumnData::Categorical { levels, .. } => FeatureKind::Categorical {
                    levels: levels.clone(),
                },
            },
        })
        .collect()
}

fn part<T: Real>(table: &FeatureTable, id: &str, what: &str) -> Result<Vec<FeatureValue<T>>> {
    let r = table
        .row_of(id)
        .ok_or_else(|| Error::MissingFeatures(format!("{what} {id:?}")))?;
    Ok(table
        .columns()
        .iter()
        .map(|c| match &c.data {
            ColumnData::Numeric(v) => FeatureValue::Num(T::of(v[r])),
            ColumnData::Categorical { codes, .. } => FeatureValue::Cat(codes[r]),
        })
        .collect())
}

impl FeatureJoin {
    pub fn new(users: &FeatureTable, items: &FeatureTable) -> Self {
        let mut features = specs("user", users);
        features.extend(specs("item", items));
        FeatureJoin {
            schema: FeatureSchema { features },
            users: users.clone(),
            items: items.clone(),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn user_width(&self) -> usize {
        self.users.columns().len()
    }

    pub fn user_part<T: Real>(&self, user: &str) -> Result<Vec<FeatureValue<T>>> {
        part(&self.users, user, "user")
    }

    pub fn item_part<T: Real>(&self, item: &str) -> Result<Vec<FeatureValue<T>>> {
        part(&self.items, item, "item")
    }

    pub fn row<T: Real>(&self, user: &str, item: &str) -> Result<Vec<FeatureValue<T>>> {
        let mut r = self.user_part(user)?;
        r.extend(self.item_part::<T>(item)?);
        Ok(r)
    }
}

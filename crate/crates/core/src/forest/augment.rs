use rand::seq::index;

use super::{FeatureJoin, FeatureKind, FeatureSchema, FeatureValue, ForestConfig};
use crate::als::{ConfidenceMatrix, FactorModel};
use crate::data::Dataset;
use crate::{rng, Error, Real, Result};

/// RNG stream reserved for negative sampling; trees use streams `0..n_trees`.
const NEGATIVE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum Column<T> {
    Numeric(Vec<T>),
    Categorical(Vec<u32>),
}

impl<T: Real> Column<T> {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, r: usize) -> FeatureValue<T> {
        match self {
            Column::Numeric(v) => FeatureValue::Num(v[r]),
            Column::Categorical(v) => FeatureValue::Cat(v[r]),
        }
    }
}

/// Training rows for the forest, stored column-wise. Row `r` is the pair
/// `(users[pairs[r].0], items[pairs[r].1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTable<T> {
    pub schema: FeatureSchema,
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub pairs: Vec<(u32, u32)>,
    pub columns: Vec<Column<T>>,
    pub labels: Vec<T>,
    /// Whether the row's label came from an observed interaction.
    pub observed: Vec<bool>,
}

impl<T: Real> AugmentedTable<T> {
    /// Table without user/item provenance, e.g. for plain regression.
    pub fn from_columns(schema: FeatureSchema, columns: Vec<Column<T>>, labels: Vec<T>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::SchemaMismatch("column count differs from schema".into()));
        }
        for (spec, c) in schema.features.iter().zip(&columns) {
            if c.len() != labels.len() {
                return Err(Error::SchemaMismatch(format!("{}: length differs from labels", spec.name)));
            }
            let ok = matches!(
                (&spec.kind, c),
                (FeatureKind::Numeric, Column::Numeric(_)) | (FeatureKind::Categorical { .. }, Column::Categorical(_))
            );
            if !ok {
                return Err(Error::SchemaMismatch(format!("{}: column type differs from schema", spec.name)));
            }
        }
        let n = labels.len();
        Ok(AugmentedTable {
            schema,
            users: Vec::new(),
            items: Vec::new(),
            pairs: Vec::new(),
            columns,
            observed: vec![true; n],
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, r: usize) -> Vec<FeatureValue<T>> {
        self.columns.iter().map(|c| c.get(r)).collect()
    }

    pub fn pair(&self, r: usize) -> Option<(&str, &str)> {
        self.pairs
            .get(r)
            .map(|&(u, i)| (self.users[u as usize].as_str(), self.items[i as usize].as_str()))
    }
}

/// Observed pairs keep their implicit rating `r`; per user,
/// `negatives_per_user` unobserved items (uniform, without replacement) are
/// labeled with the ALS score clamped to `[0, 1]`.
pub fn augment_labels<T: Real>(
    train: &Dataset,
    cm: &ConfidenceMatrix<T>,
    als: &FactorModel<T>,
    cfg: &ForestConfig,
) -> Result<AugmentedTable<T>> {
    cfg.validate()?;
    let join = FeatureJoin::new(&train.user_features, &train.item_features);
    let item_parts: Vec<Vec<FeatureValue<T>>> = cm
        .items()
        .iter()
        .map(|i| join.item_part(i))
        .collect::<Result<_>>()?;
    let als_items: Vec<usize> = cm
        .items()
        .iter()
        .map(|i| als.item_row(i).ok_or_else(|| Error::UnknownItem(i.clone())))
        .collect::<Result<_>>()?;

    let mut rng = rng::stream(cfg.seed, NEGATIVE_STREAM);
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut observed = Vec::new();
    let mut user_parts = Vec::with_capacity(cm.n_users());
    let mut unobserved: Vec<u32> = Vec::with_capacity(cm.n_items());
    for (u, user) in cm.users().iter().enumerate() {
        user_parts.push(join.user_part::<T>(user)?);
        let au = als.user_row(user).ok_or_else(|| Error::UnknownUser(user.clone()))?;
        let rated = cm.user_ratings(u);
        for &(i, r) in rated {
            pairs.push((u as u32, i));
            labels.push(r);
            observed.push(true);
        }
        unobserved.clear();
        let mut next = rated.iter().map(|(i, _)| *i).peekable();
        for i in 0..cm.n_items() as u32 {
            if next.peek() == Some(&i) {
                next.next();
            } else {
                unobserved.push(i);
            }
        }
        let amount = cfg.negatives_per_user.min(unobserved.len());
        let mut picked: Vec<usize> = index::sample(&mut rng, unobserved.len(), amount).into_vec();
        picked.sort_unstable();
        for k in picked {
            let i = unobserved[k];
            let score = als.score(au, als_items[i as usize]);
            pairs.push((u as u32, i));
            labels.push(score.max(T::zero()).min(T::one()));
            observed.push(false);
        }
    }

    let p = join.schema().len();
    let pu = join.user_width();
    let mut columns: Vec<Column<T>> = join
        .schema()
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => Column::Numeric(Vec::with_capacity(pairs.len())),
            FeatureKind::Categorical { .. } => Column::Categorical(Vec::with_capacity(pairs.len())),
        })
        .collect();
    for &(u, i) in &pairs {
        for (f, col) in columns.iter_mut().enumerate().take(p) {
            let v = if f < pu {
                user_parts[u as usize][f]
            } else {
                item_parts[i as usize][f - pu]
            };
            match (col, v) {
                (Column::Numeric(c), FeatureValue::Num(x)) => c.push(x),
                (Column::Categorical(c), FeatureValue::Cat(x)) => c.push(x),
                _ => unreachable!("join schema and parts agree"),
            }
        }
    }
    Ok(AugmentedTable {
        schema: join.schema().clone(),
        users: cm.users().to_vec(),
        items: cm.items().to_vec(),
        pairs,
        columns,
        labels,
        observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::als::{build_confidence, AlsConfig};
    use crate::data::testutil::t;
    use crate::data::{FeatureTable, InteractionEvent};

    fn train() -> Dataset {
        let users = FeatureTable::read_csv("id,age:num\nu1,30\nu2,50\n".as_bytes(), "u").unwrap();
        let items = FeatureTable::read_csv(
            "id,price:num,shape:cat\na,10,x\nb,20,y\nc,30,x\nd,40,y\n".as_bytes(),
            "i",
        )
        .unwrap();
        Dataset::new(
            vec![
                InteractionEvent::view("u1", "a", t(1)),
                InteractionEvent::sale("u1", "b", t(2), 1),
                InteractionEvent::view("u2", "c", t(3)),
                InteractionEvent::view("u2", "d", t(4)),
            ],
            users,
            items,
        )
        .unwrap()
    }

    #[test]
    fn labels_follow_observation() {
        let ds = train();
        let als_cfg = AlsConfig { factors: 2, iterations: 3, ..Default::default() };
        let cm = build_confidence::<f64>(&ds, &als_cfg).unwrap();
        let als = crate::als::fit_als(&cm, &als_cfg).unwrap();
        let cfg = ForestConfig { negatives_per_user: 50, ..Default::default() };
        let table = augment_labels(&ds, &cm, &als, &cfg).unwrap();
        // every cell: 2 users × 4 items, sampling is exhaustive here
        assert_eq!(table.len(), 8);
        for r in 0..table.len() {
            let (u, i) = table.pair(r).unwrap();
            let label = table.labels[r];
            match (u, i) {
                ("u1", "a") | ("u2", "c") | ("u2", "d") => assert_eq!(label, 1.0),
                ("u1", "b") => assert_eq!(label, 5.0),
                _ => {
                    assert!(!table.observed[r]);
                    let raw = als.score(als.user_row(u).unwrap(), als.item_row(i).unwrap());
                    assert_eq!(label, raw.clamp(0.0, 1.0));
                }
            }
        }
        assert_eq!(table.row(0).len(), 3);
    }

    #[test]
    fn negatives_bounded_and_seeded() {
        let ds = train();
        let als_cfg = AlsConfig { factors: 2, iterations: 2, ..Default::default() };
        let cm = build_confidence::<f64>(&ds, &als_cfg).unwrap();
        let als = crate::als::fit_als(&cm, &als_cfg).unwrap();
        let cfg = ForestConfig { negatives_per_user: 1, seed: 4, ..Default::default() };
        let a = augment_labels(&ds, &cm, &als, &cfg).unwrap();
        assert_eq!(a.len(), 4 + 2);
        let b = augment_labels(&ds, &cm, &als, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_features_named() {
        let mut ds = train();
        ds.user_features = FeatureTable::read_csv("id,age:num\nu1,30\n".as_bytes(), "u").unwrap();
        let als_cfg = AlsConfig { factors: 2, iterations: 1, ..Default::default() };
        let cm = build_confidence::<f64>(&ds, &als_cfg).unwrap();
        let als = crate::als::fit_als(&cm, &als_cfg).unwrap();
        let err = augment_labels(&ds, &cm, &als, &ForestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MissingFeatures(m) if m.contains("u2")));
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{TreeBuilder, TreeParams};
use super::{AugmentedTable, FeatureKind, FeatureSchema, FeatureValue, ForestConfig, Tree};
use crate::{rng, Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ForestModel<T> {
    pub schema: FeatureSchema,
    pub config: ForestConfig,
    pub label_min: T,
    pub label_max: T,
    pub trees: Vec<Tree<T>>,
}

impl<T: Real> ForestModel<T> {
    /// Mean tree prediction for a row already checked against the schema.
    pub fn predict_checked(&self, row: &[FeatureValue<T>]) -> T {
        let (mut sum, mut lo, mut hi) = (T::zero(), T::infinity(), T::neg_infinity());
        for t in &self.trees {
            let v = t.predict(row);
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (sum / T::of_usize(self.trees.len())).max(lo).min(hi)
    }

    pub fn predict_one(&self, row: &[FeatureValue<T>]) -> Result<T> {
        self.schema.check_row(row)?;
        Ok(self.predict_checked(row))
    }

    /// Number of splits per feature across all trees.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.len()];
        for t in &self.trees {
            for n in &t.nodes {
                if let Some(s) = &n.split {
                    counts[s.feature] += 1;
                }
            }
        }
        counts
    }
}

pub fn fit_forest<T: Real>(table: &AugmentedTable<T>, cfg: &ForestConfig) -> Result<ForestModel<T>> {
    cfg.validate()?;
    if table.len() < 2 {
        return Err(Error::DegenerateTable(format!("{} rows, need at least 2", table.len())));
    }
    if table.schema.is_empty() {
        return Err(Error::DegenerateTable("no features".into()));
    }
    let mtry = cfg.mtry(table.schema.len())?;
    let (label_min, label_max) = table
        .labels
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if label_min == label_max {
        log::warn!("all {} training labels equal {label_min}; trees will be single leaves", table.len());
    }
    let n_levels: Vec<usize> = table
        .schema
        .features
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Numeric => 0,
            FeatureKind::Categorical { levels } => levels.len(),
        })
        .collect();
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_leaf: cfg.min_leaf,
        mtry,
    };
    let trees: Vec<Tree<T>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            TreeBuilder::new(&table.columns, &n_levels, &table.labels, &params, rng::stream(cfg.seed, t as u64)).build()
        })
        .collect();
    Ok(ForestModel {
        schema: table.schema.clone(),
        config: cfg.clone(),
        label_min,
        label_max,
        trees,
    })
}

pub fn predict_forest<T: Real>(model: &ForestModel<T>, rows: &[Vec<FeatureValue<T>>]) -> Result<Vec<T>> {
    rows.iter().map(|r| model.predict_one(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{Column, FeatureSpec};

    fn one_numeric(xs: Vec<f64>, ys: Vec<f64>) -> AugmentedTable<f64> {
        AugmentedTable::from_columns(
            FeatureSchema {
                features: vec![FeatureSpec { name: "x".into(), kind: FeatureKind::Numeric }],
            },
            vec![Column::Numeric(xs)],
            ys,
        )
        .unwrap()
    }

    #[test]
    fn constant_labels_predict_constant() {
        let t = one_numeric((0..50).map(|k| k as f64).collect(), vec![0.7; 50]);
        let m = fit_forest(&t, &ForestConfig { n_trees: 10, ..Default::default() }).unwrap();
        for x in [-3.0, 0.0, 12.5, 99.0] {
            assert_eq!(m.predict_one(&[FeatureValue::Num(x)]).unwrap(), 0.7);
        }
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn single_tree_returns_leaf_mean() {
        let xs: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if *x > 20.0 { 3.0 } else { 1.0 }).collect();
        let t = one_numeric(xs, ys);
        let m = fit_forest(&t, &ForestConfig { n_trees: 1, min_leaf: 2, ..Default::default() }).unwrap();
        for x in [0.0, 10.0, 25.0, 39.0] {
            let row = [FeatureValue::Num(x)];
            assert_eq!(m.predict_one(&row).unwrap(), m.trees[0].predict(&row));
        }
    }

    #[test]
    fn degenerate_inputs() {
        let t = one_numeric(vec![1.0], vec![1.0]);
        assert!(matches!(fit_forest(&t, &ForestConfig::default()), Err(Error::DegenerateTable(_))));
        let empty = AugmentedTable::<f64>::from_columns(FeatureSchema::default(), vec![], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_forest(&empty, &ForestConfig::default()), Err(Error::DegenerateTable(_))));
        let t = one_numeric(vec![1.0, 2.0], vec![1.0, 2.0]);
        let cfg = ForestConfig { features_per_split: Some(2), ..Default::default() };
        assert!(matches!(fit_forest(&t, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn schema_mismatch_reported() {
        let t = one_numeric((0..20).map(|k| k as f64).collect(), (0..20).map(|k| k as f64).collect());
        let m = fit_forest(&t, &ForestConfig { n_trees: 3, ..Default::default() }).unwrap();
        assert!(matches!(
            predict_forest(&m, &[vec![FeatureValue::Cat(0)]]),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(predict_forest(&m, &[vec![]]), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn json_dump_round_trip() {
        let t = one_numeric((0..30).map(|k| k as f64).collect(), (0..30).map(|k| (k % 7) as f64).collect());
        let m = fit_forest(&t, &ForestConfig { n_trees: 4, min_leaf: 2, ..Default::default() }).unwrap();
        let s = serde_json::to_string_pretty(&m).unwrap();
        assert!(s.contains("\"threshold\""));
        let back: ForestModel<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}

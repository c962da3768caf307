use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use receval::forest::{fit_forest, AugmentedTable, Column, FeatureKind, FeatureSchema, FeatureSpec, FeatureValue, ForestConfig};

fn step_table(n: usize, seed: u64) -> AugmentedTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| if x < 0.5 { 0.0 } else { 1.0 }).collect();
    AugmentedTable::from_columns(
        FeatureSchema {
            features: vec![FeatureSpec {
                name: "x".into(),
                kind: FeatureKind::Numeric,
            }],
        },
        vec![Column::Numeric(xs)],
        ys,
    )
    .unwrap()
}

fn cfg(n_trees: usize, seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees,
        seed,
        ..ForestConfig::default()
    }
}

#[test]
fn step_function_fit() {
    let model = fit_forest(&step_table(2000, 1), &cfg(50, 3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut se = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random();
        let y = if x < 0.5 { 0.0 } else { 1.0 };
        let p = model.predict_one(&[FeatureValue::Num(x)]).unwrap();
        assert!((0.0..=1.0).contains(&p));
        se += (p - y) * (p - y);
    }
    assert!(se / 1000.0 < 0.01, "mse {}", se / 1000.0);
}

#[test]
fn prediction_is_mean_of_trees() {
    let model = fit_forest(&step_table(500, 2), &cfg(17, 4)).unwrap();
    for k in 0..50 {
        let row = [FeatureValue::Num(k as f64 / 49.0)];
        let mean: f64 = model.trees.iter().map(|t| t.predict(&row)).sum::<f64>() / 17.0;
        assert!((model.predict_one(&row).unwrap() - mean).abs() < 1e-12);
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let t = step_table(800, 5);
    assert_eq!(fit_forest(&t, &cfg(10, 8)).unwrap(), fit_forest(&t, &cfg(10, 8)).unwrap());
}

#[test]
fn more_trees_less_seed_variance() {
    // predictions near the step vary across seeds; averaging more trees shrinks that spread
    let t = step_table(400, 6);
    let probe = [FeatureValue::Num(0.5)];
    let spread = |n_trees: usize| {
        let preds: Vec<f64> = (0..12).map(|s| fit_forest(&t, &cfg(n_trees, s)).unwrap().predict_one(&probe).unwrap()).collect();
        let m = preds.iter().sum::<f64>() / preds.len() as f64;
        preds.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (preds.len() - 1) as f64
    };
    let (few, many) = (spread(1), spread(40));
    assert!(many < few, "1 tree {few}, 40 trees {many}");
}

#[test]
fn categorical_signal_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1200;
    let codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..6)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = codes.iter().map(|&c| if c % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let table = AugmentedTable::from_columns(
        FeatureSchema {
            features: vec![
                FeatureSpec {
                    name: "c".into(),
                    kind: FeatureKind::Categorical {
                        levels: (0..6).map(|i| format!("l{i}")).collect(),
                    },
                },
                FeatureSpec {
                    name: "noise".into(),
                    kind: FeatureKind::Numeric,
                },
            ],
        },
        vec![Column::Categorical(codes), Column::Numeric(noise)],
        ys,
    )
    .unwrap();
    let model = fit_forest(
        &table,
        &ForestConfig {
            n_trees: 30,
            features_per_split: Some(2),
            ..ForestConfig::default()
        },
    )
    .unwrap();
    for c in 0..6u32 {
        let p = model.predict_one(&[FeatureValue::Cat(c), FeatureValue::Num(0.5)]).unwrap();
        let want = if c % 2 == 0 { 1.0 } else { 0.0 };
        assert!((p - want).abs() < 0.05, "level {c}: {p}");
    }
}

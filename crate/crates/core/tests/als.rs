use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use receval::als::{fit_als, objective, solve_row, AlsConfig, ConfidenceMatrix};

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= m * a[col][c];
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn random_matrix(seed: u64, users: usize, items: usize, density: f64) -> ConfidenceMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.random::<f64>() < density {
                triples.push((u, i, if rng.random::<f64>() < 0.3 { 5.0 } else { 1.0 }));
            }
        }
    }
    ConfidenceMatrix::from_ratings(
        (0..users).map(|u| format!("u{u}")).collect(),
        (0..items).map(|i| format!("i{i}")).collect(),
        triples,
        40.0,
    )
    .unwrap()
}

/// `(Σ_j c_j y_j y_jᵀ + λI) x = Σ_j c_j p_j y_j` assembled over every column.
fn dense_row(fixed: &[f64], f: usize, n: usize, obs: &[(u32, f64)], alpha: f64, lambda: f64) -> Vec<f64> {
    let mut a = vec![vec![0.0; f]; f];
    let mut b = vec![0.0; f];
    for j in 0..n {
        let y = &fixed[j * f..(j + 1) * f];
        let (c, p) = match obs.iter().find(|(k, _)| *k as usize == j) {
            Some(&(_, r)) => (1.0 + alpha * r, 1.0),
            None => (1.0, 0.0),
        };
        for s in 0..f {
            for t in 0..f {
                a[s][t] += c * y[s] * y[t];
            }
            b[s] += c * p * y[s];
        }
    }
    for (d, row) in a.iter_mut().enumerate() {
        row[d] += lambda;
    }
    dense_solve(a, b)
}

#[test]
fn solve_row_matches_dense_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, f) = (30, 5);
    let fixed: Vec<f64> = (0..n * f).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut g = vec![0.0; f * f];
    for row in fixed.chunks(f) {
        for s in 0..f {
            for t in 0..f {
                g[s * f + t] += row[s] * row[t];
            }
        }
    }
    let obs = vec![(2u32, 1.0), (7, 5.0), (19, 1.0), (29, 5.0)];
    let mut out = vec![0.0; f];
    assert!(solve_row(&g, &fixed, f, &obs, 40.0, 0.1, &mut out));
    let want = dense_row(&fixed, f, n, &obs, 40.0, 0.1);
    for (a, b) in out.iter().zip(&want) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn fitted_item_rows_solve_their_normal_equations() {
    // item rows are solved last in each sweep, so they are exact for the final user factors
    let m = random_matrix(3, 40, 25, 0.15);
    let cfg = AlsConfig {
        factors: 4,
        iterations: 5,
        seed: 9,
        ..AlsConfig::default()
    };
    let model = fit_als(&m, &cfg).unwrap();
    let f = cfg.factors;
    for i in 0..m.n_items() {
        let want = dense_row(model.user_factors(), f, m.n_users(), m.item_ratings(i), 40.0, 0.1);
        for (a, b) in model.item_vector(i).iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "item {i}: {a} vs {b}");
        }
    }
}

#[test]
fn loss_never_increases() {
    for seed in 0..5 {
        let m = random_matrix(100 + seed, 60, 40, 0.1);
        let cfg = AlsConfig {
            factors: 6,
            iterations: 12,
            seed,
            ..AlsConfig::default()
        };
        let model = fit_als(&m, &cfg).unwrap();
        let trace = model.loss_trace();
        assert_eq!(trace.len(), 12);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * w[0].abs().max(1.0), "seed {seed}: {} -> {}", w[0], w[1]);
        }
        let last = objective(&m, model.user_factors(), model.item_factors(), 6, 0.1);
        assert!((last - trace[11]).abs() <= 1e-9 * last.abs());
    }
}

#[test]
fn single_and_double_precision_agree() {
    let m = random_matrix(5, 30, 20, 0.2);
    let triples: Vec<(usize, usize, f32)> = (0..m.n_users())
        .flat_map(|u| m.user_ratings(u).iter().map(move |&(i, r)| (u, i as usize, r as f32)))
        .collect();
    let m32 = ConfidenceMatrix::<f32>::from_ratings(m.users().to_vec(), m.items().to_vec(), triples, 40.0).unwrap();
    let cfg = AlsConfig {
        factors: 3,
        iterations: 4,
        ..AlsConfig::default()
    };
    let a = fit_als(&m, &cfg).unwrap();
    let b = fit_als(&m32, &cfg).unwrap();
    for u in 0..m.n_users() {
        for i in 0..m.n_items() {
            assert!((a.score(u, i) - b.score(u, i) as f64).abs() < 1e-2);
        }
    }
}

use rand::Rng as _;
use rayon::prelude::*;

use super::{AlsConfig, ConfidenceMatrix, FactorModel};
use crate::linalg::cholesky_solve;
use crate::{rng, Error, Real, Result};

/// `Fᵀ F` for a row-major `n × f` factor matrix, summed in row order.
fn gram<T: Real>(factors: &[T], f: usize) -> Vec<T> {
    let mut g = vec![T::zero(); f * f];
    for row in factors.chunks_exact(f) {
        for a in 0..f {
            let ra = row[a];
            for b in a..f {
                g[a * f + b] += ra * row[b];
            }
        }
    }
    for a in 0..f {
        for b in 0..a {
            g[a * f + b] = g[b * f + a];
        }
    }
    g
}

/// Solves one row's subproblem
/// `(FᵀF + Fᵀ(Cᵣ − I)F + λI) x = Fᵀ Cᵣ p` with `p = 1` on observed cells.
///
/// `gram` is `FᵀF` for the fixed factors `fixed` (row-major, `f` columns),
/// `observed` lists `(fixed row, r)` for the row being solved. Writes the
/// solution into `out`; returns `false` if the system is not positive definite.
pub fn solve_row<T: Real>(
    gram: &[T],
    fixed: &[T],
    f: usize,
    observed: &[(u32, T)],
    alpha: T,
    lambda: T,
    out: &mut [T],
) -> bool {
    let mut a = gram.to_vec();
    for d in 0..f {
        a[d * f + d] += lambda;
    }
    out.iter_mut().for_each(|x| *x = T::zero());
    for &(j, r) in observed {
        let y = &fixed[j as usize * f..(j as usize + 1) * f];
        let c = T::one() + alpha * r;
        let w = c - T::one();
        for p in 0..f {
            let wy = w * y[p];
            for q in p..f {
                a[p * f + q] += wy * y[q];
            }
            out[p] += c * y[p];
        }
    }
    for p in 0..f {
        for q in 0..p {
            a[p * f + q] = a[q * f + p];
        }
    }
    cholesky_solve(&mut a, out, f)
}

fn solve_side<T: Real>(
    fixed: &[T],
    rows: &[Vec<(u32, T)>],
    out: &mut [T],
    f: usize,
    alpha: T,
    lambda: T,
) -> Result<()> {
    let g = gram(fixed, f);
    out.par_chunks_mut(f)
        .zip(rows.par_iter())
        .enumerate()
        .try_for_each(|(row, (x, obs))| {
            if solve_row(&g, fixed, f, obs, alpha, lambda, x) && x.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::SingularSystem {
                    row,
                    regularization: lambda.as_f64(),
                })
            }
        })
}

/// Weighted squared error over every cell plus the ridge penalty:
/// `Σ c(p − xᵀy)² + λ(‖X‖² + ‖Y‖²)`, evaluated in O(nnz·f + U·f²).
pub fn objective<T: Real>(
    m: &ConfidenceMatrix<T>,
    user_factors: &[T],
    item_factors: &[T],
    f: usize,
    lambda: T,
) -> T {
    let g = gram(item_factors, f);
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y);
    let mut loss = T::zero();
    for (u, x) in user_factors.chunks_exact(f).enumerate() {
        // xᵀ G x = Σ_i (xᵀ y_i)² over all items
        let mut q = T::zero();
        for a in 0..f {
            let mut s = T::zero();
            for b in 0..f {
                s += g[a * f + b] * x[b];
            }
            q += x[a] * s;
        }
        loss += q;
        for &(i, r) in m.user_ratings(u) {
            let y = &item_factors[i as usize * f..(i as usize + 1) * f];
            let s = dot(x, y);
            let c = T::one() + m.alpha() * r;
            loss += c * (T::one() - s) * (T::one() - s) - s * s;
        }
    }
    let reg = user_factors.iter().chain(item_factors).fold(T::zero(), |s, v| s + *v * *v);
    loss + lambda * reg
}

pub fn fit_als<T: Real>(m: &ConfidenceMatrix<T>, cfg: &AlsConfig) -> Result<FactorModel<T>> {
    cfg.validate()?;
    if m.n_users() == 0 || m.n_items() == 0 {
        return Err(Error::EmptyTraining);
    }
    let f = cfg.factors;
    let lambda = T::of(cfg.regularization);
    let alpha = m.alpha();
    let mut rng = rng::seeded(cfg.seed);
    let mut init = |n: usize| -> Vec<T> {
        (0..n * f)
            .map(|_| T::of(rng.random::<f64>() * 0.01))
            .collect()
    };
    let mut xs = init(m.n_users());
    let mut ys = init(m.n_items());

    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        solve_side(&ys, m.rows_by_user(), &mut xs, f, alpha, lambda)?;
        solve_side(&xs, m.rows_by_item(), &mut ys, f, alpha, lambda)?;
        trace.push(objective(m, &xs, &ys, f, lambda));
    }
    FactorModel::new(
        m.users().to_vec(),
        m.items().to_vec(),
        f,
        xs,
        ys,
        cfg.clone(),
        trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ConfidenceMatrix<f64> {
        let users = (0..4).map(|u| format!("u{u}")).collect();
        let items = (0..5).map(|i| format!("i{i}")).collect();
        let cells = vec![(0, 0, 1.0), (0, 1, 5.0), (1, 1, 1.0), (2, 3, 1.0), (3, 4, 5.0), (3, 0, 1.0)];
        ConfidenceMatrix::from_ratings(users, items, cells, 40.0).unwrap()
    }

    #[test]
    fn objective_matches_dense_sum() {
        let m = tiny();
        let f = 3;
        let xs: Vec<f64> = (0..4 * f).map(|k| (k as f64 * 0.37).sin()).collect();
        let ys: Vec<f64> = (0..5 * f).map(|k| (k as f64 * 0.91).cos()).collect();
        let mut dense = 0.0;
        for u in 0..4 {
            for i in 0..5 {
                let s: f64 = (0..f).map(|d| xs[u * f + d] * ys[i * f + d]).sum();
                let p = if m.rating(u, i).is_some() { 1.0 } else { 0.0 };
                dense += m.confidence(u, i) * (p - s) * (p - s);
            }
        }
        dense += 0.1 * xs.iter().chain(&ys).map(|v| v * v).sum::<f64>();
        let fast = objective(&m, &xs, &ys, f, 0.1);
        assert!((dense - fast).abs() < 1e-9 * dense.abs().max(1.0));
    }

    #[test]
    fn single_observed_cell_outscores_cold_item() {
        let m = ConfidenceMatrix::from_ratings(
            vec!["u".into()],
            vec!["seen".into(), "cold".into()],
            vec![(0, 0, 1.0)],
            40.0,
        )
        .unwrap();
        let model = fit_als(&m, &AlsConfig { factors: 4, ..Default::default() }).unwrap();
        let s = model.predict_row(0);
        assert!(s[0] > s[1], "{s:?}");
    }

    #[test]
    fn deterministic_for_seed() {
        let m = tiny();
        let cfg = AlsConfig { factors: 4, iterations: 5, seed: 9, ..Default::default() };
        let a = fit_als(&m, &cfg).unwrap();
        let b = fit_als(&m, &cfg).unwrap();
        assert_eq!(a.user_factors(), b.user_factors());
        assert_eq!(a.item_factors(), b.item_factors());
        let c = fit_als(&m, &AlsConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.user_factors(), c.user_factors());
    }

    #[test]
    fn works_in_single_precision() {
        let users = (0..4).map(|u| format!("u{u}")).collect();
        let items = (0..5).map(|i| format!("i{i}")).collect();
        let m = ConfidenceMatrix::<f32>::from_ratings(
            users,
            items,
            vec![(0, 0, 1.0), (1, 1, 5.0), (2, 2, 1.0), (3, 0, 1.0)],
            40.0,
        )
        .unwrap();
        let model = fit_als(&m, &AlsConfig { factors: 3, iterations: 6, ..Default::default() }).unwrap();
        let t = model.loss_trace();
        assert!(t.iter().all(|v| v.is_finite()));
        assert!(t.last().unwrap() <= &(t[0] * 1.0001));
    }
}

use std::collections::HashSet;

use rand::seq::index;

use super::{BootstrapSpec, MetricValue};
use crate::recommend::RankedList;
use crate::{rng, Error, Real, Result};

/// `|L_i △ L_j|` over the first `k` items of each list.
pub fn symmetric_distinct<T>(a: &RankedList<T>, b: &RankedList<T>, k: usize) -> usize {
    let sa: HashSet<&str> = a.items.iter().take(k).map(String::as_str).collect();
    let sb: HashSet<&str> = b.items.iter().take(k).map(String::as_str).collect();
    sa.symmetric_difference(&sb).count()
}

/// Maps `m ∈ [0, U(U−1)/2)` to the pair `(i, j)`, `i < j`, in row-major order.
pub fn pair_from_index(m: u64, users: u64) -> (usize, usize) {
    let start = |i: u64| i * (2 * users - i - 1) / 2;
    // invert start(i) <= m with a float estimate, then correct
    let b = 2.0 * users as f64 - 1.0;
    let est = ((b - (b * b - 8.0 * m as f64).max(0.0).sqrt()) / 2.0).floor();
    let mut i = (est.max(0.0) as u64).min(users.saturating_sub(2));
    while i > 0 && start(i) > m {
        i -= 1;
    }
    while i + 1 < users - 1 && start(i + 1) <= m {
        i += 1;
    }
    let j = i + 1 + (m - start(i));
    (i as usize, j as usize)
}

/// `U` distinct user pairs drawn uniformly (all pairs when there are fewer).
/// Sampling the proportion `2/(U−1)` of the `U(U−1)/2` pairs yields `U` in
/// expectation; pairs are drawn directly by index.
pub fn sampled_pairs(users: usize, seed: u64) -> Vec<(usize, usize)> {
    let u = users as u64;
    let total = u * u.saturating_sub(1) / 2;
    let amount = u.min(total) as usize;
    let mut rng = rng::seeded(seed);
    let mut idx: Vec<usize> = index::sample(&mut rng, total as usize, amount).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|m| pair_from_index(m as u64, u)).collect()
}

/// Mean symmetric difference over sampled user pairs, with the standard
/// deviation across pairs and a bootstrap interval over pair values.
pub fn avg_distinct_sampled<T: Real>(lists: &[RankedList<T>], k: usize, spec: BootstrapSpec) -> Result<MetricValue<T>> {
    if lists.len() < 2 {
        return Err(Error::TooFewUsers { needed: 2, got: lists.len() });
    }
    let pairs = sampled_pairs(lists.len(), spec.seed);
    let values: Vec<T> = pairs
        .iter()
        .map(|&(i, j)| T::of_usize(symmetric_distinct(&lists[i], &lists[j], k)))
        .collect();
    MetricValue::from_units(
        &values,
        BootstrapSpec {
            seed: rng::derive_seed(spec.seed, 1),
            ..spec
        },
    )
}

use rand::Rng as _;

use crate::{rng, Error, Real, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Percentile bootstrap interval for the mean: `resamples` means of
/// with-replacement resamples, cut at the `(1 ± level)/2` quantiles (linear
/// interpolation between order statistics), clamped to the data range.
pub fn bootstrap_ci<T: Real>(values: &[T], resamples: usize, level: f64, seed: u64) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::TooFewUsers { needed: 1, got: 0 });
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs resamples > 0 and 0 < level < 1 (got {resamples}, {level})"
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Ok((lo, hi));
    }
    let n = values.len();
    let mut rng = rng::seeded(seed);
    let mut means: Vec<T> = (0..resamples)
        .map(|_| {
            let s: T = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            s / T::of_usize(n)
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let tail = (1.0 - level) / 2.0;
    let q = |p: f64| -> T {
        let h = p * (resamples - 1) as f64;
        let i = h.floor() as usize;
        let frac = T::of(h - i as f64);
        let j = (i + 1).min(resamples - 1);
        means[i] + (means[j] - means[i]) * frac
    };
    let clamp = |v: T| v.max(lo).min(hi);
    Ok((clamp(q(tail)), clamp(q(1.0 - tail))))
}

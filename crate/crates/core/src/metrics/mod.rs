//! Accuracy and personalization metrics, each reported with dispersion and a
//! percentile-bootstrap confidence interval over its units (users or pairs).

mod bootstrap;
mod diversity;
mod ndcg;
mod popularity;
mod relevance;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub use bootstrap::{bootstrap_ci, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
pub use diversity::{avg_distinct_sampled, pair_from_index, sampled_pairs, symmetric_distinct};
pub use ndcg::{
    dcg_at_k, ideal_dcg, micro_average_ndcg, percent_over_random, random_baseline_ndcg, tie_aware_ndcg,
    tie_aware_ndcg_at_k, MicroAverage,
};
pub use popularity::{relative_popularity, relative_popularity_user};
pub use relevance::{build_relevance, Grading, RelevanceJudgments};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapSpec {
    pub fn with_seed(seed: u64) -> Self {
        BootstrapSpec {
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MetricValue<T> {
    pub point: T,
    /// Sample standard deviation across units.
    pub dispersion: T,
    pub ci_low: T,
    pub ci_high: T,
    pub n_units: usize,
}

impl<T: Real> MetricValue<T> {
    /// Mean, standard deviation and bootstrap interval of per-unit values.
    pub fn from_units(values: &[T], spec: BootstrapSpec) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewUsers { needed: 1, got: 0 });
        }
        let n = T::of_usize(values.len());
        let point = mean_of(values);
        let dispersion = if values.len() < 2 {
            T::zero()
        } else {
            let ss: T = values.iter().map(|&v| (v - point) * (v - point)).sum();
            (ss / (n - T::one())).sqrt()
        };
        let (ci_low, ci_high) = bootstrap_ci(values, spec.resamples, spec.level, spec.seed)?;
        Ok(MetricValue {
            point,
            dispersion,
            ci_low,
            ci_high,
            n_units: values.len(),
        })
    }
}

/// Arithmetic mean that returns the common value exactly for constant input.
pub(crate) fn mean_of<T: Real>(values: &[T]) -> T {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    let (lo, hi) = values.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let s: T = values.iter().copied().sum();
    (s / T::of_usize(values.len())).max(lo).min(hi)
}

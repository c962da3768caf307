use super::{BootstrapSpec, MetricValue};
use crate::data::PopularityTable;
use crate::recommend::RankedList;
use crate::{Error, Real, Result};

/// Units sold of the recommended items over units sold of the `k` most
/// popular items.
pub fn relative_popularity_user<T: Real>(list: &RankedList<T>, pop: &PopularityTable, k: usize) -> Result<T> {
    let denom = pop.top_k_total(k);
    if denom == 0 {
        return Err(Error::ZeroPopularity);
    }
    let num: u64 = list.items.iter().take(k).map(|i| pop.quantity(i)).sum();
    Ok(T::of(num as f64) / T::of(denom as f64))
}

/// Mean per-user relative popularity with dispersion and bootstrap interval.
pub fn relative_popularity<T: Real>(
    lists: &[RankedList<T>],
    pop: &PopularityTable,
    k: usize,
    spec: BootstrapSpec,
) -> Result<MetricValue<T>> {
    if lists.is_empty() {
        return Err(Error::TooFewUsers { needed: 1, got: 0 });
    }
    let values: Vec<T> = lists
        .iter()
        .map(|l| relative_popularity_user(l, pop, k))
        .collect::<Result<_>>()?;
    MetricValue::from_units(&values, spec)
}

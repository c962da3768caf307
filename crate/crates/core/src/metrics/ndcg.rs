use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::cmp_desc;
use crate::{Error, Real, Result};

#[inline]
fn discount<T: Real>(position: usize) -> T {
    // 1-based position i contributes 1 / log2(i + 1)
    T::one() / T::of_usize(position + 1).log2()
}

/// `Σ_{i=1..min(k,n)} rel_i / log2(i + 1)` for relevance in ranked order.
pub fn dcg_at_k<T: Real>(rels_in_rank_order: &[T], k: usize) -> T {
    rels_in_rank_order
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &r)| r * discount::<T>(i + 1))
        .sum()
}

/// DCG of the relevance values sorted descending.
pub fn ideal_dcg<T: Real>(rels: &[T], k: usize) -> T {
    let mut sorted = rels.to_vec();
    sorted.sort_by(|a, b| cmp_desc(*a, *b));
    dcg_at_k(&sorted, k)
}

/// Expected NDCG@k over all orderings of equally scored items.
///
/// `scores` and `rels` are aligned over the full candidate list. Items are
/// grouped by equal score; a group occupying positions `a..b` contributes its
/// mean relevance times the discounts of those positions that fall within `k`.
/// Returns `None` when every relevance is zero.
pub fn tie_aware_ndcg<T: Real>(scores: &[T], rels: &[T], k: usize) -> Option<T> {
    assert_eq!(scores.len(), rels.len(), "scores and relevance must be aligned");
    let ideal = ideal_dcg(rels, k);
    if !(ideal > T::zero()) {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_desc(scores[a], scores[b]));
    let mut dcg = T::zero();
    let mut start = 0;
    while start < order.len() && start < k {
        let mut end = start + 1;
        while end < order.len() && cmp_desc(scores[order[start]], scores[order[end]]).is_eq() {
            end += 1;
        }
        let group = &order[start..end];
        let rel_sum: T = group.iter().map(|&i| rels[i]).sum();
        if rel_sum > T::zero() {
            let mean = rel_sum / T::of_usize(group.len());
            let disc: T = (start + 1..=end.min(k)).map(discount::<T>).sum();
            dcg += mean * disc;
        }
        start = end;
    }
    Some((dcg / ideal).max(T::zero()).min(T::one()))
}

/// Map-based form: `scores` over the candidates, `rels` holding the positive
/// relevance of (some of) them.
pub fn tie_aware_ndcg_at_k<T: Real, S: AsRef<str>>(scores: &[(S, T)], rels: &BTreeMap<String, T>, k: usize) -> Option<T> {
    let s: Vec<T> = scores.iter().map(|(_, v)| *v).collect();
    let r: Vec<T> = scores
        .iter()
        .map(|(id, _)| rels.get(id.as_ref()).copied().unwrap_or_else(T::zero))
        .collect();
    tie_aware_ndcg(&s, &r, k)
}

/// Expected NDCG@k of a uniformly random ranking of the candidates: the
/// tie-aware value with every score equal.
pub fn random_baseline_ndcg<T: Real>(rels: &[T], k: usize) -> Option<T> {
    tie_aware_ndcg(&vec![T::zero(); rels.len()], rels, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MicroAverage<T> {
    pub mean: T,
    pub n_defined: usize,
    pub excluded: usize,
}

/// Mean over users with defined NDCG; undefined users are counted, not averaged.
pub fn micro_average_ndcg<T: Real>(per_user: &[Option<T>]) -> Result<MicroAverage<T>> {
    let defined: Vec<T> = per_user.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::AllUndefined);
    }
    Ok(MicroAverage {
        mean: super::mean_of(&defined),
        n_defined: defined.len(),
        excluded: per_user.len() - defined.len(),
    })
}

/// `100 · (value − baseline) / baseline`.
pub fn percent_over_random<T: Real>(value: T, baseline: T) -> T {
    T::of(100.0) * (value - baseline) / baseline
}

//! Top-k recommendation from the three strategies behind one [`Scorer`] trait.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::als::FactorModel;
use crate::data::PopularityTable;
use crate::forest::{FeatureJoin, FeatureValue, ForestModel};
use crate::scalar::cmp_desc;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    MP,
    CF,
    CB,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::MP, Algorithm::CF, Algorithm::CB];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::MP => "MP",
            Algorithm::CF => "CF",
            Algorithm::CB => "CB",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RankedList<T> {
    pub user_id: String,
    pub algorithm: Algorithm,
    pub items: Vec<String>,
    pub scores: Vec<T>,
}

impl<T> RankedList<T> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Indices of the `k` best entries: descending score, ties by ascending id.
fn top_indices<T: Real, S: AsRef<str>>(ids: &[S], scores: &[T], k: usize, skip: Option<&HashSet<usize>>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ids.len()).filter(|i| skip.is_none_or(|s| !s.contains(i))).collect();
    let cmp = |a: &usize, b: &usize| cmp_desc(scores[*a], scores[*b]).then_with(|| ids[*a].as_ref().cmp(ids[*b].as_ref()));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// The `k` highest-scoring items (fewer if there are fewer candidates).
pub fn top_k_select<T: Real, S: AsRef<str>>(scored: &[(S, T)], k: usize) -> Result<(Vec<String>, Vec<T>)> {
    if scored.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let ids: Vec<&str> = scored.iter().map(|(s, _)| s.as_ref()).collect();
    let scores: Vec<T> = scored.iter().map(|(_, v)| *v).collect();
    let top = top_indices(&ids, &scores, k, None);
    Ok((
        top.iter().map(|&i| ids[i].to_string()).collect(),
        top.iter().map(|&i| scores[i]).collect(),
    ))
}

/// Scores a fixed candidate list for one user at a time.
pub trait Scorer<T: Real>: Sync {
    fn algorithm(&self) -> Algorithm;

    fn candidates(&self) -> &[String];

    /// Scores aligned with [`Scorer::candidates`], or `None` if this strategy
    /// cannot serve the user.
    fn score(&self, user: &str) -> Result<Option<Vec<T>>>;

    /// Ranked list from precomputed scores; `exclude` holds candidate indices to drop.
    fn rank(&self, user: &str, scores: &[T], k: usize, exclude: Option<&HashSet<usize>>) -> RankedList<T> {
        let c = self.candidates();
        let top = top_indices(c, scores, k, exclude);
        RankedList {
            user_id: user.to_string(),
            algorithm: self.algorithm(),
            items: top.iter().map(|&i| c[i].clone()).collect(),
            scores: top.iter().map(|&i| scores[i]).collect(),
        }
    }
}

/// Units sold; identical for every user.
pub struct MostPopular<T> {
    candidates: Vec<String>,
    scores: Vec<T>,
}

impl<T: Real> MostPopular<T> {
    pub fn new(pop: &PopularityTable, candidates: &[String]) -> Self {
        MostPopular {
            candidates: candidates.to_vec(),
            scores: candidates.iter().map(|i| T::of(pop.quantity(i) as f64)).collect(),
        }
    }
}

impl<T: Real> Scorer<T> for MostPopular<T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::MP
    }

    fn candidates(&self) -> &[String] {
        &self.candidates
    }

    fn score(&self, _user: &str) -> Result<Option<Vec<T>>> {
        Ok(Some(self.scores.clone()))
    }
}

/// ALS dot products; users unseen in training are not scored.
pub struct CollaborativeFilter<'a, T> {
    model: &'a FactorModel<T>,
    candidates: Vec<String>,
    rows: Vec<usize>,
}

impl<'a, T: Real> CollaborativeFilter<'a, T> {
    pub fn new(model: &'a FactorModel<T>, candidates: &[String]) -> Result<Self> {
        let rows = candidates
            .iter()
            .map(|i| model.item_row(i).ok_or_else(|| Error::UnknownItem(i.clone())))
            .collect::<Result<_>>()?;
        Ok(CollaborativeFilter {
            model,
            candidates: candidates.to_vec(),
            rows,
        })
    }
}

impl<T: Real> Scorer<T> for CollaborativeFilter<'_, T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::CF
    }

    fn candidates(&self) -> &[String] {
        &self.candidates
    }

    fn score(&self, user: &str) -> Result<Option<Vec<T>>> {
        Ok(self
            .model
            .user_row(user)
            .map(|u| self.rows.iter().map(|&i| self.model.score(u, i)).collect()))
    }
}

/// Forest predictions over user and product attributes; serves any user
/// with features, including users new to the log.
pub struct ContentBased<'a, T> {
    model: &'a ForestModel<T>,
    join: &'a FeatureJoin,
    candidates: Vec<String>,
    item_parts: Vec<Vec<FeatureValue<T>>>,
}

impl<'a, T: Real> ContentBased<'a, T> {
    pub fn new(model: &'a ForestModel<T>, join: &'a FeatureJoin, candidates: &[String]) -> Result<Self> {
        if join.schema() != &model.schema {
            return Err(Error::SchemaMismatch("feature tables differ from the forest's training schema".into()));
        }
        let item_parts = candidates.iter().map(|i| join.item_part(i)).collect::<Result<_>>()?;
        Ok(ContentBased {
            model,
            join,
            candidates: candidates.to_vec(),
            item_parts,
        })
    }
}

impl<T: Real> Scorer<T> for ContentBased<'_, T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::CB
    }

    fn candidates(&self) -> &[String] {
        &self.candidates
    }

    fn score(&self, user: &str) -> Result<Option<Vec<T>>> {
        let mut row = self.join.user_part::<T>(user)?;
        let pu = row.len();
        let mut out = Vec::with_capacity(self.item_parts.len());
        for part in &self.item_parts {
            row.truncate(pu);
            row.extend_from_slice(part);
            out.push(self.model.predict_checked(&row));
        }
        Ok(Some(out))
    }
}

/// Lists for every scorable user, in the order of `users`, plus the users
/// the scorer could not serve.
pub fn recommend<T: Real, S: AsRef<str> + Sync>(
    scorer: &dyn Scorer<T>,
    users: &[S],
    k: usize,
) -> Result<(Vec<RankedList<T>>, Vec<String>)> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if scorer.candidates().is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let results: Vec<Option<RankedList<T>>> = users
        .par_iter()
        .map(|u| {
            let u = u.as_ref();
            Ok(scorer.score(u)?.map(|s| scorer.rank(u, &s, k, None)))
        })
        .collect::<Result<_>>()?;
    let mut lists = Vec::new();
    let mut uncovered = Vec::new();
    for (u, r) in users.iter().zip(results) {
        match r {
            Some(l) => lists.push(l),
            None => uncovered.push(u.as_ref().to_string()),
        }
    }
    Ok((lists, uncovered))
}

pub fn recommend_mp<T: Real, S: AsRef<str> + Sync>(
    pop: &PopularityTable,
    users: &[S],
    candidates: &[String],
    k: usize,
) -> Result<Vec<RankedList<T>>> {
    if pop.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(recommend(&MostPopular::<T>::new(pop, candidates), users, k)?.0)
}

pub struct CfRecommendations<T> {
    pub lists: Vec<RankedList<T>>,
    pub uncovered: Vec<String>,
}

pub fn recommend_cf<T: Real, S: AsRef<str> + Sync>(
    model: &FactorModel<T>,
    users: &[S],
    candidates: &[String],
    k: usize,
) -> Result<CfRecommendations<T>> {
    let (lists, uncovered) = recommend(&CollaborativeFilter::new(model, candidates)?, users, k)?;
    Ok(CfRecommendations { lists, uncovered })
}

pub fn recommend_cb<T: Real, S: AsRef<str> + Sync>(
    model: &ForestModel<T>,
    users: &[S],
    candidates: &[String],
    k: usize,
    features: &FeatureJoin,
) -> Result<Vec<RankedList<T>>> {
    Ok(recommend(&ContentBased::new(model, features, candidates)?, users, k)?.0)
}

pub fn write_jsonl<T: Real, W: Write>(lists: &[RankedList<T>], mut w: W) -> Result<()> {
    for l in lists {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n").map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

pub fn read_jsonl<T: Real, R: BufRead>(r: R) -> Result<Vec<RankedList<T>>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRecord { line: n + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRecord { line: n + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn selects_highest() {
        let (items, scores) = top_k_select(&[("A", 0.2), ("B", 0.9), ("C", 0.5)], 2).unwrap();
        assert_eq!(items, vec!["B", "C"]);
        assert_eq!(scores, vec![0.9, 0.5]);
    }

    #[test]
    fn ties_broken_by_id() {
        let (items, _) = top_k_select(&[("B", 0.5), ("A", 0.5)], 1).unwrap();
        assert_eq!(items, vec!["A"]);
    }

    #[test]
    fn truncates_to_candidates() {
        let (items, _) = top_k_select(&[("A", 1.0), ("B", 2.0), ("C", 3.0)], 5).unwrap();
        assert_eq!(items.len(), 3);
        assert!(matches!(top_k_select::<f64, &str>(&[], 3), Err(Error::EmptyCandidates)));
    }

    fn pop() -> PopularityTable {
        PopularityTable::from_quantities(BTreeMap::from([("A".into(), 5), ("B".into(), 3), ("C".into(), 9)]))
    }

    #[test]
    fn mp_same_list_for_everyone() {
        let cands: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let lists = recommend_mp::<f64, _>(&pop(), &["u1", "u2"], &cands, 2).unwrap();
        assert_eq!(lists[0].items, vec!["C", "A"]);
        assert_eq!(lists[0].items, lists[1].items);
        assert_eq!(lists[0].scores, vec![9.0, 5.0]);
    }

    #[test]
    fn exclusion_skips_candidates() {
        let cands: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let mp = MostPopular::<f64>::new(&pop(), &cands);
        let s = mp.score("u").unwrap().unwrap();
        let skip = HashSet::from([2usize]);
        assert_eq!(mp.rank("u", &s, 2, Some(&skip)).items, vec!["A", "B"]);
    }

    #[test]
    fn cf_leaves_new_users_uncovered() {
        let model = FactorModel::new(
            vec!["u1".into(), "u2".into()],
            vec!["A".into(), "B".into()],
            1,
            vec![1.0, 1.0],
            vec![0.3, 0.8],
            Default::default(),
            vec![],
        )
        .unwrap();
        let cands: Vec<String> = vec!["A".into(), "B".into()];
        let r = recommend_cf(&model, &["new", "u1", "u2"], &cands, 5).unwrap();
        assert_eq!(r.uncovered, vec!["new"]);
        assert_eq!(r.lists.len(), 2);
        assert_eq!(r.lists[0].items, vec!["B", "A"]);
        assert_eq!(r.lists[0].items, r.lists[1].items);
    }

    #[test]
    fn jsonl_round_trip() {
        let cands: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let lists = recommend_mp::<f64, _>(&pop(), &["u1"], &cands, 3).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&lists, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"user_id\":\"u1\",\"algorithm\":\"MP\",\"items\":[\"C\",\"A\",\"B\"]"));
        assert_eq!(read_jsonl::<f64, _>(buf.as_slice()).unwrap(), lists);
    }
}

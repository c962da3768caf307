use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Column, FeatureValue, EXHAUSTIVE_LEVELS};
use crate::rng::Rng;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[serde(bound = "T: Real")]
pub enum SplitRule<T> {
    /// Numeric: go left when `x <= threshold`.
    Threshold(T),
    /// Categorical: go left when the level code is in this sorted set.
    Levels(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Split<T> {
    pub feature: usize,
    pub rule: SplitRule<T>,
    pub left: usize,
    pub right: usize,
}

/// A tree node with the bootstrap-sample statistics it was fit on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Node<T> {
    pub n: usize,
    pub value: T,
    pub variance: T,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<Split<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, row: &[FeatureValue<T>]) -> T {
        let mut k = 0;
        loop {
            let node = &self.nodes[k];
            let Some(split) = &node.split else {
                return node.value;
            };
            let left = match (&split.rule, row[split.feature]) {
                (SplitRule::Threshold(t), FeatureValue::Num(x)) => x <= *t,
                (SplitRule::Levels(set), FeatureValue::Cat(c)) => set.binary_search(&c).is_ok(),
                _ => false,
            };
            k = if left { split.left } else { split.right };
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node<T>> {
        self.nodes.iter().filter(|n| n.split.is_none())
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], k: usize) -> usize {
            match &nodes[k].split {
                None => 0,
                Some(s) => 1 + go(nodes, s.left).max(go(nodes, s.right)),
            }
        }
        go(&self.nodes, 0)
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub mtry: usize,
}

struct Candidate<T> {
    gain: T,
    feature: usize,
    rule: SplitRule<T>,
}

/// Grows one tree on a bootstrap resample. Numeric features are presorted
/// once; each node's positions occupy the same range `[lo, hi)` in `members`
/// and in every presorted list, and splits stably partition all of them.
pub(crate) struct TreeBuilder<'a, T> {
    columns: &'a [Column<T>],
    n_levels: &'a [usize],
    params: &'a TreeParams,
    rng: Rng,
    sample_rows: Vec<u32>,
    y: Vec<T>,
    members: Vec<u32>,
    sorted: Vec<Option<Vec<u32>>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    level_sum: Vec<T>,
    level_count: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<'a, T: Real> TreeBuilder<'a, T> {
    pub fn new(
        columns: &'a [Column<T>],
        n_levels: &'a [usize],
        labels: &[T],
        params: &'a TreeParams,
        mut rng: Rng,
    ) -> Self {
        let n = labels.len();
        let sample_rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
        let y: Vec<T> = sample_rows.iter().map(|&r| labels[r as usize]).collect();
        let sorted = columns
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => {
                    let mut pos: Vec<u32> = (0..n as u32).collect();
                    pos.sort_by(|&a, &b| {
                        let (va, vb) = (v[sample_rows[a as usize] as usize], v[sample_rows[b as usize] as usize]);
                        va.partial_cmp(&vb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
                    });
                    Some(pos)
                }
                Column::Categorical(_) => None,
            })
            .collect();
        let max_levels = n_levels.iter().copied().max().unwrap_or(0);
        TreeBuilder {
            columns,
            n_levels,
            params,
            rng,
            sample_rows,
            y,
            members: (0..n as u32).collect(),
            sorted,
            goes_left: vec![false; n],
            scratch: Vec::with_capacity(n),
            level_sum: vec![T::zero(); max_levels],
            level_count: vec![0; max_levels],
            nodes: Vec::new(),
        }
    }

    pub fn build(mut self) -> Tree<T> {
        let n = self.members.len();
        self.grow(0, n, 0);
        Tree { nodes: self.nodes }
    }

    fn numeric(&self, f: usize, pos: u32) -> T {
        match &self.columns[f] {
            Column::Numeric(v) => v[self.sample_rows[pos as usize] as usize],
            Column::Categorical(_) => unreachable!(),
        }
    }

    fn code(&self, f: usize, pos: u32) -> u32 {
        match &self.columns[f] {
            Column::Categorical(v) => v[self.sample_rows[pos as usize] as usize],
            Column::Numeric(_) => unreachable!(),
        }
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let n = hi - lo;
        let nt = T::of_usize(n);
        let (mut sum, mut min, mut max) = (T::zero(), T::infinity(), T::neg_infinity());
        for &p in &self.members[lo..hi] {
            let v = self.y[p as usize];
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        let constant = min == max;
        let mean = if constant { min } else { (sum / nt).max(min).min(max) };
        let sse = if constant {
            T::zero()
        } else {
            self.members[lo..hi]
                .iter()
                .map(|&p| {
                    let d = self.y[p as usize] - mean;
                    d * d
                })
                .sum()
        };
        let id = self.nodes.len();
        self.nodes.push(Node {
            n,
            value: mean,
            variance: sse / nt,
            split: None,
        });

        let p = self.params;
        if constant || depth >= p.max_depth || n < 2 * p.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(lo, hi, sum, sse) else {
            return id;
        };

        // mark and partition
        let mut n_left = 0;
        for k in lo..hi {
            let pos = self.members[k];
            let left = match &best.rule {
                SplitRule::Threshold(t) => self.numeric(best.feature, pos) <= *t,
                SplitRule::Levels(set) => set.binary_search(&self.code(best.feature, pos)).is_ok(),
            };
            self.goes_left[pos as usize] = left;
            n_left += left as usize;
        }
        debug_assert!(n_left >= p.min_leaf && n - n_left >= p.min_leaf);
        partition(&mut self.members[lo..hi], &self.goes_left, &mut self.scratch);
        for list in self.sorted.iter_mut().flatten() {
            partition(&mut list[lo..hi], &self.goes_left, &mut self.scratch);
        }

        let mid = lo + n_left;
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            rule: best.rule,
            left,
            right,
        });
        id
    }

    fn best_split(&mut self, lo: usize, hi: usize, sum: T, sse: T) -> Option<Candidate<T>> {
        let n_features = self.columns.len();
        let chosen = index::sample(&mut self.rng, n_features, self.params.mtry.min(n_features));
        let n = hi - lo;
        let parent = sum * sum / T::of_usize(n);
        let mut best: Option<Candidate<T>> = None;
        for f in chosen.iter() {
            let cand = if self.sorted[f].is_some() {
                self.best_numeric(f, lo, hi, sum, parent)
            } else {
                self.best_categorical(f, lo, hi, sum, parent)
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        // reject gains indistinguishable from rounding noise
        let tol = T::epsilon() * T::of(64.0) * sse;
        best.filter(|b| b.gain > tol && b.gain > T::zero())
    }

    fn best_numeric(&self, f: usize, lo: usize, hi: usize, sum: T, parent: T) -> Option<Candidate<T>> {
        let list = self.sorted[f].as_ref().unwrap();
        let min_leaf = self.params.min_leaf;
        let n = hi - lo;
        let mut left_sum = T::zero();
        let mut best: Option<(T, T)> = None;
        for k in 0..n - 1 {
            let pos = list[lo + k];
            left_sum += self.y[pos as usize];
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf {
                continue;
            }
            if nr < min_leaf {
                break;
            }
            let v = self.numeric(f, pos);
            let next = self.numeric(f, list[lo + k + 1]);
            if !(v < next) {
                continue;
            }
            let right_sum = sum - left_sum;
            let gain = left_sum * left_sum / T::of_usize(nl) + right_sum * right_sum / T::of_usize(nr) - parent;
            if best.is_none_or(|(g, _)| gain > g) {
                let mut t = v + (next - v) / T::of(2.0);
                if !(t < next) {
                    t = v;
                }
                best = Some((gain, t));
            }
        }
        best.map(|(gain, t)| Candidate {
            gain,
            feature: f,
            rule: SplitRule::Threshold(t),
        })
    }

    fn best_categorical(&mut self, f: usize, lo: usize, hi: usize, sum: T, parent: T) -> Option<Candidate<T>> {
        let levels = self.n_levels[f];
        self.level_sum[..levels].iter_mut().for_each(|s| *s = T::zero());
        self.level_count[..levels].iter_mut().for_each(|c| *c = 0);
        for k in lo..hi {
            let pos = self.members[k];
            let c = self.code(f, pos) as usize;
            self.level_sum[c] += self.y[pos as usize];
            self.level_count[c] += 1;
        }
        let present: Vec<u32> = (0..levels as u32).filter(|&c| self.level_count[c as usize] > 0).collect();
        if present.len() < 2 {
            return None;
        }
        let n = hi - lo;
        let min_leaf = self.params.min_leaf;
        let eval = |left_sum: T, nl: usize| -> Option<T> {
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                return None;
            }
            let right_sum = sum - left_sum;
            Some(left_sum * left_sum / T::of_usize(nl) + right_sum * right_sum / T::of_usize(nr) - parent)
        };
        let mut best: Option<(T, Vec<u32>)> = None;
        if present.len() <= EXHAUSTIVE_LEVELS {
            // the last present level stays right, so each partition is visited once
            let l = present.len();
            for mask in 1u32..(1 << (l - 1)) {
                let (mut ls, mut nl) = (T::zero(), 0);
                for (b, &c) in present.iter().enumerate().take(l - 1) {
                    if mask & (1 << b) != 0 {
                        ls += self.level_sum[c as usize];
                        nl += self.level_count[c as usize];
                    }
                }
                if let Some(g) = eval(ls, nl) {
                    if best.as_ref().is_none_or(|(bg, _)| g > *bg) {
                        let set = present
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask & (1 << b) != 0)
                            .map(|(_, &c)| c)
                            .collect();
                        best = Some((g, set));
                    }
                }
            }
        } else {
            let mut order = present.clone();
            let mean = |c: u32| self.level_sum[c as usize] / T::of_usize(self.level_count[c as usize]);
            order.sort_by(|&a, &b| mean(a).partial_cmp(&mean(b)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            let (mut ls, mut nl) = (T::zero(), 0);
            for k in 0..order.len() - 1 {
                let c = order[k] as usize;
                ls += self.level_sum[c];
                nl += self.level_count[c];
                if let Some(g) = eval(ls, nl) {
                    if best.as_ref().is_none_or(|(bg, _)| g > *bg) {
                        let mut set = order[..=k].to_vec();
                        set.sort_unstable();
                        best = Some((g, set));
                    }
                }
            }
        }
        best.map(|(gain, set)| Candidate {
            gain,
            feature: f,
            rule: SplitRule::Levels(set),
        })
    }
}

/// Stable partition of `slice` by `goes_left[position]`.
fn partition(slice: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut w = 0;
    for k in 0..slice.len() {
        let p = slice[k];
        if goes_left[p as usize] {
            slice[w] = p;
            w += 1;
        } else {
            scratch.push(p);
        }
    }
    slice[w..].copy_from_slice(scratch);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn params(max_depth: usize, min_leaf: usize, mtry: usize) -> TreeParams {
        TreeParams { max_depth, min_leaf, mtry }
    }

    #[test]
    fn stable_partition() {
        let mut s = vec![5, 1, 4, 2, 3];
        let left = vec![false, true, false, true, false, true];
        let mut scratch = Vec::new();
        partition(&mut s, &left, &mut scratch);
        assert_eq!(s, vec![5, 1, 3, 4, 2]);
    }

    #[test]
    fn learns_categorical_grouping() {
        // levels {0, 2} have label 1, levels {1, 3} label 0
        let codes: Vec<u32> = (0..200).map(|k| k % 4).collect();
        let labels: Vec<f64> = codes.iter().map(|&c| if c % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let cols = vec![Column::Categorical(codes)];
        let p = params(1, 1, 1);
        let tree = TreeBuilder::new(&cols, &[4], &labels, &p, rng::seeded(1)).build();
        let split = tree.nodes[0].split.as_ref().unwrap();
        match &split.rule {
            SplitRule::Levels(set) => assert!(set == &vec![0, 2] || set == &vec![1, 3]),
            _ => panic!("expected level split"),
        }
        assert_eq!(tree.predict(&[FeatureValue::Cat(2)]), 1.0);
        assert_eq!(tree.predict(&[FeatureValue::Cat(3)]), 0.0);
    }

    #[test]
    fn many_levels_use_mean_ordering() {
        let levels = 20;
        let codes: Vec<u32> = (0..400).map(|k| k % levels).collect();
        let labels: Vec<f64> = codes.iter().map(|&c| if c % 3 == 0 { 2.0 } else { 0.0 }).collect();
        let cols = vec![Column::Categorical(codes)];
        let p = params(1, 1, 1);
        let tree = TreeBuilder::new(&cols, &[levels as usize], &labels, &p, rng::seeded(2)).build();
        for c in 0..levels {
            let want = if c % 3 == 0 { 2.0 } else { 0.0 };
            assert_eq!(tree.predict(&[FeatureValue::Cat(c)]), want, "level {c}");
        }
    }

    #[test]
    fn respects_depth_and_leaf_size() {
        let xs: Vec<f64> = (0..300).map(|k| (k as f64 * 0.618).fract()).collect();
        let labels: Vec<f64> = xs.iter().map(|x| (x * 10.0).sin()).collect();
        let cols = vec![Column::Numeric(xs)];
        let p = params(4, 7, 1);
        let tree = TreeBuilder::new(&cols, &[0], &labels, &p, rng::seeded(3)).build();
        assert!(tree.depth() <= 4);
        assert!(tree.leaves().all(|l| l.n >= 7));
    }
}

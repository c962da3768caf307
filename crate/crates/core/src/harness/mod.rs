//! End-to-end evaluation: split, segment, train, recommend, score, report.

mod config;
mod manifest;
mod render;
mod shorthead;

use std::collections::{HashMap, HashSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::als::{build_confidence, fit_als, FactorModel};
use crate::data::{dataset_stats, popularity_table, segment_users, temporal_split, DatasetStats};
use crate::error::StageExt;
use crate::forest::{augment_labels, fit_forest, FeatureJoin, ForestModel};
use crate::metrics::{
    avg_distinct_sampled, build_relevance, mean_of, percent_over_random, random_baseline_ndcg, relative_popularity,
    tie_aware_ndcg, BootstrapSpec, MetricValue, RelevanceJudgments,
};
use crate::recommend::{CollaborativeFilter, ContentBased, MostPopular, Scorer};
use crate::{rng, Algorithm, Dataset, Error, PopularityTable, RankedList, Result, Segment, SegmentAssignment};

pub use config::EvalConfig;
pub use manifest::{digest_file, DerivedSeeds, InputDigest, Manifest};
pub use render::{format_mean_sd, format_ndcg, read_report, render_report, ReportFormat};
pub use shorthead::{short_head_curve, ShortHeadCurve};

/// Row blocks of the report: the three segments, then all test users pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSegment {
    SaleUsers,
    ViewUsers,
    NewUsers,
    Average,
}

impl RowSegment {
    pub const ALL: [RowSegment; 4] = [
        RowSegment::SaleUsers,
        RowSegment::ViewUsers,
        RowSegment::NewUsers,
        RowSegment::Average,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RowSegment::SaleUsers => "Sale Users",
            RowSegment::ViewUsers => "View Users",
            RowSegment::NewUsers => "New Users",
            RowSegment::Average => "Average",
        }
    }

    fn segment(self) -> Option<Segment> {
        match self {
            RowSegment::SaleUsers => Some(Segment::SaleUser),
            RowSegment::ViewUsers => Some(Segment::ViewUser),
            RowSegment::NewUsers => Some(Segment::NewUser),
            RowSegment::Average => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell<V> {
    Value(V),
    NotAvailable,
}

impl<V> Cell<V> {
    pub fn value(&self) -> Option<&V> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::NotAvailable => None,
        }
    }

    pub fn is_available(&self) -> bool {
        matches!(self, Cell::Value(_))
    }
}

/// Micro-averaged NDCG with the random-ranking baseline over the same users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdcgValue {
    pub value: MetricValue<f64>,
    pub baseline: f64,
    pub percent_over_random: f64,
    /// Users with no relevant test items.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmCells {
    pub algorithm: Algorithm,
    pub ndcg: Cell<NdcgValue>,
    pub ad: Cell<MetricValue<f64>>,
    pub rp: Cell<MetricValue<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub segment: RowSegment,
    pub n_users: usize,
    pub cells: Vec<AlgorithmCells>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub algorithm: Algorithm,
    pub covered: usize,
    pub uncovered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub k: usize,
    pub boundary: DateTime<Utc>,
    pub stats: DatasetStats,
    pub coverage: Vec<Coverage>,
    pub rows: Vec<ReportRow>,
    pub short_head: ShortHeadCurve,
}

impl EvaluationReport {
    pub fn row(&self, seg: RowSegment) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.segment == seg)
    }

    pub fn cells(&self, seg: RowSegment, alg: Algorithm) -> Option<&AlgorithmCells> {
        self.row(seg)?.cells.iter().find(|c| c.algorithm == alg)
    }

    pub fn coverage_of(&self, alg: Algorithm) -> Option<&Coverage> {
        self.coverage.iter().find(|c| c.algorithm == alg)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.coverage.iter().map(|c| c.algorithm).collect()
    }
}

/// Per covered user: the top-k list and NDCG against its random baseline.
struct Outcome {
    list: RankedList<f64>,
    ndcg: Option<(f64, f64)>,
}

/// Trained models for one split.
pub struct TrainedModels {
    pub als: Option<FactorModel<f64>>,
    pub forest: Option<ForestModel<f64>>,
}

/// Trains what the enabled algorithms need on the training period.
pub fn train_models(cfg: &EvalConfig, train: &Dataset) -> Result<TrainedModels> {
    let seeds = DerivedSeeds::of(cfg.seed);
    let need_cb = cfg.enabled(Algorithm::CB);
    if !(need_cb || cfg.enabled(Algorithm::CF)) {
        return Ok(TrainedModels { als: None, forest: None });
    }
    let als_cfg = crate::als::AlsConfig {
        seed: seeds.als,
        ..cfg.als.clone()
    };
    let cm = build_confidence::<f64>(train, &als_cfg).stage("train:als")?;
    let als = fit_als(&cm, &als_cfg).stage("train:als")?;
    log::info!("als: {} users × {} items, final loss {:?}", cm.n_users(), cm.n_items(), als.loss_trace().last());
    let forest = if need_cb {
        let forest_cfg = crate::forest::ForestConfig {
            seed: seeds.forest,
            ..cfg.forest.clone()
        };
        let table = augment_labels(train, &cm, &als, &forest_cfg).stage("train:forest")?;
        let model = fit_forest(&table, &forest_cfg).stage("train:forest")?;
        log::info!("forest: {} trees on {} rows", forest_cfg.n_trees, table.len());
        Some(model)
    } else {
        None
    };
    Ok(TrainedModels { als: Some(als), forest })
}

/// A report plus the top-k lists it was computed from, per algorithm.
pub struct EvaluationRun {
    pub report: EvaluationReport,
    pub lists: Vec<(Algorithm, Vec<RankedList<f64>>)>,
}

/// Runs the whole pipeline on `data`. Results depend only on `cfg` and the
/// data, not on the thread count.
pub fn run_evaluation(cfg: &EvalConfig, data: &Dataset) -> Result<EvaluationReport> {
    Ok(run_evaluation_detailed(cfg, data)?.report)
}

pub fn run_evaluation_detailed(cfg: &EvalConfig, data: &Dataset) -> Result<EvaluationRun> {
    cfg.validate().stage("config")?;
    in_pool(cfg.threads, || evaluate(cfg, data))
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
            .stage("config")?
            .install(f),
        None => f(),
    }
}

fn evaluate(cfg: &EvalConfig, data: &Dataset) -> Result<EvaluationRun> {
    let boundary = cfg.resolve_boundary(data).stage("split")?;
    let split = temporal_split(data, boundary);
    if split.train.is_empty() {
        return Err(Error::EmptyTraining).stage("split");
    }
    if split.test.is_empty() {
        return Err(Error::TooFewUsers { needed: 1, got: 0 }).stage("split");
    }
    let seg = segment_users(&split);
    let stats = dataset_stats(&split, &seg);
    let candidates: Vec<String> = split.train.items().iter().cloned().collect();
    let cand_set: HashSet<&str> = candidates.iter().map(String::as_str).collect();
    let pop = popularity_table(&split.train);
    let relevance: RelevanceJudgments<f64> = build_relevance(&split.test, &cand_set, cfg.grading);
    let test_users: Vec<&str> = seg.mapping.keys().map(String::as_str).collect();

    let models = train_models(cfg, &split.train)?;
    let join = FeatureJoin::new(&data.user_features, &data.item_features);
    let purchased = if cfg.exclude_purchased {
        Some(purchased_candidates(&split.train, &candidates))
    } else {
        None
    };

    let mut results: Vec<(Algorithm, Vec<Option<Outcome>>)> = Vec::new();
    for alg in Algorithm::ALL.into_iter().filter(|a| cfg.enabled(*a)) {
        let stage = match alg {
            Algorithm::MP => "recommend:MP",
            Algorithm::CF => "recommend:CF",
            Algorithm::CB => "recommend:CB",
        };
        let scorer: Box<dyn Scorer<f64> + '_> = match alg {
            Algorithm::MP => Box::new(MostPopular::<f64>::new(&pop, &candidates)),
            Algorithm::CF => Box::new(CollaborativeFilter::new(models.als.as_ref().expect("trained"), &candidates).stage(stage)?),
            Algorithm::CB => Box::new(
                ContentBased::new(models.forest.as_ref().expect("trained"), &join, &candidates).stage(stage)?,
            ),
        };
        let outcomes = score_users(scorer.as_ref(), &test_users, &relevance, cfg.k, purchased.as_ref()).stage(stage)?;
        results.push((alg, outcomes));
    }

    let coverage = results
        .iter()
        .map(|(alg, out)| {
            let covered = out.iter().filter(|o| o.is_some()).count();
            Coverage {
                algorithm: *alg,
                covered,
                uncovered: out.len() - covered,
                total: out.len(),
            }
        })
        .collect();

    let rows = RowSegment::ALL
        .iter()
        .enumerate()
        .map(|(ri, &row)| build_row(cfg, row, ri as u64, &seg, &test_users, &results, &pop))
        .collect::<Result<Vec<_>>>()
        .stage("metrics")?;

    let short_head = short_head_curve(&popularity_table(data)).stage("short-head")?;
    let report = EvaluationReport {
        k: cfg.k,
        boundary,
        stats,
        coverage,
        rows,
        short_head,
    };
    let lists = results
        .into_iter()
        .map(|(alg, out)| (alg, out.into_iter().flatten().map(|o| o.list).collect()))
        .collect();
    Ok(EvaluationRun { report, lists })
}

fn purchased_candidates(train: &Dataset, candidates: &[String]) -> HashMap<String, HashSet<usize>> {
    let index: HashMap<&str, usize> = candidates.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut out: HashMap<String, HashSet<usize>> = HashMap::new();
    for e in train.events().iter().filter(|e| e.is_sale()) {
        if let Some(&i) = index.get(e.item_id.as_str()) {
            out.entry(e.user_id.clone()).or_default().insert(i);
        }
    }
    out
}

fn score_users(
    scorer: &dyn Scorer<f64>,
    users: &[&str],
    relevance: &RelevanceJudgments<f64>,
    k: usize,
    purchased: Option<&HashMap<String, HashSet<usize>>>,
) -> Result<Vec<Option<Outcome>>> {
    let candidates = scorer.candidates();
    users
        .par_iter()
        .map(|&u| {
            let Some(scores) = scorer.score(u)? else {
                return Ok(None);
            };
            let exclude = purchased.and_then(|p| p.get(u));
            let list = scorer.rank(u, &scores, k, exclude);
            let rels = relevance.aligned(u, candidates);
            let ndcg = match exclude {
                None => ndcg_pair(&scores, &rels, k),
                Some(ex) => {
                    let keep: Vec<usize> = (0..scores.len()).filter(|i| !ex.contains(i)).collect();
                    let s: Vec<f64> = keep.iter().map(|&i| scores[i]).collect();
                    let r: Vec<f64> = keep.iter().map(|&i| rels[i]).collect();
                    ndcg_pair(&s, &r, k)
                }
            };
            Ok(Some(Outcome { list, ndcg }))
        })
        .collect()
}

fn ndcg_pair(scores: &[f64], rels: &[f64], k: usize) -> Option<(f64, f64)> {
    Some((tie_aware_ndcg(scores, rels, k)?, random_baseline_ndcg(rels, k)?))
}

const METRIC_NDCG: u64 = 0;
const METRIC_AD: u64 = 1;
const METRIC_RP: u64 = 2;

fn cell_spec(cfg: &EvalConfig, row: u64, alg: Algorithm, metric: u64) -> BootstrapSpec {
    let a = Algorithm::ALL.iter().position(|x| *x == alg).expect("known") as u64;
    BootstrapSpec {
        resamples: cfg.bootstrap_resamples,
        level: cfg.ci_level,
        seed: rng::derive_seed(cfg.seed, 0x100 + row * 16 + a * 4 + metric),
    }
}

fn build_row(
    cfg: &EvalConfig,
    row: RowSegment,
    ri: u64,
    seg: &SegmentAssignment,
    test_users: &[&str],
    results: &[(Algorithm, Vec<Option<Outcome>>)],
    pop: &PopularityTable,
) -> Result<ReportRow> {
    let members: Vec<usize> = test_users
        .iter()
        .enumerate()
        .filter(|(_, u)| row.segment().is_none_or(|s| seg.get(u) == Some(s)))
        .map(|(i, _)| i)
        .collect();
    let mut cells = Vec::new();
    for (alg, outcomes) in results {
        let alg = *alg;
        if alg == Algorithm::CF && matches!(row, RowSegment::NewUsers | RowSegment::Average) {
            cells.push(AlgorithmCells {
                algorithm: alg,
                ndcg: Cell::NotAvailable,
                ad: Cell::NotAvailable,
                rp: Cell::NotAvailable,
            });
            continue;
        }
        let covered: Vec<&Outcome> = members.iter().filter_map(|&i| outcomes[i].as_ref()).collect();
        let defined: Vec<(f64, f64)> = covered.iter().filter_map(|o| o.ndcg).collect();
        let ndcg = if defined.is_empty() {
            Cell::NotAvailable
        } else {
            let values: Vec<f64> = defined.iter().map(|d| d.0).collect();
            let baselines: Vec<f64> = defined.iter().map(|d| d.1).collect();
            let value = MetricValue::from_units(&values, cell_spec(cfg, ri, alg, METRIC_NDCG))?;
            let baseline = mean_of(&baselines);
            Cell::Value(NdcgValue {
                percent_over_random: percent_over_random(value.point, baseline),
                value,
                baseline,
                excluded: covered.len() - defined.len(),
            })
        };
        let lists: Vec<RankedList<f64>> = covered.iter().map(|o| o.list.clone()).collect();
        let ad = if lists.len() < 2 {
            Cell::NotAvailable
        } else {
            Cell::Value(avg_distinct_sampled(&lists, cfg.k, cell_spec(cfg, ri, alg, METRIC_AD))?)
        };
        let rp = if lists.is_empty() {
            Cell::NotAvailable
        } else {
            Cell::Value(relative_popularity(&lists, pop, cfg.k, cell_spec(cfg, ri, alg, METRIC_RP))?)
        };
        cells.push(AlgorithmCells { algorithm: alg, ndcg, ad, rp });
    }
    Ok(ReportRow {
        segment: row,
        n_users: members.len(),
        cells,
    })
}

//! Offline evaluation of implicit-feedback recommenders.
//!
//! The crate covers the whole offline loop: ingesting timestamped sale/view
//! logs, splitting them in time, segmenting test users by their training
//! history, training three recommenders (most-popular, implicit ALS and an
//! ALS-augmented random forest over user and product attributes), and scoring
//! them with tie-aware NDCG, average-distinct and relative-popularity metrics.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`). The aliases at the
//! bottom of this file fix the scalar to `f64`, which is what the evaluation
//! harness uses.

pub mod als;
pub mod data;
pub mod error;
pub mod forest;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod recommend;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub use data::{
    Dataset, FeatureTable, InteractionEvent, InteractionKind, PopularityTable, Segment,
    SegmentAssignment, TemporalSplit,
};
pub use harness::{EvalConfig, EvaluationReport};
pub use recommend::{Algorithm, RankedList};

pub type ConfidenceMatrix = als::ConfidenceMatrix<f64>;
pub type FactorModel = als::FactorModel<f64>;
pub type AugmentedTable = forest::AugmentedTable<f64>;
pub type ForestModel = forest::ForestModel<f64>;
pub type MetricValue = metrics::MetricValue<f64>;
pub type RelevanceJudgments = metrics::RelevanceJudgments<f64>;

pub type ConfidenceMatrixF32 = als::ConfidenceMatrix<f32>;
pub type FactorModelF32 = als::FactorModel<f32>;
pub type ForestModelF32 = forest::ForestModel<f32>;

//! Implicit-feedback matrix factorization by alternating least squares.
//!
//! Each observed (user, item) pair gets a rating `r` (the sale weight if the
//! pair was ever bought, 1 if only viewed) and a confidence `c = 1 + α·r`.
//! Every other cell has preference 0 and confidence 1. Fitting alternates
//! exact weighted ridge solves for all user rows and then all item rows.

mod confidence;
mod model;
mod solve;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use confidence::{build_confidence, ConfidenceMatrix};
pub use model::{predict_scores, FactorModel};
pub use solve::{fit_als, objective, solve_row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlsConfig {
    pub factors: usize,
    pub regularization: f64,
    pub alpha: f64,
    pub sale_weight: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            factors: 32,
            regularization: 0.1,
            alpha: 40.0,
            sale_weight: 5.0,
            iterations: 15,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("als: {m}")));
        if self.factors == 0 {
            return bad("factors must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        for (name, v) in [
            ("regularization", self.regularization),
            ("alpha", self.alpha),
            ("sale_weight", self.sale_weight),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

//! Seeded synthetic retailer: sparse sale/view logs over a monthly window,
//! a long-tailed item popularity, exact test-segment proportions, and user /
//! item attributes that are noisy readouts of the latent preference vectors.

use chrono::{DateTime, Months, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, FeatureColumn, PeriodStats};
use crate::rng::{self, Rng};
use crate::{Dataset, Error, FeatureTable, InteractionEvent, Result};

/// Shares of test users per segment; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentTargets {
    pub new: f64,
    pub view: f64,
    pub sale: f64,
}

impl Default for SegmentTargets {
    fn default() -> Self {
        SegmentTargets {
            new: 0.70,
            view: 0.22,
            sale: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub months: u32,
    /// Months before the train/test boundary.
    pub boundary_month: u32,
    /// Zipf exponent of base item popularity; 0 is uniform.
    pub popularity_skew: f64,
    /// Minimum unobserved share of the training user×item matrix.
    pub target_sparsity: f64,
    pub segment_targets: SegmentTargets,
    pub latent_dim: usize,
    pub seed: u64,
    /// Share of users active in the test period.
    pub test_user_fraction: f64,
    /// Mean views per active user per period (at least one).
    pub views_per_user: f64,
    /// Weight of latent affinity in item choice and purchase.
    pub affinity_strength: f64,
    /// Correlation between observable features and their latent source.
    pub feature_correlation: f64,
    /// Purchase log-odds of a view at zero affinity.
    pub sale_logit: f64,
    /// Per user and period, chance of one extra purchase without a view.
    pub direct_sale_rate: f64,
    pub start: DateTime<Utc>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 5000,
            n_items: 400,
            months: 12,
            boundary_month: 8,
            popularity_skew: 1.0,
            target_sparsity: 0.99,
            segment_targets: SegmentTargets::default(),
            latent_dim: 4,
            seed: 0,
            test_user_fraction: 0.5,
            views_per_user: 2.0,
            affinity_strength: 1.5,
            feature_correlation: 0.8,
            sale_logit: -2.0,
            direct_sale_rate: 0.05,
            start: Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(),
        }
    }
}

impl SynthConfig {
    pub fn boundary(&self) -> DateTime<Utc> {
        self.start + Months::new(self.boundary_month)
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + Months::new(self.months)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("synth: {m}")));
        if self.n_users < 2 || self.n_items < 2 {
            return bad("need at least 2 users and 2 items".into());
        }
        if !(self.boundary_month > 0 && self.boundary_month < self.months) {
            return bad(format!(
                "boundary_month {} must lie strictly inside 1..{}",
                self.boundary_month, self.months
            ));
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return bad("popularity_skew must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.target_sparsity) {
            return bad("target_sparsity must be in [0, 1)".into());
        }
        let t = self.segment_targets;
        if [t.new, t.view, t.sale].iter().any(|p| !(*p >= 0.0)) || (t.new + t.view + t.sale - 1.0).abs() > 1e-9 {
            return bad("segment_targets must be non-negative and sum to 1".into());
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive".into());
        }
        if !(self.test_user_fraction > 0.0 && self.test_user_fraction <= 1.0) {
            return bad("test_user_fraction must be in (0, 1]".into());
        }
        if !(self.views_per_user >= 1.0 && self.views_per_user.is_finite()) {
            return bad("views_per_user must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.feature_correlation) {
            return bad("feature_correlation must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.direct_sale_rate) {
            return bad("direct_sale_rate must be in [0, 1]".into());
        }
        if !(self.affinity_strength.is_finite() && self.sale_logit.is_finite()) {
            return bad("affinity_strength and sale_logit must be finite".into());
        }
        Ok(())
    }

    /// Exact role counts (new, view-returning, sale-returning, train-only).
    pub fn role_counts(&self) -> [usize; 4] {
        let n_test = ((self.test_user_fraction * self.n_users as f64).round() as usize).clamp(1, self.n_users);
        let n_new = (self.segment_targets.new * n_test as f64).round() as usize;
        let n_sale = ((self.segment_targets.sale * n_test as f64).round() as usize).min(n_test - n_new.min(n_test));
        let n_new = n_new.min(n_test);
        let n_view = n_test - n_new - n_sale;
        [n_new, n_view, n_sale, self.n_users - n_test]
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    New,
    ViewReturning,
    SaleReturning,
    TrainOnly,
}

const BRANDS: usize = 5;
const SALE_QTY_EXTRA: f64 = 0.2;

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ρ·signal + √(1−ρ²)·noise` for standardized inputs.
fn noisy(rng: &mut Rng, rho: f64, signal: f64) -> f64 {
    rho * signal + (1.0 - rho * rho).sqrt() * normal(rng)
}

fn tercile(x: f64, labels: [&str; 3]) -> &str {
    // standard normal terciles
    const Q: f64 = 0.430_727_3;
    if x < -Q {
        labels[0]
    } else if x < Q {
        labels[1]
    } else {
        labels[2]
    }
}

fn categorical(name: &str, levels: &[&str], values: Vec<&str>) -> FeatureColumn {
    let codes = values
        .iter()
        .map(|v| levels.iter().position(|l| l == v).expect("declared level") as u32)
        .collect();
    FeatureColumn {
        name: name.into(),
        data: ColumnData::Categorical {
            levels: levels.iter().map(|s| s.to_string()).collect(),
            codes,
        },
    }
}

fn numeric(name: &str, values: Vec<f64>) -> FeatureColumn {
    FeatureColumn {
        name: name.into(),
        data: ColumnData::Numeric(values),
    }
}

fn uniform_time(rng: &mut Rng, from: DateTime<Utc>, to: DateTime<Utc>) -> DateTime<Utc> {
    let (a, b) = (from.timestamp(), to.timestamp());
    Utc.timestamp_opt(rng.random_range(a..b), 0).unwrap()
}

pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let [n_new, n_view, n_sale, n_train_only] = cfg.role_counts();
    let active_train = n_view + n_sale + n_train_only;
    if active_train == 0 {
        return Err(Error::InfeasibleTargets("no users active in the training period".into()));
    }
    // every training user has at least one event, most about `views_per_user`
    let floor = cfg.views_per_user.max(1.0) / cfg.n_items as f64;
    if 1.0 - floor < cfg.target_sparsity {
        return Err(Error::InfeasibleTargets(format!(
            "{} views per user over {} items leaves at most {:.4} unobserved, below target {}",
            cfg.views_per_user,
            cfg.n_items,
            1.0 - floor,
            cfg.target_sparsity
        )));
    }

    let mut rng = rng::seeded(cfg.seed);
    let d = cfg.latent_dim;
    let rho = cfg.feature_correlation;
    let beta = cfg.affinity_strength;
    let scale = (d as f64).sqrt();

    let user_lat: Vec<Vec<f64>> = (0..cfg.n_users).map(|_| normals(&mut rng, d)).collect();
    // item directions are unit vectors scaled to √d, so `a` is N(0, 1) for
    // every item and no item is favored by its latent norm
    let item_lat: Vec<Vec<f64>> = (0..cfg.n_items)
        .map(|_| {
            let v = normals(&mut rng, d);
            let n = dot(&v, &v).sqrt().max(1e-12);
            v.into_iter().map(|x| x * scale / n).collect()
        })
        .collect();
    let brand_dirs: Vec<Vec<f64>> = (0..BRANDS)
        .map(|_| {
            let v = normals(&mut rng, d);
            let n = dot(&v, &v).sqrt().max(1e-12);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();

    // Zipf base weights over a random popularity order
    let mut ranks: Vec<usize> = (1..=cfg.n_items).collect();
    ranks.shuffle(&mut rng);
    let base: Vec<f64> = ranks.iter().map(|&r| (r as f64).powf(-cfg.popularity_skew)).collect();

    let mut roles: Vec<Role> = std::iter::repeat_n(Role::New, n_new)
        .chain(std::iter::repeat_n(Role::ViewReturning, n_view))
        .chain(std::iter::repeat_n(Role::SaleReturning, n_sale))
        .chain(std::iter::repeat_n(Role::TrainOnly, n_train_only))
        .collect();
    roles.shuffle(&mut rng);

    let width = cfg.n_users.to_string().len().max(5);
    let iwidth = cfg.n_items.to_string().len().max(4);
    let user_ids: Vec<String> = (1..=cfg.n_users).map(|i| format!("u{i:0width$}")).collect();
    let item_ids: Vec<String> = (1..=cfg.n_items).map(|i| format!("i{i:0iwidth$}")).collect();

    let start = cfg.start;
    let boundary = cfg.boundary();
    let end = cfg.end();
    let extra_views = Poisson::new(cfg.views_per_user - 1.0).ok();

    let mut events = Vec::new();
    let mut affinity = vec![0.0; cfg.n_items];
    let mut weights = vec![0.0; cfg.n_items];
    for (u, role) in roles.iter().enumerate() {
        let lat = &user_lat[u];
        for i in 0..cfg.n_items {
            affinity[i] = dot(lat, &item_lat[i]) / scale;
            weights[i] = base[i] * (beta * affinity[i]).exp();
        }
        let picker = WeightedIndex::new(&weights).map_err(|e| Error::InfeasibleTargets(e.to_string()))?;
        let periods: &[(bool, DateTime<Utc>, DateTime<Utc>)] = match role {
            Role::New => &[(true, boundary, end)],
            Role::TrainOnly => &[(true, start, boundary)],
            Role::ViewReturning => &[(false, start, boundary), (true, boundary, end)],
            Role::SaleReturning => &[(true, start, boundary), (true, boundary, end)],
        };
        for (pi, &(may_buy, from, to)) in periods.iter().enumerate() {
            let n_views = 1 + extra_views.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            let mut bought = false;
            let mut first_view = None;
            for _ in 0..n_views {
                let i = picker.sample(&mut rng);
                let at = uniform_time(&mut rng, from, to);
                events.push(InteractionEvent::view(&user_ids[u], &item_ids[i], at));
                first_view.get_or_insert((i, at));
                if may_buy && rng.random::<f64>() < sigmoid(cfg.sale_logit + beta * affinity[i]) {
                    let gap = rng.random_range(0..3600);
                    let at = (at + chrono::Duration::seconds(gap)).min(to - chrono::Duration::seconds(1));
                    let qty = 1 + (rng.random::<f64>() < SALE_QTY_EXTRA) as u32;
                    events.push(InteractionEvent::sale(&user_ids[u], &item_ids[i], at, qty));
                    bought = true;
                }
            }
            if may_buy && rng.random::<f64>() < cfg.direct_sale_rate {
                let i = picker.sample(&mut rng);
                let at = uniform_time(&mut rng, from, to);
                events.push(InteractionEvent::sale(&user_ids[u], &item_ids[i], at, 1));
                bought = true;
            }
            // a sale-returning user must carry a training purchase
            if *role == Role::SaleReturning && pi == 0 && !bought {
                let (i, at) = first_view.expect("at least one view");
                events.push(InteractionEvent::sale(&user_ids[u], &item_ids[i], at, 1));
            }
        }
    }

    let users = user_features(&mut rng, &user_ids, &user_lat, &brand_dirs, rho);
    let items = item_features(&mut rng, &item_ids, &item_lat, &brand_dirs, rho);
    let data = Dataset::new(events, users, items)?;

    let train: Vec<&InteractionEvent> = data.events().iter().filter(|e| e.timestamp < boundary).collect();
    let n_u = train.iter().map(|e| e.user_id.as_str()).collect::<std::collections::HashSet<_>>().len();
    let n_i = train.iter().map(|e| e.item_id.as_str()).collect::<std::collections::HashSet<_>>().len();
    let sales = train.iter().filter(|e| e.is_sale()).count();
    let stats = PeriodStats::from_counts(n_u, n_i, sales, train.len() - sales);
    let realized = stats.unobserved_pct / 100.0;
    if realized < cfg.target_sparsity {
        return Err(Error::InfeasibleTargets(format!(
            "realized training sparsity {realized:.4} is below target {}",
            cfg.target_sparsity
        )));
    }
    Ok(data)
}

fn brand_of(rng: &mut Rng, lat: &[f64], dirs: &[Vec<f64>], rho: f64) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, b) in dirs.iter().enumerate() {
        let s = noisy(rng, rho, dot(lat, b));
        if s > best.0 {
            best = (s, j);
        }
    }
    best.1
}

const BRAND_LEVELS: [&str; BRANDS] = ["alder", "birch", "cedar", "elm", "maple"];

fn user_features(rng: &mut Rng, ids: &[String], lat: &[Vec<f64>], dirs: &[Vec<f64>], rho: f64) -> FeatureTable {
    let d = lat[0].len();
    let mut age = Vec::with_capacity(ids.len());
    let mut bmi = Vec::with_capacity(ids.len());
    let mut brand = Vec::with_capacity(ids.len());
    for u in lat {
        age.push((38.0 + 12.0 * noisy(rng, rho, u[0])).clamp(18.0, 85.0).round());
        bmi.push(((24.5 + 3.5 * noisy(rng, rho, u[1 % d])).clamp(15.0, 45.0) * 10.0).round() / 10.0);
        brand.push(BRAND_LEVELS[brand_of(rng, u, dirs, rho)]);
    }
    FeatureTable::new(
        ids.to_vec(),
        vec![numeric("age", age), numeric("bmi", bmi), categorical("brand_pref", &BRAND_LEVELS, brand)],
    )
    .expect("generated table is consistent")
}

fn item_features(rng: &mut Rng, ids: &[String], lat: &[Vec<f64>], dirs: &[Vec<f64>], rho: f64) -> FeatureTable {
    const SHAPES: [&str; 3] = ["slim", "regular", "relaxed"];
    const SLEEVES: [&str; 3] = ["sleeveless", "short", "long"];
    let d = lat[0].len();
    let mut price = Vec::with_capacity(ids.len());
    let mut shape = Vec::with_capacity(ids.len());
    let mut sleeve = Vec::with_capacity(ids.len());
    let mut brand = Vec::with_capacity(ids.len());
    for v in lat {
        price.push(((3.4 + 0.5 * noisy(rng, rho, v[0])).exp() * 100.0).round() / 100.0);
        shape.push(tercile(noisy(rng, rho, v[1 % d]), SHAPES));
        sleeve.push(tercile(noisy(rng, rho, v[2 % d]), SLEEVES));
        brand.push(BRAND_LEVELS[brand_of(rng, v, dirs, rho)]);
    }
    FeatureTable::new(
        ids.to_vec(),
        vec![
            numeric("price", price),
            categorical("shape", &SHAPES, shape),
            categorical("sleeve", &SLEEVES, sleeve),
            categorical("brand", &BRAND_LEVELS, brand),
        ],
    )
    .expect("generated table is consistent")
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dataset, Segment, SegmentAssignment, TemporalSplit};

/// Counts over one period's user×product matrix. Percentages are of the
/// `users × products` cells; `unobserved = cells − sales − views`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub users: usize,
    pub products: usize,
    pub sales: usize,
    pub views: usize,
    pub unobserved: u64,
    pub sale_pct: f64,
    pub view_pct: f64,
    pub unobserved_pct: f64,
}

impl PeriodStats {
    pub fn of(data: &Dataset) -> Self {
        Self::from_counts(
            data.users().len(),
            data.items().len(),
            data.sale_count(),
            data.view_count(),
        )
    }

    pub fn from_counts(users: usize, products: usize, sales: usize, views: usize) -> Self {
        let cells = users as u64 * products as u64;
        let unobserved = cells.saturating_sub((sales + views) as u64);
        let pct = |n: u64| if cells == 0 { 0.0 } else { 100.0 * n as f64 / cells as f64 };
        PeriodStats {
            users,
            products,
            sales,
            views,
            unobserved,
            sale_pct: pct(sales as u64),
            view_pct: pct(views as u64),
            unobserved_pct: pct(unobserved),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segment: Segment,
    pub users: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub train: PeriodStats,
    pub test: PeriodStats,
    /// New, view and sale users among test users; empty when there are none.
    pub segments: Vec<SegmentStats>,
}

impl DatasetStats {
    pub fn segment(&self, seg: Segment) -> Option<&SegmentStats> {
        self.segments.iter().find(|s| s.segment == seg)
    }
}

pub fn dataset_stats(split: &TemporalSplit, seg: &SegmentAssignment) -> DatasetStats {
    let total = seg.len();
    let segments = if total == 0 {
        Vec::new()
    } else {
        [Segment::NewUser, Segment::ViewUser, Segment::SaleUser]
            .into_iter()
            .map(|s| {
                let users = seg.count(s);
                SegmentStats {
                    segment: s,
                    users,
                    pct: 100.0 * users as f64 / total as f64,
                }
            })
            .collect()
    };
    DatasetStats {
        train: PeriodStats::of(&split.train),
        test: PeriodStats::of(&split.test),
        segments,
    }
}

fn fmt_pct(p: f64) -> String {
    if p != 0.0 && p < 0.1 {
        format!("{p:.2}%")
    } else {
        format!("{p:.1}%")
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Training data")?;
        writeln!(f, "  Users        Products  Sales (%)           Views (%)           Unobserved (%)")?;
        let row = |p: &PeriodStats| {
            format!(
                "  {:<12} {:<9} {:<19} {:<19} {}",
                p.users,
                p.products,
                format!("{}({})", p.sales, fmt_pct(p.sale_pct)),
                format!("{}({})", p.views, fmt_pct(p.view_pct)),
                format!("{}({})", p.unobserved, fmt_pct(p.unobserved_pct)),
            )
        };
        writeln!(f, "{}", row(&self.train))?;
        writeln!(f, "Test data")?;
        let seg = |s: Segment| {
            self.segment(s)
                .map(|x| format!("{}({})", x.users, fmt_pct(x.pct)))
                .unwrap_or_else(|| "-".into())
        };
        writeln!(
            f,
            "  New Users: {}  View Users: {}  Sale Users: {}",
            seg(Segment::NewUser),
            seg(Segment::ViewUser),
            seg(Segment::SaleUser)
        )?;
        writeln!(f, "  Users        Products  Sales (%)           Views (%)           Unobserved (%)")?;
        writeln!(f, "{}", row(&self.test))
    }
}

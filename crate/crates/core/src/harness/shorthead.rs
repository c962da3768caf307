use serde::{Deserialize, Serialize};

use crate::data::PopularityTable;
use crate::{Error, Result};

/// Items by descending units sold with the running share of all sales. The
/// short head is the smallest top set holding a third of sales; its size is
/// reported as a fraction of all catalog items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortHeadCurve {
    pub items: Vec<String>,
    pub quantities: Vec<u64>,
    pub cumulative_share: Vec<f64>,
    pub short_head_items: usize,
    pub short_head_fraction: f64,
}

pub fn short_head_curve(pop: &PopularityTable) -> Result<ShortHeadCurve> {
    let total = pop.total();
    if total == 0 {
        return Err(Error::ZeroSales);
    }
    let items = pop.ranking().to_vec();
    let quantities: Vec<u64> = items.iter().map(|i| pop.quantity(i)).collect();
    let mut cum = 0u64;
    let mut head = None;
    let mut cumulative_share = Vec::with_capacity(items.len());
    for (n, &q) in quantities.iter().enumerate() {
        cum += q;
        if head.is_none() && 3 * cum >= total {
            head = Some(n + 1);
        }
        cumulative_share.push(cum as f64 / total as f64);
    }
    let short_head_items = head.expect("total reached");
    Ok(ShortHeadCurve {
        short_head_fraction: short_head_items as f64 / items.len() as f64,
        items,
        quantities,
        cumulative_share,
        short_head_items,
    })
}

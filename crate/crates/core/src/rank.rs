//! Ordering areas by their RPV quantiles.

use crate::descriptive::stats::median_in_place;
use crate::descriptive::QuantileSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Descending by q50, then q95 descending, then area code.
    pub ordered: Vec<QuantileSummary>,
    /// Sample-wide medians of the per-area q50 and q95 (reference lines).
    pub median_q50: f64,
    pub median_q95: f64,
}

pub fn rank_areas(summaries: &[QuantileSummary]) -> Option<Ranking> {
    if summaries.is_empty() {
        return None;
    }
    let mut ordered = summaries.to_vec();
    ordered.sort_by(|a, b| {
        b.q50
            .total_cmp(&a.q50)
            .then_with(|| b.q95.total_cmp(&a.q95))
            .then_with(|| a.area_code.cmp(&b.area_code))
            .then_with(|| a.scope.cmp(&b.scope))
    });
    let mut q50: Vec<f64> = ordered.iter().map(|s| s.q50).collect();
    let mut q95: Vec<f64> = ordered.iter().map(|s| s.q95).collect();
    Some(Ranking {
        median_q50: median_in_place(&mut q50).expect("nonempty"),
        median_q95: median_in_place(&mut q95).expect("nonempty"),
        ordered,
    })
}

impl Ranking {
    pub fn position(&self, area_code: &str) -> Option<usize> {
        self.ordered.iter().position(|s| s.area_code == area_code)
    }
}

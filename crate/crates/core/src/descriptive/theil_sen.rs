use crate::descriptive::stats::median_in_place;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheilSenLine {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

impl TheilSenLine {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Slope is the median of all pairwise slopes with distinct x; intercept is
/// the median of `y - slope * x`. Medians interpolate between the two central
/// values for even counts.
pub fn theil_sen_fit(points: &[(f64, f64)]) -> Result<TheilSenLine> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Domain(format!("Theil-Sen needs at least 2 points, got {n}")));
    }
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for (i, &(xi, yi)) in points.iter().enumerate() {
        for &(xj, yj) in &points[i + 1..] {
            if xj != xi {
                slopes.push((yj - yi) / (xj - xi));
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::VerticalFit);
    }
    let slope = median_in_place(&mut slopes)?;
    let mut resid: Vec<f64> = points.iter().map(|&(x, y)| y - slope * x).collect();
    let intercept = median_in_place(&mut resid)?;
    Ok(TheilSenLine {
        slope,
        intercept,
        n,
    })
}

use crate::error::{Error, Result};
use crate::ingest::{AreaKey, Dataset, Scope, TractRecord};
use crate::table::DesignTable;

/// Annual rent as a percent of property value: `100 * 12 * rent / value`.
pub fn compute_rpv(med_rent_2br: f64, med_value: f64) -> Result<f64> {
    if !(med_rent_2br > 0.0 && med_value > 0.0) {
        return Err(Error::Domain(format!(
            "rent-to-value needs positive inputs, got rent {med_rent_2br} value {med_value}"
        )));
    }
    Ok(100.0 * 12.0 * med_rent_2br / med_value)
}

pub fn mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    // one correction pass
    m + values.iter().map(|v| v - m).sum::<f64>() / n
}

/// Sample standard deviation (n - 1 denominator). Zero for a singleton.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn zscores(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Domain("z-scores need at least two values".into()));
    }
    let m = mean(values);
    let sd = sample_sd(values);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// Type-7 interpolation on an already sorted slice.
pub(crate) fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Linear-interpolation quantile at rank `(n - 1) p` of the sorted sample.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile probability {p} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&v, p))
}

/// Type-7 median using selection instead of a full sort. Reorders `values`.
pub fn median_in_place(values: &mut [f64]) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Domain("median of an empty sample".into()));
    }
    let k = (n - 1) / 2;
    let (_, &mut lo, upper) = values.select_nth_unstable_by(k, f64::total_cmp);
    if n % 2 == 1 {
        return Ok(lo);
    }
    let hi = upper.iter().copied().min_by(f64::total_cmp).expect("even n >= 2");
    Ok(lo + 0.5 * (hi - lo))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary {
    pub area_code: String,
    pub scope: Scope,
    pub mean: f64,
    /// Zero when `n == 1`.
    pub sd: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
    pub q95: f64,
    pub n: usize,
}

impl QuantileSummary {
    pub fn from_values(area: &AreaKey, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::UnknownArea(area.to_string()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(QuantileSummary {
            area_code: area.area_code.clone(),
            scope: area.scope,
            mean: mean(&v),
            sd: sample_sd(&v),
            q50: sorted_quantile(&v, 0.50),
            q75: sorted_quantile(&v, 0.75),
            q90: sorted_quantile(&v, 0.90),
            q95: sorted_quantile(&v, 0.95),
            n: v.len(),
        })
    }
}

/// Mean, SD and upper quantiles of tract RPV within one area.
pub fn quantile_summary(ds: &Dataset, area: &AreaKey) -> Result<QuantileSummary> {
    let rpv: Vec<f64> = ds.area_records(area).map(TractRecord::rpv).collect();
    QuantileSummary::from_values(area, &rpv)
}

/// Per-variable medians for one area, in the column order of the core-city
/// statistics table. A variable with no observed values is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMedians {
    pub area_code: String,
    pub scope: Scope,
    pub n: usize,
    pub perc_pov: Option<f64>,
    pub med_income: Option<f64>,
    pub perc_white: Option<f64>,
    pub perc_black: Option<f64>,
    pub perc_vac: Option<f64>,
    pub rent_vac: Option<f64>,
    pub med_rent: Option<f64>,
    pub med_value: Option<f64>,
    pub rpv: Option<f64>,
}

pub fn group_medians(ds: &Dataset, area: &AreaKey) -> Result<GroupMedians> {
    let recs: Vec<&TractRecord> = ds.area_records(area).collect();
    if recs.is_empty() {
        return Err(Error::UnknownArea(area.to_string()));
    }
    let med = |f: fn(&TractRecord) -> Option<f64>| {
        let mut v: Vec<f64> = recs.iter().filter_map(|r| f(r)).collect();
        median_in_place(&mut v).ok()
    };
    Ok(GroupMedians {
        area_code: area.area_code.clone(),
        scope: area.scope,
        n: recs.len(),
        perc_pov: med(|r| r.perc_pov),
        med_income: med(|r| r.med_income),
        perc_white: med(|r| r.perc_white),
        perc_black: med(|r| r.perc_black),
        perc_vac: med(|r| r.perc_vac),
        rent_vac: med(|r| r.rent_vac),
        med_rent: med(|r| Some(r.med_rent_2br)),
        med_value: med(|r| Some(r.med_value)),
        rpv: med(|r| Some(r.rpv())),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major, `NaN` where a pair has zero variance or too few rows.
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || x.len() != y.len() {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlations over pairwise-complete rows.
pub fn correlation_matrix(table: &DesignTable, columns: &[&str]) -> Result<CorrelationMatrix> {
    let complete = table.complete_rows(columns)?;
    if complete.len() < 3 {
        return Err(Error::Domain(format!(
            "correlations need at least 3 complete rows, found {}",
            complete.len()
        )));
    }
    let cols = columns
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    let k = columns.len();
    let mut values = vec![vec![f64::NAN; k]; k];
    for i in 0..k {
        for j in i..k {
            let (x, y): (Vec<f64>, Vec<f64>) = cols[i]
                .iter()
                .zip(cols[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .unzip();
            let r = pearson(&x, &y);
            let r = if i == j && r.is_finite() { 1.0 } else { r };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|c| c.to_string()).collect(),
        values,
    })
}

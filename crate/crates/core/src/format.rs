//! Fixed-precision number formatting shared by the report writers.

/// Fixed decimals; `NaN` for undefined values.
pub fn fixed(v: f64, decimals: usize) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        let s = format!("{v:.decimals$}");
        // avoid "-0.000000"
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_string()
        } else {
            s
        }
    }
}

/// Six decimals, the default precision of CSV reports.
pub fn num(v: f64) -> String {
    fixed(v, 6)
}

/// Empty cell for a missing value.
pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

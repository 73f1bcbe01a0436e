//! Coefficient tables: one long-format CSV, and a wide table with
//! `coef (|t|)` cells in the usual column order, as CSV and aligned text.

use crate::format::{fixed, num};
use crate::ingest::Scope;
use crate::sar::SarFit;

/// Canonical term order. Terms outside this list follow in first-seen order.
pub const TABLE_COLUMNS: [&str; 7] = [
    "Const", "lnMedY", "lnMedVal", "PERCVAC", "PERCWHT", "PERCBLK", "PERCRENT",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFit {
    pub area: String,
    pub scope: Scope,
    pub spec: String,
    pub fit: SarFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTable {
    /// `area,scope,spec,term,estimate,t_stat,rho,log_lik,aic,n`
    pub long_csv: String,
    pub wide_csv: String,
    pub text: String,
}

fn term_order(fits: &[LabeledFit]) -> Vec<String> {
    let mut terms: Vec<String> = TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for f in fits {
        for t in &f.fit.terms {
            if !terms.contains(t) {
                terms.push(t.clone());
            }
        }
    }
    terms
}

/// `coef (|t|)`, three decimals for the estimate and two for the statistic.
pub fn coef_cell(estimate: f64, t: f64) -> String {
    format!("{} ({})", fixed(estimate, 3), fixed(t.abs(), 2))
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(cells).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn render_fit_table(fits: &[LabeledFit]) -> FitTable {
    let mut long_csv = csv_line(
        &["area", "scope", "spec", "term", "estimate", "t_stat", "rho", "log_lik", "aic", "n"]
            .map(String::from),
    );
    for lf in fits {
        let f = &lf.fit;
        for ((term, b), t) in f.terms.iter().zip(&f.beta).zip(&f.t_stats) {
            long_csv.push_str(&csv_line(&[
                lf.area.clone(),
                lf.scope.to_string(),
                lf.spec.clone(),
                term.clone(),
                num(*b),
                num(*t),
                num(f.rho),
                num(f.log_lik),
                num(f.aic),
                f.n.to_string(),
            ]));
        }
    }

    let terms = term_order(fits);
    let mut header: Vec<String> = vec!["".into()];
    header.extend(terms.iter().cloned());
    header.push("rho".into());
    header.push("AIC".into());

    let mut rows: Vec<Vec<String>> = Vec::with_capacity(fits.len());
    let mut wide_csv = csv_line(
        &["area", "scope", "spec"]
            .iter()
            .map(|s| s.to_string())
            .chain(header[1..].iter().cloned())
            .collect::<Vec<_>>(),
    );
    let mut previous: Option<(&str, Scope)> = None;
    for lf in fits {
        let cells: Vec<String> = terms
            .iter()
            .map(|t| match lf.fit.coefficient(t) {
                Some((b, tv)) => coef_cell(b, tv),
                None => String::new(),
            })
            .chain([fixed(lf.fit.rho, 3), fixed(lf.fit.aic, 1)])
            .collect();
        let mut wide = vec![lf.area.clone(), lf.scope.to_string(), lf.spec.clone()];
        wide.extend(cells.iter().cloned());
        wide_csv.push_str(&csv_line(&wide));

        let same_group = previous == Some((lf.area.as_str(), lf.scope));
        let label = if same_group { String::new() } else { lf.area.clone() };
        previous = Some((lf.area.as_str(), lf.scope));
        let mut row = vec![label];
        row.extend(cells);
        rows.push(row);
    }

    FitTable {
        long_csv,
        wide_csv,
        text: align(&header, &rows),
    }
}

fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render = |cells: &[String]| {
        let mut line = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{cell:<w$}", w = widths[0]));
            } else {
                line.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        line.trim_end().to_string() + "\n"
    };
    let mut out = render(header);
    let rule_len = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule_len));
    out.push('\n');
    for r in rows {
        out.push_str(&render(r));
    }
    out
}

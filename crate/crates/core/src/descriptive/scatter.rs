//! Plot data for tract scatter panels: points, a highlight flag for
//! majority-Black tracts, and the robust fit line with RPV reference lines.

use std::path::Path;

use crate::descriptive::stats::sorted_quantile;
use crate::descriptive::theil_sen::{theil_sen_fit, TheilSenLine};
use crate::error::{Error, Result};
use crate::format::{num, opt_num};
use crate::table::{col, DesignTable};

pub const HIGHLIGHT_PERC_BLACK: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub geoid: String,
    pub x: f64,
    pub y: f64,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterData {
    pub points: Vec<ScatterPoint>,
    pub line: Option<TheilSenLine>,
    pub rpv_q50: Option<f64>,
    pub rpv_q95: Option<f64>,
}

/// Rows where both `x_col` and `y_col` are present. A tract is highlighted
/// when `PERCBLK >= 50`.
pub fn emit_scatter(table: &DesignTable, x_col: &str, y_col: &str) -> Result<ScatterData> {
    let xs = table.column(x_col)?;
    let ys = table.column(y_col)?;
    let black = table.column(col::PERCBLK).ok();
    let rpv = table.column(col::RPV).ok();

    let mut points = Vec::new();
    let mut rpv_vals = Vec::new();
    for i in 0..table.len() {
        let (Some(x), Some(y)) = (xs[i], ys[i]) else {
            continue;
        };
        let highlight = black
            .and_then(|b| b[i])
            .is_some_and(|b| b >= HIGHLIGHT_PERC_BLACK);
        points.push(ScatterPoint {
            geoid: table.geoids[i].clone(),
            x,
            y,
            highlight,
        });
        if let Some(r) = rpv.and_then(|r| r[i]) {
            rpv_vals.push(r);
        }
    }

    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    let line = match theil_sen_fit(&pairs) {
        Ok(l) => Some(l),
        Err(Error::VerticalFit | Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    rpv_vals.sort_by(f64::total_cmp);
    let q = |p| (!rpv_vals.is_empty()).then(|| sorted_quantile(&rpv_vals, p));
    Ok(ScatterData {
        points,
        line,
        rpv_q50: q(0.5),
        rpv_q95: q(0.95),
    })
}

impl ScatterData {
    /// Writes `geoid,x,y,highlight` rows and the one-row line sidecar
    /// `slope,intercept,q50,q95`.
    pub fn write(&self, points_path: &Path, line_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(points_path).map_err(|e| Error::csv(points_path, e))?;
        w.write_record(["geoid", "x", "y", "highlight"])
            .map_err(|e| Error::csv(points_path, e))?;
        for p in &self.points {
            w.write_record([
                p.geoid.as_str(),
                &num(p.x),
                &num(p.y),
                if p.highlight { "true" } else { "false" },
            ])
            .map_err(|e| Error::csv(points_path, e))?;
        }
        w.flush().map_err(|e| Error::io(points_path, e))?;

        let mut w = csv::Writer::from_path(line_path).map_err(|e| Error::csv(line_path, e))?;
        w.write_record(["slope", "intercept", "q50", "q95"])
            .map_err(|e| Error::csv(line_path, e))?;
        if !self.points.is_empty() {
            w.write_record([
                opt_num(self.line.map(|l| l.slope)),
                opt_num(self.line.map(|l| l.intercept)),
                opt_num(self.rpv_q50),
                opt_num(self.rpv_q95),
            ])
            .map_err(|e| Error::csv(line_path, e))?;
        }
        w.flush().map_err(|e| Error::io(line_path, e))
    }
}

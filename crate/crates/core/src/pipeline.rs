//! Pipeline stages behind the CLI. Each stage writes its reports under the
//! output directory and records them in the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::contiguity::queen_contiguity;
use crate::descriptive::{
    correlation_matrix, emit_scatter, group_medians, quantile_summary, zscores, QuantileSummary,
};
use crate::error::{Error, Result};
use crate::format::{num, opt_num};
use crate::geometry::read_geojson;
use crate::ingest::{load_attributes, log_transform, partition_by_area, AreaKey, Dataset, Scope, ScopeFilter};
use crate::manifest::Manifest;
use crate::rank::rank_areas;
use crate::sar::{fit_sar, render_fit_table, LabeledFit, SarSpec};
use crate::table::{col, DesignTable};
use crate::weights::{from_adjacency, SpatialWeights};

/// Columns of the full correlation matrix, in report order.
pub const CORRELATION_COLUMNS: [&str; 10] = [
    col::RPV,
    col::PERCPOV,
    col::LN_MED_Y,
    col::PERCBLK,
    col::PERCWHT,
    col::PERCVAC,
    col::RENTVAC,
    col::LN_MED_VAL,
    col::MEDRENT,
    col::LN_MED_YR,
];

/// Variables plotted against tract RPV.
pub const SCATTER_Y: [&str; 4] = [col::LN_MED_Y, col::LN_MED_VAL, col::MEDRENT, col::PERCVAC];

/// Area-level variables plotted against the area median RPV.
pub const AREA_SCATTER_Y: [&str; 5] = [
    col::PERCPOV,
    col::LN_MED_Y,
    col::PERCBLK,
    col::PERCVAC,
    col::LN_MED_VAL,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RaceChoice {
    White,
    Black,
    #[default]
    Both,
}

/// Regression specifications for the chosen race variable(s), white first.
pub fn race_specs(race: RaceChoice) -> Vec<SarSpec> {
    let spec = |race_col: &str| {
        SarSpec::new(
            race_col,
            col::ZRPV,
            &[col::LN_MED_Y, col::LN_MED_VAL, col::PERCVAC, race_col, col::PERCRENT],
        )
        .expect("static spec is valid")
    };
    match race {
        RaceChoice::White => vec![spec(col::PERCWHT)],
        RaceChoice::Black => vec![spec(col::PERCBLK)],
        RaceChoice::Both => vec![spec(col::PERCWHT), spec(col::PERCBLK)],
    }
}

pub(crate) fn csv_string<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(AsRef::as_ref))
        .expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn file_stem(area: &AreaKey) -> String {
    let code: String = area
        .area_code
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{code}_{}", area.scope)
}

fn scope_name(scope: Scope) -> &'static str {
    match scope {
        Scope::City => "city",
        Scope::Msa => "msa",
    }
}

pub fn stage_ingest(attributes: &Path, scope: ScopeFilter, m: &mut Manifest) -> Result<Dataset> {
    let ds = load_attributes(attributes, scope)?;
    let root = m.root().to_path_buf();

    let clean = root.join("attributes.clean.csv");
    ds.write_csv(&clean)?;
    m.record("attributes", &clean)?;

    let name = attributes
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "attributes".into());
    let dropped = root.join(format!("{name}.dropped.csv"));
    ds.write_dropped(&dropped)?;
    m.record("dropped", &dropped)?;

    let rows: Vec<Vec<String>> = partition_by_area(&ds)
        .iter()
        .map(|(k, part)| vec![k.area_code.clone(), k.scope.to_string(), part.len().to_string()])
        .collect();
    m.write_text(
        "area_counts",
        &root.join("area_counts.csv"),
        &csv_string(&["area", "scope", "n"], &rows),
    )?;
    Ok(ds)
}

/// Binary contiguity from a GeoJSON file or an adjacency list.
#[derive(Debug, Clone)]
pub struct LoadedWeights {
    pub weights: SpatialWeights,
    pub symmetrized_edges: usize,
    pub source: PathBuf,
}

pub fn load_weights(
    geometry: Option<&Path>,
    adjacency: Option<&Path>,
    ds: Option<&Dataset>,
) -> Result<Option<LoadedWeights>> {
    if let Some(g) = geometry {
        let geoms = read_geojson(g)?;
        return Ok(Some(LoadedWeights {
            weights: queen_contiguity(&geoms)?,
            symmetrized_edges: 0,
            source: g.to_path_buf(),
        }));
    }
    if let Some(a) = adjacency {
        let ids = match ds {
            Some(ds) => ds.all_geoids(),
            None => adjacency_ids(a)?,
        };
        let load = from_adjacency(a, &ids)?;
        return Ok(Some(LoadedWeights {
            weights: load.weights,
            symmetrized_edges: load.symmetrized_edges,
            source: a.to_path_buf(),
        }));
    }
    Ok(None)
}

fn adjacency_ids(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut ids: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        for g in row.iter().take(2) {
            let g = g.trim().to_string();
            if seen.insert(g.clone()) {
                ids.push(g);
            }
        }
    }
    Ok(ids)
}

pub fn stage_weights(w: &LoadedWeights, m: &mut Manifest) -> Result<()> {
    let root = m.root().to_path_buf();
    let edges = root.join("adjacency.csv");
    w.weights.write_edges(&edges)?;
    m.record("adjacency", &edges)?;
    let std_path = root.join("weights.csv");
    w.weights.row_standardize().write_weights(&std_path)?;
    m.record("weights", &std_path)?;
    m.write_text(
        "weights_summary",
        &root.join("weights_summary.csv"),
        &csv_string(
            &["n", "edges", "islands", "symmetrized_edges"],
            &[vec![
                w.weights.len().to_string(),
                w.weights.edge_count().to_string(),
                w.weights.island_count().to_string(),
                w.symmetrized_edges.to_string(),
            ]],
        ),
    )
}

/// Analysis table for one area: logged medians plus `ZRPV`, the z-score of
/// RPV within the area. `ZRPV` is blank when RPV has no spread.
pub fn area_table(area_ds: &Dataset) -> DesignTable {
    let mut t = log_transform(area_ds);
    let rpv: Vec<f64> = t
        .column(col::RPV)
        .expect("log_transform emits RPV")
        .iter()
        .map(|v| v.expect("RPV present for admitted records"))
        .collect();
    let z: Vec<Option<f64>> = match zscores(&rpv) {
        Ok(z) => z.into_iter().map(Some).collect(),
        Err(_) => vec![None; rpv.len()],
    };
    t.set_column(col::ZRPV, z).expect("row count matches");
    t
}

pub fn stage_describe(ds: &Dataset, m: &mut Manifest) -> Result<()> {
    let root = m.root().to_path_buf();
    let parts = partition_by_area(ds);

    let mut medians = Vec::new();
    let mut quantiles = Vec::new();
    let mut rpv_corr = Vec::new();
    let mut skipped = Vec::new();
    for (area, part) in &parts {
        let g = group_medians(part, area)?;
        medians.push(vec![
            area.area_code.clone(),
            area.scope.to_string(),
            g.n.to_string(),
            opt_num(g.perc_pov),
            opt_num(g.med_income),
            opt_num(g.perc_white),
            opt_num(g.perc_black),
            opt_num(g.perc_vac),
            opt_num(g.rent_vac),
            opt_num(g.med_rent),
            opt_num(g.med_value),
        ]);
        quantiles.push(summary_row(&quantile_summary(part, area)?));

        let table = area_table(part);
        let stem = file_stem(area);
        match correlation_matrix(&table, &CORRELATION_COLUMNS) {
            Ok(c) => {
                let rows: Vec<Vec<String>> = c
                    .names
                    .iter()
                    .zip(&c.values)
                    .map(|(n, vals)| {
                        std::iter::once(n.clone())
                            .chain(vals.iter().map(|v| num(*v)))
                            .collect()
                    })
                    .collect();
                let mut header = vec![String::new()];
                header.extend(c.names.iter().cloned());
                m.write_text(
                    &format!("correlations:{stem}"),
                    &root.join("correlations").join(format!("{stem}.csv")),
                    &csv_string(&header, &rows),
                )?;
                let mut row = vec![area.area_code.clone(), area.scope.to_string()];
                row.extend(c.values[0][1..].iter().map(|v| num(*v)));
                rpv_corr.push(row);
            }
            Err(e) => skipped.push(vec![
                area.area_code.clone(),
                area.scope.to_string(),
                "correlations".into(),
                e.to_string(),
            ]),
        }

        for y in SCATTER_Y {
            let s = emit_scatter(&table, col::RPV, y)?;
            let dir = root.join("scatter");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let (p, l) = (dir.join(format!("{stem}_{y}.csv")), dir.join(format!("{stem}_{y}.line.csv")));
            s.write(&p, &l)?;
            m.record(&format!("scatter:{stem}:{y}"), &p)?;
            m.record(&format!("scatter_line:{stem}:{y}"), &l)?;
        }
    }

    m.write_text(
        "medians",
        &root.join("medians.csv"),
        &csv_string(
            &["area", "scope", "N", "PERCPOV", "MedY", "PERCWHT", "PERCBLK", "PERCVAC", "RENTVAC", "MEDRENT", "MedVal"],
            &medians,
        ),
    )?;
    m.write_text("quantiles", &root.join("quantiles.csv"), &csv_string(&SUMMARY_HEADER, &quantiles))?;
    let mut header = vec!["area".to_string(), "scope".to_string()];
    header.extend(CORRELATION_COLUMNS[1..].iter().map(|s| s.to_string()));
    m.write_text("rpv_correlations", &root.join("rpv_correlations.csv"), &csv_string(&header, &rpv_corr))?;

    for scope in [Scope::City, Scope::Msa] {
        let table = area_median_table(&parts, scope)?;
        if table.is_empty() {
            continue;
        }
        let dir = root.join("area_scatter");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for y in AREA_SCATTER_Y {
            let s = emit_scatter(&table, col::RPV, y)?;
            let name = scope_name(scope);
            let (p, l) = (dir.join(format!("{name}_{y}.csv")), dir.join(format!("{name}_{y}.line.csv")));
            s.write(&p, &l)?;
            m.record(&format!("area_scatter:{name}:{y}"), &p)?;
            m.record(&format!("area_scatter_line:{name}:{y}"), &l)?;
        }
    }

    m.write_text(
        "describe_skipped",
        &root.join("describe_skipped.csv"),
        &csv_string(&["area", "scope", "stage", "reason"], &skipped),
    )
}

/// One row per area: the median RPV against the area medians of the other
/// variables (income and value logged).
pub fn area_median_table(parts: &BTreeMap<AreaKey, Dataset>, scope: Scope) -> Result<DesignTable> {
    let areas: Vec<(&AreaKey, &Dataset)> = parts.iter().filter(|(k, _)| k.scope == scope).collect();
    let mut t = DesignTable::new(areas.iter().map(|(k, _)| k.area_code.clone()).collect());
    let meds = areas
        .iter()
        .map(|(k, d)| group_medians(d, k))
        .collect::<Result<Vec<_>>>()?;
    let cols: [(&str, Vec<Option<f64>>); 6] = [
        (col::RPV, meds.iter().map(|g| g.rpv).collect()),
        (col::PERCPOV, meds.iter().map(|g| g.perc_pov).collect()),
        (col::LN_MED_Y, meds.iter().map(|g| g.med_income.filter(|v| *v > 0.0).map(f64::ln)).collect()),
        (col::PERCBLK, meds.iter().map(|g| g.perc_black).collect()),
        (col::PERCVAC, meds.iter().map(|g| g.perc_vac).collect()),
        (col::LN_MED_VAL, meds.iter().map(|g| g.med_value.map(f64::ln)).collect()),
    ];
    for (name, v) in cols {
        t.set_column(name, v)?;
    }
    Ok(t)
}

pub const SUMMARY_HEADER: [&str; 9] = ["area", "scope", "mean", "sd", "q50", "q75", "q90", "q95", "n"];

fn summary_row(s: &QuantileSummary) -> Vec<String> {
    vec![
        s.area_code.clone(),
        s.scope.to_string(),
        num(s.mean),
        num(s.sd),
        num(s.q50),
        num(s.q75),
        num(s.q90),
        num(s.q95),
        s.n.to_string(),
    ]
}

pub fn stage_rank(ds: &Dataset, m: &mut Manifest) -> Result<()> {
    let root = m.root().to_path_buf();
    let parts = partition_by_area(ds);
    for scope in [Scope::City, Scope::Msa] {
        let summaries = parts
            .iter()
            .filter(|(k, _)| k.scope == scope)
            .map(|(k, d)| quantile_summary(d, k))
            .collect::<Result<Vec<_>>>()?;
        let Some(ranking) = rank_areas(&summaries) else {
            continue;
        };
        let name = scope_name(scope);
        let rows: Vec<Vec<String>> = ranking.ordered.iter().map(summary_row).collect();
        m.write_text(
            &format!("ranking:{name}"),
            &root.join(format!("ranking_{name}.csv")),
            &csv_string(&SUMMARY_HEADER, &rows),
        )?;
        m.write_text(
            &format!("ranking_reference:{name}"),
            &root.join(format!("ranking_{name}_reference.csv")),
            &csv_string(
                &["median_q50", "median_q95"],
                &[vec![num(ranking.median_q50), num(ranking.median_q95)]],
            ),
        )?;
    }
    Ok(())
}

/// Outcome of fitting one area under one specification.
enum AreaFit {
    Fit(LabeledFit),
    Skipped { area: AreaKey, spec: String, reason: String },
}

fn fit_area(area: &AreaKey, part: &Dataset, base: &SpatialWeights, specs: &[SarSpec]) -> Vec<AreaFit> {
    let table = area_table(part);
    // the two race specifications usually share a row set, and so a W
    let mut cache: Option<(Vec<usize>, SpatialWeights)> = None;
    specs
        .iter()
        .map(|spec| {
            let skipped = |reason: String| AreaFit::Skipped {
                area: area.clone(),
                spec: spec.name.clone(),
                reason,
            };
            let rows = match spec.complete_rows(&table) {
                Ok(r) => r,
                Err(e) => return skipped(e.to_string()),
            };
            let (y, design) = match spec.design(&table, &rows) {
                Ok(v) => v,
                Err(e) => return skipped(e.to_string()),
            };
            let w = match &cache {
                Some((r, w)) if *r == rows => w.clone(),
                _ => {
                    let ids: Vec<String> = rows.iter().map(|&i| table.geoids[i].clone()).collect();
                    let (w, _missing) = base.subset(&ids);
                    let w = w.row_standardize().with_eigenvalues();
                    cache = Some((rows.clone(), w.clone()));
                    w
                }
            };
            match fit_sar(&y, &design, &w) {
                Ok(fit) => AreaFit::Fit(LabeledFit {
                    area: area.area_code.clone(),
                    scope: area.scope,
                    spec: spec.name.clone(),
                    fit,
                }),
                Err(e) => skipped(e.to_string()),
            }
        })
        .collect()
}

pub fn stage_regress(
    ds: &Dataset,
    base: &SpatialWeights,
    race: RaceChoice,
    m: &mut Manifest,
) -> Result<Vec<LabeledFit>> {
    let root = m.root().to_path_buf();
    let specs = race_specs(race);
    let parts: Vec<(AreaKey, Dataset)> = partition_by_area(ds).into_iter().collect();
    let outcomes: Vec<AreaFit> = parts
        .par_iter()
        .flat_map_iter(|(area, part)| fit_area(area, part, base, &specs))
        .collect();

    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            AreaFit::Fit(f) => fits.push(f),
            AreaFit::Skipped { area, spec, reason } => {
                skipped.push(vec![area.area_code, area.scope.to_string(), spec, reason])
            }
        }
    }

    let all = render_fit_table(&fits);
    m.write_text("sar_fits", &root.join("sar_fits.csv"), &all.long_csv)?;
    for scope in [Scope::City, Scope::Msa] {
        let subset: Vec<LabeledFit> = fits.iter().filter(|f| f.scope == scope).cloned().collect();
        if subset.is_empty() {
            continue;
        }
        let t = render_fit_table(&subset);
        let name = scope_name(scope);
        m.write_text(&format!("sar_table:{name}:csv"), &root.join(format!("sar_table_{name}.csv")), &t.wide_csv)?;
        m.write_text(&format!("sar_table:{name}:text"), &root.join(format!("sar_table_{name}.txt")), &t.text)?;
    }
    let warnings: Vec<Vec<String>> = fits
        .iter()
        .flat_map(|f| {
            f.fit.warnings.iter().map(move |w| {
                vec![f.area.clone(), f.scope.to_string(), f.spec.clone(), w.clone()]
            })
        })
        .chain(skipped.iter().cloned())
        .collect();
    m.write_text(
        "sar_notes",
        &root.join("sar_notes.csv"),
        &csv_string(&["area", "scope", "spec", "note"], &warnings),
    )?;
    Ok(fits)
}

//! Loading and validating tract attribute extracts.
//!
//! The attribute file is a UTF-8 CSV with one header row naming the columns in
//! [`ATTRIBUTE_COLUMNS`]. Empty cells are missing values. Rows that cannot be
//! admitted to analysis (suppressed medians, out-of-range percentages) are not
//! errors; they are moved to [`Dataset::dropped`] with a reason so the caller
//! can report them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::descriptive::compute_rpv;
use crate::error::{Error, Result};
use crate::table::{col, DesignTable};

pub const ATTRIBUTE_COLUMNS: [&str; 13] = [
    "geoid",
    "area_code",
    "scope",
    "med_rent_2br",
    "med_value",
    "med_income",
    "perc_pov",
    "perc_white",
    "perc_black",
    "perc_vac",
    "rent_vac",
    "perc_rent",
    "med_year_built",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    City,
    Msa,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::City => "CITY",
            Scope::Msa => "MSA",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CITY" => Ok(Scope::City),
            "MSA" => Ok(Scope::Msa),
            other => Err(Error::Validation(format!("invalid scope `{other}`"))),
        }
    }
}

/// Which scopes a load keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScopeFilter {
    City,
    Msa,
    #[default]
    Both,
}

impl ScopeFilter {
    pub fn admits(self, scope: Scope) -> bool {
        matches!(
            (self, scope),
            (ScopeFilter::Both, _) | (ScopeFilter::City, Scope::City) | (ScopeFilter::Msa, Scope::Msa)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AreaKey {
    pub area_code: String,
    pub scope: Scope,
}

impl AreaKey {
    pub fn new(area_code: impl Into<String>, scope: Scope) -> Self {
        AreaKey {
            area_code: area_code.into(),
            scope,
        }
    }
}

impl fmt::Display for AreaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.area_code, self.scope)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TractRecord {
    pub geoid: String,
    pub area_code: String,
    pub scope: Scope,
    pub med_rent_2br: f64,
    pub med_value: f64,
    pub med_income: Option<f64>,
    pub perc_pov: Option<f64>,
    pub perc_white: Option<f64>,
    pub perc_black: Option<f64>,
    pub perc_vac: Option<f64>,
    pub rent_vac: Option<f64>,
    pub perc_rent: Option<f64>,
    pub med_year_built: Option<i32>,
}

impl TractRecord {
    pub fn area(&self) -> AreaKey {
        AreaKey::new(self.area_code.clone(), self.scope)
    }

    pub fn rpv(&self) -> f64 {
        // admitted records always have positive rent and value
        compute_rpv(self.med_rent_2br, self.med_value).expect("admitted record")
    }

    fn percents(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("perc_pov", self.perc_pov),
            ("perc_white", self.perc_white),
            ("perc_black", self.perc_black),
            ("perc_vac", self.perc_vac),
            ("rent_vac", self.rent_vac),
            ("perc_rent", self.perc_rent),
        ]
    }

    /// Admission rules: positive rent and value, percentages within [0, 100].
    pub fn admission_error(&self) -> Option<String> {
        if !(self.med_rent_2br > 0.0) || !self.med_rent_2br.is_finite() {
            return Some("non-positive med_rent_2br".into());
        }
        if !(self.med_value > 0.0) || !self.med_value.is_finite() {
            return Some("non-positive med_value".into());
        }
        for (name, v) in self.percents() {
            if let Some(v) = v {
                if !(0.0..=100.0).contains(&v) {
                    return Some(format!("{name} out of range"));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedRow {
    pub geoid: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: PathBuf,
    pub loaded_at: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<TractRecord>,
    pub dropped: Vec<DroppedRow>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Geoids of every row seen, admitted or not, in file order.
    pub fn all_geoids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .map(|r| &r.geoid)
            .chain(self.dropped.iter().map(|d| &d.geoid))
            .filter(|g| seen.insert(g.as_str()))
            .cloned()
            .collect()
    }

    pub fn area_records<'a>(&'a self, area: &'a AreaKey) -> impl Iterator<Item = &'a TractRecord> {
        self.records
            .iter()
            .filter(move |r| r.area_code == area.area_code && r.scope == area.scope)
    }

    pub fn areas(&self) -> Vec<AreaKey> {
        let mut keys: Vec<AreaKey> = self.records.iter().map(TractRecord::area).collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Writes the records back out in the attribute schema.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(ATTRIBUTE_COLUMNS)
            .map_err(|e| Error::csv(path, e))?;
        for r in &self.records {
            w.write_record(record_fields(r))
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_dropped(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["geoid", "reason"])
            .map_err(|e| Error::csv(path, e))?;
        for d in &self.dropped {
            w.write_record([&d.geoid, &d.reason])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn record_fields(r: &TractRecord) -> [String; 13] {
    fn opt<T: fmt::Display>(v: Option<T>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    [
        r.geoid.clone(),
        r.area_code.clone(),
        r.scope.to_string(),
        r.med_rent_2br.to_string(),
        r.med_value.to_string(),
        opt(r.med_income),
        opt(r.perc_pov),
        opt(r.perc_white),
        opt(r.perc_black),
        opt(r.perc_vac),
        opt(r.rent_vac),
        opt(r.perc_rent),
        opt(r.med_year_built),
    ]
}

enum RowOutcome {
    Admitted(TractRecord),
    Dropped(String),
}

fn parse_row(cells: &[&str; 13]) -> RowOutcome {
    use RowOutcome::Dropped;

    fn num(name: &str, s: &str) -> std::result::Result<Option<f64>, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(format!("unparsable {name}")),
        }
    }

    let scope = match cells[2].parse::<Scope>() {
        Ok(s) => s,
        Err(_) => return Dropped(format!("invalid scope `{}`", cells[2].trim())),
    };
    let mut values = [None; 9];
    for (slot, i) in values.iter_mut().zip(3..12) {
        match num(ATTRIBUTE_COLUMNS[i], cells[i]) {
            Ok(v) => *slot = v,
            Err(reason) => return Dropped(reason),
        }
    }
    let year = cells[12].trim();
    let med_year_built = if year.is_empty() {
        None
    } else {
        match year.parse::<i32>() {
            Ok(y) => Some(y),
            Err(_) => return Dropped("unparsable med_year_built".into()),
        }
    };
    let [rent, value, income, pov, white, black, vac, rent_vac, perc_rent] = values;
    let Some(med_rent_2br) = rent else {
        return Dropped("missing med_rent_2br".into());
    };
    let Some(med_value) = value else {
        return Dropped("missing med_value".into());
    };
    let record = TractRecord {
        geoid: cells[0].trim().to_string(),
        area_code: cells[1].trim().to_string(),
        scope,
        med_rent_2br,
        med_value,
        med_income: income,
        perc_pov: pov,
        perc_white: white,
        perc_black: black,
        perc_vac: vac,
        rent_vac,
        perc_rent,
        med_year_built,
    };
    match record.admission_error() {
        Some(reason) => Dropped(reason),
        None => RowOutcome::Admitted(record),
    }
}

/// Loads an attribute extract, keeping rows whose scope passes `filter`.
pub fn load_attributes(path: &Path, filter: ScopeFilter) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let mut index = [0usize; 13];
    for (slot, name) in index.iter_mut().zip(ATTRIBUTE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })?;
    }

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let cells: [&str; 13] = std::array::from_fn(|i| row.get(index[i]).unwrap_or(""));
        let geoid = cells[0].trim().to_string();
        let scope_raw = cells[2].trim().to_ascii_uppercase();
        if let Ok(scope) = scope_raw.parse::<Scope>() {
            if !filter.admits(scope) {
                continue;
            }
        }
        if !seen.insert((geoid.clone(), scope_raw.clone())) {
            return Err(Error::DuplicateTract {
                path: path.to_path_buf(),
                geoid,
                scope: scope_raw,
            });
        }
        match parse_row(&cells) {
            RowOutcome::Admitted(r) => records.push(r),
            RowOutcome::Dropped(reason) => dropped.push(DroppedRow { geoid, reason }),
        }
    }

    Ok(Dataset {
        records,
        dropped,
        provenance: Provenance {
            source: path.to_path_buf(),
            loaded_at: chrono::Utc::now().to_rfc3339(),
        },
    })
}

/// Splits a dataset into one dataset per (area, scope).
pub fn partition_by_area(ds: &Dataset) -> BTreeMap<AreaKey, Dataset> {
    let mut out: BTreeMap<AreaKey, Dataset> = BTreeMap::new();
    for r in &ds.records {
        out.entry(r.area())
            .or_insert_with(|| Dataset {
                records: Vec::new(),
                dropped: Vec::new(),
                provenance: ds.provenance.clone(),
            })
            .records
            .push(r.clone());
    }
    out
}

/// Builds the per-tract analysis table: RPV, log medians and pass-through
/// percentages. Records without a positive income are dropped from the table
/// with a reason; a missing or non-positive year built only blanks `lnMedYr`.
pub fn log_transform(ds: &Dataset) -> DesignTable {
    let mut kept: Vec<&TractRecord> = Vec::with_capacity(ds.records.len());
    let mut dropped = Vec::new();
    for r in &ds.records {
        match r.med_income {
            Some(y) if y > 0.0 => kept.push(r),
            Some(_) => dropped.push(DroppedRow {
                geoid: r.geoid.clone(),
                reason: "non-positive med_income".into(),
            }),
            None => dropped.push(DroppedRow {
                geoid: r.geoid.clone(),
                reason: "missing med_income".into(),
            }),
        }
    }

    let mut t = DesignTable::new(kept.iter().map(|r| r.geoid.clone()).collect());
    let column = |f: &dyn Fn(&TractRecord) -> Option<f64>| kept.iter().map(|r| f(r)).collect();
    let cols: [(&str, Vec<Option<f64>>); 11] = [
        (col::RPV, column(&|r| Some(r.rpv()))),
        (col::PERCPOV, column(&|r| r.perc_pov)),
        (col::LN_MED_Y, column(&|r| r.med_income.map(f64::ln))),
        (col::PERCBLK, column(&|r| r.perc_black)),
        (col::PERCWHT, column(&|r| r.perc_white)),
        (col::PERCVAC, column(&|r| r.perc_vac)),
        (col::RENTVAC, column(&|r| r.rent_vac)),
        (col::LN_MED_VAL, column(&|r| Some(r.med_value.ln()))),
        (col::MEDRENT, column(&|r| Some(r.med_rent_2br))),
        (
            col::LN_MED_YR,
            column(&|r| r.med_year_built.filter(|&y| y > 0).map(|y| f64::from(y).ln())),
        ),
        (col::PERCRENT, column(&|r| r.perc_rent)),
    ];
    for (name, values) in cols {
        t.set_column(name, values).expect("row count matches");
    }
    t.dropped = dropped;
    t
}

//! Synthetic lattice datasets with planted spatial lag parameters.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Draws are
//! taken in a fixed order: every covariate for every cell (cells row-major,
//! covariates in config order, each `lo + (hi - lo) * u` with `u` uniform in
//! [0, 1)), then one standard normal per cell for the noise, then the filler
//! attributes per cell in [`FILLER_ORDER`].

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::contiguity::queen_contiguity;
use crate::error::{Error, Result};
use crate::geometry::{write_geojson, TractGeometry};
use crate::ingest::{Dataset, Provenance, Scope, TractRecord};
use crate::table::{col, DesignTable};
use crate::weights::SpatialWeights;

pub const RESPONSE: &str = "y";

/// Filler attributes, drawn when no covariate supplies them.
pub const FILLER_ORDER: [&str; 9] = [
    "lnMedY", "lnMedVal", "PERCPOV", "PERCWHT", "PERCBLK_SHARE", "PERCVAC", "RENTVAC", "PERCRENT",
    "YEAR",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl CovariateSpec {
    pub fn uniform(name: &str, lo: f64, hi: f64) -> Self {
        CovariateSpec {
            name: name.to_string(),
            lo,
            hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    pub rho_true: f64,
    /// Intercept first, then one coefficient per covariate.
    pub beta_true: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    pub covariates: Vec<CovariateSpec>,
    pub area_code: String,
}

impl SynthConfig {
    /// Generic covariates `x1, x2, ...` uniform on [-5, 5].
    pub fn lattice(rows: usize, cols: usize, rho: f64, beta: &[f64], noise_sd: f64, seed: u64) -> Self {
        SynthConfig {
            rows,
            cols,
            rho_true: rho,
            beta_true: beta.to_vec(),
            noise_sd,
            seed,
            covariates: (1..beta.len())
                .map(|i| CovariateSpec::uniform(&format!("x{i}"), -5.0, 5.0))
                .collect(),
            area_code: "SYN".into(),
        }
    }

    /// Covariates named like the tract regressors, with plausible ranges, so
    /// the generated attribute file runs through the full pipeline.
    pub fn tract_like(rows: usize, cols: usize, rho: f64, noise_sd: f64, seed: u64) -> Self {
        SynthConfig {
            rows,
            cols,
            rho_true: rho,
            beta_true: vec![20.0, 0.8, -2.2, 0.02, 0.01, 0.008],
            noise_sd,
            seed,
            covariates: vec![
                CovariateSpec::uniform(col::LN_MED_Y, 10.0, 11.5),
                CovariateSpec::uniform(col::LN_MED_VAL, 11.0, 13.0),
                CovariateSpec::uniform(col::PERCVAC, 2.0, 30.0),
                CovariateSpec::uniform(col::PERCWHT, 0.0, 100.0),
                CovariateSpec::uniform(col::PERCRENT, 20.0, 80.0),
            ],
            area_code: "SYN".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.beta_true.len() != self.covariates.len() + 1 {
            return Err(Error::Validation(format!(
                "{} coefficients for {} covariates plus intercept",
                self.beta_true.len(),
                self.covariates.len()
            )));
        }
        if n <= self.beta_true.len() + 2 {
            return Err(Error::Validation(format!(
                "lattice of {n} cells too small for {} parameters",
                self.beta_true.len() + 2
            )));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Validation("noise_sd must be non-negative".into()));
        }
        for c in &self.covariates {
            if !(c.lo <= c.hi) {
                return Err(Error::Validation(format!("covariate {}: empty range", c.name)));
            }
            let percent = c.name.starts_with("PERC") || c.name == col::RENTVAC;
            if percent && (c.lo < 0.0 || c.hi > 100.0) {
                return Err(Error::Validation(format!(
                    "covariate {}: percent range outside [0, 100]",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub rho: f64,
    pub noise_sd: f64,
    pub terms: Vec<String>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub geometries: Vec<TractGeometry>,
    /// Row-standardized lattice weights with cached eigenvalues.
    pub weights: SpatialWeights,
    /// `y` plus every covariate, rows in lattice order.
    pub table: DesignTable,
    /// `Xβ + ε`, the right-hand side that was solved for `y`.
    pub rhs: Vec<f64>,
    /// The same draws in the attribute schema; RPV is an increasing affine
    /// map of `y`.
    pub dataset: Dataset,
    pub truth: Truth,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn lattice_geometries(rows: usize, cols: usize) -> Vec<TractGeometry> {
    (0..rows * cols)
        .map(|i| {
            let (r, c) = ((i / cols) as f64, (i % cols) as f64);
            TractGeometry::rect(format!("99{i:09}"), c, r, c + 1.0, r + 1.0)
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let n = cfg.rows * cfg.cols;
    let geometries = lattice_geometries(cfg.rows, cfg.cols);
    let weights = queen_contiguity(&geometries)?
        .row_standardize()
        .with_eigenvalues();
    let (lower, upper) = weights.rho_interval()?;
    if !(cfg.rho_true > lower && cfg.rho_true < upper) {
        return Err(Error::InadmissibleRho {
            rho: cfg.rho_true,
            lower,
            upper,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let covs: Vec<Vec<f64>> = {
        let mut by_cell = vec![vec![0.0; cfg.covariates.len()]; n];
        for cell in by_cell.iter_mut() {
            for (slot, c) in cell.iter_mut().zip(&cfg.covariates) {
                *slot = uniform(&mut rng, c.lo, c.hi);
            }
        }
        by_cell
    };
    let eps: Vec<f64> = (0..n)
        .map(|_| cfg.noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            cfg.beta_true[0]
                + covs[i]
                    .iter()
                    .zip(&cfg.beta_true[1..])
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
                + eps[i]
        })
        .collect();

    let y: Vec<f64> = if cfg.rho_true == 0.0 {
        rhs.clone()
    } else {
        let a = DMatrix::identity(n, n) - weights.to_dense() * cfg.rho_true;
        let sol = a
            .lu()
            .solve(&DVector::from_column_slice(&rhs))
            .ok_or_else(|| Error::Domain("I - rho W is singular".into()))?;
        sol.iter().copied().collect()
    };

    let geoids: Vec<String> = geometries.iter().map(|g| g.geoid.clone()).collect();
    let mut table = DesignTable::new(geoids.clone());
    table.set_column(RESPONSE, y.iter().copied().map(Some).collect())?;
    for (j, c) in cfg.covariates.iter().enumerate() {
        table.set_column(&c.name, covs.iter().map(|row| Some(row[j])).collect())?;
    }

    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let mut fill: Vec<f64> = Vec::with_capacity(FILLER_ORDER.len());
        fill.push(uniform(&mut rng, 10.0, 11.5));
        fill.push(uniform(&mut rng, 11.0, 13.0));
        fill.push(uniform(&mut rng, 5.0, 40.0));
        fill.push(uniform(&mut rng, 0.0, 100.0));
        fill.push(rng.random::<f64>());
        fill.push(uniform(&mut rng, 2.0, 30.0));
        fill.push(uniform(&mut rng, 0.0, 15.0));
        fill.push(uniform(&mut rng, 20.0, 80.0));
        fill.push(uniform(&mut rng, 1900.0, 2000.0));
        let get = |name: &str, filler: usize| {
            cfg.covariates
                .iter()
                .position(|c| c.name == name)
                .map_or(fill[filler], |j| covs[i][j])
        };
        let white = get(col::PERCWHT, 3);
        let black = cfg
            .covariates
            .iter()
            .position(|c| c.name == col::PERCBLK)
            .map_or((100.0 - white) * fill[4], |j| covs[i][j]);
        let med_value = get(col::LN_MED_VAL, 1).exp();
        let rpv = y[i] - ymin + 1.0;
        records.push(TractRecord {
            geoid: geoids[i].clone(),
            area_code: cfg.area_code.clone(),
            scope: Scope::City,
            med_rent_2br: rpv * med_value / 1200.0,
            med_value,
            med_income: Some(get(col::LN_MED_Y, 0).exp()),
            perc_pov: Some(get(col::PERCPOV, 2)),
            perc_white: Some(white),
            perc_black: Some(black),
            perc_vac: Some(get(col::PERCVAC, 5)),
            rent_vac: Some(get(col::RENTVAC, 6)),
            perc_rent: Some(get(col::PERCRENT, 7)),
            med_year_built: Some(fill[8].floor() as i32),
        });
    }

    let truth = Truth {
        rho: cfg.rho_true,
        noise_sd: cfg.noise_sd,
        terms: std::iter::once("Const".to_string())
            .chain(cfg.covariates.iter().map(|c| c.name.clone()))
            .collect(),
        beta: cfg.beta_true.clone(),
    };
    Ok(SynthOutput {
        geometries,
        weights,
        table,
        rhs,
        dataset: Dataset {
            records,
            dropped: Vec::new(),
            provenance: Provenance {
                source: PathBuf::from(format!("synth:seed={}", cfg.seed)),
                loaded_at: String::new(),
            },
        },
        truth,
    })
}

/// Paths written by [`SynthOutput::write`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub attributes: PathBuf,
    pub geometry: PathBuf,
    pub truth: PathBuf,
}

impl SynthOutput {
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles {
            attributes: dir.join("attributes.csv"),
            geometry: dir.join("grid.geojson"),
            truth: dir.join("truth.csv"),
        };
        self.dataset.write_csv(&files.attributes)?;
        write_geojson(&files.geometry, &self.geometries)?;
        let mut w = csv::Writer::from_path(&files.truth).map_err(|e| Error::csv(&files.truth, e))?;
        let mut rows = vec![
            ("rho".to_string(), self.truth.rho),
            ("noise_sd".to_string(), self.truth.noise_sd),
        ];
        rows.extend(
            self.truth
                .terms
                .iter()
                .zip(&self.truth.beta)
                .map(|(t, b)| (format!("beta_{t}"), *b)),
        );
        w.write_record(["param", "value"])
            .map_err(|e| Error::csv(&files.truth, e))?;
        for (p, v) in rows {
            w.write_record([p, v.to_string()])
                .map_err(|e| Error::csv(&files.truth, e))?;
        }
        w.flush().map_err(|e| Error::io(&files.truth, e))?;
        Ok(files)
    }
}

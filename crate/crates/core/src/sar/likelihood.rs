//! Likelihood pieces for the spatial lag model `y = ρWy + Xβ + ε`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::weights::SpatialWeights;

/// Regressor matrix with column names (intercept included when wanted).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        Ok(DesignMatrix { names, x })
    }

    /// Prepends a `Const` column of ones to the given columns.
    pub fn with_intercept(names: &[&str], columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if names.len() != columns.len() || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("ragged regressor columns".into()));
        }
        let x = DMatrix::from_fn(n, columns.len() + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                columns[j - 1][i]
            }
        });
        let names = std::iter::once("Const")
            .chain(names.iter().copied())
            .map(String::from)
            .collect();
        Ok(DesignMatrix { names, x })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }
}

/// Least squares through a thin Householder QR, with a rank check that names
/// every column lying (numerically) in the span of the columns before it.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    qt: DMatrix<f64>,
    r: DMatrix<f64>,
}

const RANK_TOL: f64 = 1e-10;

impl LeastSquares {
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let (n, k) = (design.nrows(), design.ncols());
        if n < k {
            return Err(Error::Shape(format!("{n} rows for {k} columns")));
        }
        let qr = design.x.clone().qr();
        let r = qr.r();
        let collinear: Vec<String> = (0..k)
            .filter(|&j| {
                let norm = design.x.column(j).norm();
                norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm
            })
            .map(|j| design.names[j].clone())
            .collect();
        if !collinear.is_empty() {
            return Err(Error::RankDeficient(collinear));
        }
        Ok(LeastSquares {
            qt: qr.q().transpose(),
            r,
        })
    }

    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = &self.qt * y;
        self.r
            .solve_upper_triangular(&qty)
            .expect("full-rank R is invertible")
    }
}

fn check_rho(eigenvalues: &[f64], rho: f64) -> Result<()> {
    if eigenvalues.iter().all(|&l| 1.0 - rho * l > 0.0) && rho.is_finite() {
        return Ok(());
    }
    let lo = eigenvalues.first().copied().unwrap_or(0.0);
    let hi = eigenvalues.last().copied().unwrap_or(0.0);
    Err(Error::InadmissibleRho {
        rho,
        lower: if lo < 0.0 { 1.0 / lo } else { f64::NEG_INFINITY },
        upper: if hi > 0.0 { 1.0 / hi } else { f64::INFINITY },
    })
}

pub(crate) fn log_det_from_eigenvalues(eigenvalues: &[f64], rho: f64) -> f64 {
    eigenvalues.iter().map(|&l| (1.0 - rho * l).ln()).sum()
}

/// `ln|I - ρW|` as `Σ ln(1 - ρλ_i)` over the eigenvalues of the symmetric
/// form of `W`.
pub fn log_det(w: &SpatialWeights, rho: f64) -> Result<f64> {
    let ev = w.eigenvalues();
    check_rho(&ev, rho)?;
    Ok(log_det_from_eigenvalues(&ev, rho))
}

/// Gaussian constant of the profile likelihood, `-(n/2)(ln 2π + 1)`.
pub(crate) fn profile_constant(n: usize) -> f64 {
    -(n as f64) / 2.0 * ((2.0 * PI).ln() + 1.0)
}

/// Log-likelihood with β and σ² profiled out: for fixed ρ, β̂ is the OLS fit
/// of `(I - ρW) y` on `X` and σ̂² the mean squared residual.
pub fn concentrated_loglik(
    y: &[f64],
    design: &DesignMatrix,
    w: &SpatialWeights,
    rho: f64,
) -> Result<f64> {
    let n = y.len();
    if design.nrows() != n || w.len() != n {
        return Err(Error::Shape(format!(
            "y has {n} rows, X {} and W {}",
            design.nrows(),
            w.len()
        )));
    }
    let ev = w.eigenvalues();
    check_rho(&ev, rho)?;
    let lag = w.lag(y);
    let z = DVector::from_iterator(n, y.iter().zip(&lag).map(|(a, b)| a - rho * b));
    let beta = LeastSquares::new(design)?.solve(&z);
    let e = z - &design.x * beta;
    let sigma2 = e.norm_squared() / n as f64;
    Ok(profile_constant(n) - n as f64 / 2.0 * sigma2.ln() + log_det_from_eigenvalues(&ev, rho))
}

/// Log-likelihood in (β, ρ) with σ² profiled out.
pub(crate) fn profile_loglik(
    y: &DVector<f64>,
    lag: &DVector<f64>,
    x: &DMatrix<f64>,
    eigenvalues: &[f64],
    beta: &DVector<f64>,
    rho: f64,
) -> f64 {
    let n = y.len();
    let e = y - lag * rho - x * beta;
    let sigma2 = e.norm_squared() / n as f64;
    profile_constant(n) - n as f64 / 2.0 * sigma2.ln() + log_det_from_eigenvalues(eigenvalues, rho)
}

//! Spatial lag regression by concentrated maximum likelihood.
//!
//! The model is `y = ρWy + Xβ + ε` with `ε ~ N(0, σ²I)`. For fixed ρ the ML
//! estimates of β and σ² have closed forms, which leaves a one-dimensional
//! likelihood in ρ. The log-determinant `ln|I - ρW|` is evaluated from the
//! eigenvalues of the symmetric matrix similar to `W`, computed once per
//! weights matrix.

mod likelihood;
mod optimize;
mod report;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::table::DesignTable;
use crate::weights::SpatialWeights;

pub use likelihood::{concentrated_loglik, log_det, DesignMatrix, LeastSquares};
pub use optimize::{bisect_decreasing, golden_section_max, GoldenResult};
pub use report::{render_fit_table, FitTable, LabeledFit, TABLE_COLUMNS};

use likelihood::{log_det_from_eigenvalues, profile_constant, profile_loglik};

/// Distance kept from the ends of the admissible ρ interval.
pub const RHO_MARGIN: f64 = 1e-6;
/// Width of the final golden-section bracket.
pub const RHO_TOL: f64 = 1e-8;
/// Relative step for the finite-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-5;
/// Relative likelihood shortfall tolerated when preferring the score root
/// over the golden-section point.
const ROOT_SLACK: f64 = 1e-12;
/// Coarse grid used to bracket the maximum before golden-section search.
const BRACKET_GRID: usize = 64;

/// Response and ordered regressors of one specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SarSpec {
    pub name: String,
    pub response: String,
    pub regressors: Vec<String>,
    pub intercept: bool,
}

impl SarSpec {
    pub fn new(name: &str, response: &str, regressors: &[&str]) -> Result<Self> {
        let spec = SarSpec {
            name: name.to_string(),
            response: response.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            intercept: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regressors.is_empty() {
            return Err(Error::Validation(format!("spec {}: no regressors", self.name)));
        }
        for (i, r) in self.regressors.iter().enumerate() {
            if self.regressors[..i].contains(r) {
                return Err(Error::Validation(format!("spec {}: duplicate regressor {r}", self.name)));
            }
            if *r == self.response {
                return Err(Error::Validation(format!(
                    "spec {}: response {r} used as a regressor",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Rows of `table` with every needed column present.
    pub fn complete_rows(&self, table: &DesignTable) -> Result<Vec<usize>> {
        let mut cols: Vec<&str> = vec![self.response.as_str()];
        cols.extend(self.regressors.iter().map(String::as_str));
        table.complete_rows(&cols)
    }

    /// Response vector and design matrix over `rows`.
    pub fn design(&self, table: &DesignTable, rows: &[usize]) -> Result<(Vec<f64>, DesignMatrix)> {
        let y = table.gather(&self.response, rows)?;
        let cols = self
            .regressors
            .iter()
            .map(|r| table.gather(r, rows))
            .collect::<Result<Vec<_>>>()?;
        let names: Vec<&str> = self.regressors.iter().map(String::as_str).collect();
        let design = if self.intercept {
            DesignMatrix::with_intercept(&names, &cols)?
        } else {
            let x = DMatrix::from_fn(rows.len(), cols.len(), |i, j| cols[j][i]);
            DesignMatrix::new(self.regressors.clone(), x)?
        };
        Ok((y, design))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarFit {
    pub terms: Vec<String>,
    pub beta: Vec<f64>,
    pub rho: f64,
    pub sigma2: f64,
    pub t_stats: Vec<f64>,
    pub rho_t: f64,
    pub log_lik: f64,
    pub aic: f64,
    pub n: usize,
    /// Intercept and regressors plus ρ and σ².
    pub k: usize,
    pub rho_bounds: (f64, f64),
    pub warnings: Vec<String>,
}

impl SarFit {
    pub fn coefficient(&self, term: &str) -> Option<(f64, f64)> {
        let i = self.terms.iter().position(|t| t == term)?;
        Some((self.beta[i], self.t_stats[i]))
    }
}

/// Precomputed pieces shared by every likelihood evaluation of one fit.
struct Problem<'a> {
    y: DVector<f64>,
    lag: DVector<f64>,
    x: &'a DMatrix<f64>,
    eigenvalues: Vec<f64>,
    beta_y: DVector<f64>,
    beta_lag: DVector<f64>,
    resid_y: DVector<f64>,
    resid_lag: DVector<f64>,
}

impl<'a> Problem<'a> {
    fn new(y: &[f64], design: &'a DesignMatrix, w: &SpatialWeights) -> Result<Self> {
        let n = y.len();
        let k = design.ncols() + 2;
        if design.nrows() != n || w.len() != n {
            return Err(Error::Shape(format!(
                "y has {n} rows, X {} and W {}",
                design.nrows(),
                w.len()
            )));
        }
        if n <= k {
            return Err(Error::Validation(format!("{n} observations for {k} parameters")));
        }
        let ls = LeastSquares::new(design)?;
        let yv = DVector::from_column_slice(y);
        let lag = DVector::from_vec(w.lag(y));
        let beta_y = ls.solve(&yv);
        let beta_lag = ls.solve(&lag);
        let resid_y = &yv - &design.x * &beta_y;
        let resid_lag = &lag - &design.x * &beta_lag;
        Ok(Problem {
            y: yv,
            lag,
            x: &design.x,
            eigenvalues: w.eigenvalues(),
            beta_y,
            beta_lag,
            resid_y,
            resid_lag,
        })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn resid(&self, rho: f64) -> DVector<f64> {
        &self.resid_y - &self.resid_lag * rho
    }

    fn concentrated(&self, rho: f64) -> f64 {
        let n = self.n() as f64;
        let sigma2 = self.resid(rho).norm_squared() / n;
        profile_constant(self.n()) - n / 2.0 * sigma2.ln()
            + log_det_from_eigenvalues(&self.eigenvalues, rho)
    }

    /// Derivative of the concentrated likelihood in ρ.
    fn score(&self, rho: f64) -> f64 {
        let e = self.resid(rho);
        let ee = e.norm_squared();
        let jac: f64 = self.eigenvalues.iter().map(|&l| l / (1.0 - rho * l)).sum();
        self.n() as f64 * e.dot(&self.resid_lag) / ee - jac
    }

    fn beta(&self, rho: f64) -> DVector<f64> {
        &self.beta_y - &self.beta_lag * rho
    }

    fn rho_bounds(&self) -> (f64, f64) {
        let lo = self.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = self.eigenvalues.last().copied().unwrap_or(0.0);
        let lower = if lo < -1e-12 { 1.0 / lo } else { -1.0 };
        let upper = if hi > 1e-12 { 1.0 / hi } else { 1.0 };
        (lower, upper)
    }

    fn full(&self, theta: &DVector<f64>) -> f64 {
        let k = theta.len() - 1;
        let beta = theta.rows(0, k).into_owned();
        profile_loglik(&self.y, &self.lag, self.x, &self.eigenvalues, &beta, theta[k])
    }

    /// Central-difference Hessian of the profile likelihood in (β, ρ).
    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let p = theta.len();
        let h: Vec<f64> = theta.iter().map(|t| HESSIAN_STEP * t.abs().max(1.0)).collect();
        let f0 = self.full(theta);
        let eval = |steps: &[(usize, f64)]| {
            let mut t = theta.clone();
            for &(i, s) in steps {
                t[i] += s;
            }
            self.full(&t)
        };
        let mut hess = DMatrix::zeros(p, p);
        for i in 0..p {
            let fp = eval(&[(i, h[i])]);
            let fm = eval(&[(i, -h[i])]);
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            for j in 0..i {
                let fpp = eval(&[(i, h[i]), (j, h[j])]);
                let fpm = eval(&[(i, h[i]), (j, -h[j])]);
                let fmp = eval(&[(i, -h[i]), (j, h[j])]);
                let fmm = eval(&[(i, -h[i]), (j, -h[j])]);
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        hess
    }

    fn finish(&self, design: &DesignMatrix, rho: f64, warnings: Vec<String>) -> SarFit {
        let n = self.n();
        let beta = self.beta(rho);
        let sigma2 = self.resid(rho).norm_squared() / n as f64;
        let log_lik = self.concentrated(rho);
        let k = design.ncols() + 2;

        let mut theta = DVector::zeros(beta.len() + 1);
        theta.rows_mut(0, beta.len()).copy_from(&beta);
        theta[beta.len()] = rho;
        let mut warnings = warnings;
        let se: Vec<f64> = match (-self.hessian(&theta)).try_inverse() {
            Some(cov) => (0..theta.len()).map(|i| cov[(i, i)].sqrt()).collect(),
            None => {
                warnings.push("singular information matrix; t-statistics undefined".into());
                vec![f64::NAN; theta.len()]
            }
        };
        let t_stats = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
        SarFit {
            terms: design.names.clone(),
            beta: beta.iter().copied().collect(),
            rho,
            sigma2,
            t_stats,
            rho_t: rho / se[beta.len()],
            log_lik,
            aic: 2.0 * k as f64 - 2.0 * log_lik,
            n,
            k,
            rho_bounds: self.rho_bounds(),
            warnings,
        }
    }
}

/// Fits the spatial lag model. `w` should be row-standardized; its
/// eigenvalues are computed here unless already cached.
///
/// ρ is found by golden-section search over the admissible interval shrunk by
/// [`RHO_MARGIN`], started from the best point of a coarse grid, and then
/// polished by bisection on the analytic score.
pub fn fit_sar(y: &[f64], design: &DesignMatrix, w: &SpatialWeights) -> Result<SarFit> {
    let prob = Problem::new(y, design, w)?;
    let (lower, upper) = prob.rho_bounds();
    let (lo, hi) = (lower + RHO_MARGIN, upper - RHO_MARGIN);

    let grid: Vec<f64> = (0..=BRACKET_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / BRACKET_GRID as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&r| prob.concentrated(r)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(BRACKET_GRID / 2, |(i, _)| i);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(BRACKET_GRID)];

    let gs = golden_section_max(|r| prob.concentrated(r), a, b, RHO_TOL);
    let mut rho = gs.x;
    // golden section resolves a flat maximum only to about sqrt(eps); the
    // score root is located to full precision when it exists in the bracket
    if let Some(root) = bisect_decreasing(|r| prob.score(r), a, b) {
        let f_root = prob.concentrated(root);
        if f_root >= gs.fx - ROOT_SLACK * gs.fx.abs().max(1.0) {
            rho = root;
        }
    }
    let mut warnings = Vec::new();
    let f_opt = prob.concentrated(rho);
    let at_edge = rho - lo < RHO_TOL || hi - rho < RHO_TOL;
    if at_edge || prob.concentrated(lo) > f_opt || prob.concentrated(hi) > f_opt {
        warnings.push(
            "maximum at the edge of the rho interval; concentrated likelihood may not be unimodal"
                .into(),
        );
    }
    Ok(prob.finish(design, rho, warnings))
}

/// Evaluates the model at a fixed ρ (β and σ² still estimated).
pub fn fit_sar_at(y: &[f64], design: &DesignMatrix, w: &SpatialWeights, rho: f64) -> Result<SarFit> {
    let prob = Problem::new(y, design, w)?;
    let (lower, upper) = prob.rho_bounds();
    if !(rho > lower && rho < upper) {
        return Err(Error::InadmissibleRho { rho, lower, upper });
    }
    Ok(prob.finish(design, rho, Vec::new()))
}

/// Derivative of the concentrated log-likelihood in ρ.
pub fn concentrated_score(y: &[f64], design: &DesignMatrix, w: &SpatialWeights, rho: f64) -> Result<f64> {
    Ok(Problem::new(y, design, w)?.score(rho))
}

//! Acceptance criteria, one line of output each. Runs without the libtest
//! harness; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use common::*;
use rand::Rng;
use rentgap::contiguity::queen_contiguity;
use rentgap::descriptive::{compute_rpv, quantile, quantile_summary, theil_sen_fit, QuantileSummary};
use rentgap::ingest::{load_attributes, partition_by_area, AreaKey, Scope, ScopeFilter};
use rentgap::rank::rank_areas;
use rentgap::sar::{concentrated_loglik, fit_sar, fit_sar_at, log_det, DesignMatrix, SarFit};
use rentgap::synth::{generate, SynthConfig, SynthOutput, RESPONSE};
use rentgap::table::col;
use rentgap::weights::SpatialWeights;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn lattice_fit(out: &SynthOutput) -> (Vec<f64>, DesignMatrix) {
    let y: Vec<f64> = out.table.gather(RESPONSE, &(0..out.table.len()).collect::<Vec<_>>()).unwrap();
    let names: Vec<&str> = out.truth.terms[1..].iter().map(String::as_str).collect();
    let rows: Vec<usize> = (0..out.table.len()).collect();
    let cols: Vec<Vec<f64>> = names.iter().map(|c| out.table.gather(c, &rows).unwrap()).collect();
    (y, DesignMatrix::with_intercept(&names, &cols).unwrap())
}

fn max_beta_error(fit: &SarFit, truth: &[f64]) -> f64 {
    fit.beta.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn c1_parameter_recovery() -> Outcome {
    let start = Instant::now();
    let out = generate(&SynthConfig::lattice(30, 30, 0.4, &[1.0, 2.0, -3.0], 1.0, 7)).map_err(|e| e.to_string())?;
    let (y, d) = lattice_fit(&out);
    let fit = fit_sar(&y, &d, &out.weights).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let db = max_beta_error(&fit, &out.truth.beta);
    ensure!((fit.rho - 0.4).abs() <= 0.05, "rho {:.4}", fit.rho);
    ensure!(db <= 0.1, "max |beta error| {db:.4}");
    ensure!(secs <= 10.0, "took {secs:.2}s");
    Ok(format!("rho {:.4}, max |beta error| {db:.4}, {secs:.2}s", fit.rho))
}

fn c2_noiseless() -> Outcome {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for rho in [-0.3, 0.0, 0.25, 0.6] {
        let out = generate(&SynthConfig::lattice(10, 10, rho, &[1.0, 2.0, -3.0], 0.0, 11)).map_err(|e| e.to_string())?;
        let (y, d) = lattice_fit(&out);
        let fit = fit_sar(&y, &d, &out.weights).map_err(|e| e.to_string())?;
        let (dr, db) = ((fit.rho - rho).abs(), max_beta_error(&fit, &out.truth.beta));
        ensure!(dr <= 1e-6 && db <= 1e-6, "rho0 {rho}: |drho| {dr:e}, max |dbeta| {db:e}");
        worst = (worst.0.max(dr), worst.1.max(db));
    }
    Ok(format!("max |drho| {:.1e}, max |dbeta| {:.1e}", worst.0, worst.1))
}

fn c3_ols_reduction() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let n = r.random_range(12..60);
        let k = r.random_range(1..5);
        let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| r.random::<f64>() * 10.0 - 5.0).collect()).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + cols.iter().map(|c| c[i]).sum::<f64>() + r.random::<f64>()).collect();
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let d = DesignMatrix::with_intercept(&names, &cols).unwrap();
        let mut x = vec![vec![1.0; n]];
        x.extend(cols.iter().cloned());
        let oracle = normal_equations(&x, &y);

        let empty = SpatialWeights::from_edges(ids(n), []).row_standardize().with_eigenvalues();
        let lattice_like = SpatialWeights::from_edges(ids(n), random_graph(&mut r, n, 0.2))
            .row_standardize()
            .with_eigenvalues();
        for fit in [
            fit_sar(&y, &d, &empty).map_err(|e| e.to_string())?,
            fit_sar_at(&y, &d, &lattice_like, 0.0).map_err(|e| e.to_string())?,
        ] {
            let err = max_beta_error(&fit, &oracle);
            ensure!(err <= 1e-10, "trial {trial}: {err:e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("max |dbeta| {worst:.1e} over 20 designs"))
}

fn c4_log_det() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for g in 0..50 {
        let n = r.random_range(2..=50);
        let p = r.random_range(0.03..0.4);
        let edges = random_graph(&mut r, n, p);
        let dense = row_standardized(&adjacency(n, &edges));
        let w = SpatialWeights::from_edges(ids(n), edges).row_standardize().with_eigenvalues();
        let (lo, hi) = w.rho_interval().map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let rho = lo + (hi - lo) * r.random_range(0.01..0.99);
            let m: Mat = (0..n)
                .map(|i| (0..n).map(|j| (i == j) as u8 as f64 - rho * dense[i][j]).collect())
                .collect();
            let got = log_det(&w, rho).map_err(|e| e.to_string())?;
            let err = (got - lu_log_abs_det(m)).abs();
            ensure!(err < 1e-8, "graph {g}, rho {rho}: {err:e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("max |error| {worst:.1e} over 1000 cases"))
}

fn c5_optimizer() -> Outcome {
    let mut fixtures: Vec<SynthOutput> = vec![
        generate(&SynthConfig::lattice(30, 30, 0.4, &[1.0, 2.0, -3.0], 1.0, 7)).unwrap(),
    ];
    for rho in [-0.3, 0.0, 0.25, 0.6] {
        fixtures.push(generate(&SynthConfig::lattice(10, 10, rho, &[1.0, 2.0, -3.0], 0.0, 11)).unwrap());
    }
    for (i, rho) in [-0.8, -0.4, 0.1, 0.5, 0.9].into_iter().enumerate() {
        fixtures.push(generate(&SynthConfig::lattice(9, 8, rho, &[0.5, 1.0, -1.0], 1.5, 50 + i as u64)).unwrap());
        fixtures.push(generate(&SynthConfig::tract_like(7, 7, rho, 1.0, 60 + i as u64)).unwrap());
    }
    let mut worst = f64::NEG_INFINITY;
    for (i, out) in fixtures.iter().enumerate() {
        let (y, d) = lattice_fit(out);
        let fit = fit_sar(&y, &d, &out.weights).map_err(|e| e.to_string())?;
        let (lo, hi) = out.weights.rho_interval().unwrap();
        let (lo, hi) = (lo + 1e-6, hi - 1e-6);
        for k in 0..1000 {
            let rho = lo + (hi - lo) * k as f64 / 999.0;
            let ll = concentrated_loglik(&y, &d, &out.weights, rho).map_err(|e| e.to_string())?;
            ensure!(ll <= fit.log_lik + 1e-6, "fixture {i}: grid rho {rho} gives {ll} > {}", fit.log_lik);
            worst = worst.max(ll - fit.log_lik);
        }
    }
    Ok(format!("{} fixtures, best grid excess {worst:.1e}", fixtures.len()))
}

fn c6_theil_sen() -> Outcome {
    let mut r = rng(6);
    for t in 0..100 {
        let n = r.random_range(2..=200);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x = if t % 4 == 0 { r.random_range(0..10) as f64 } else { r.random::<f64>() * 20.0 };
                (x, 0.7 * x + 3.0 + (r.random::<f64>() - 0.5) * 5.0)
            })
            .collect();
        let (b, a) = theil_sen_oracle(&pts).ok_or("degenerate fixture")?;
        let l = theil_sen_fit(&pts).map_err(|e| e.to_string())?;
        ensure!(l.slope == b && l.intercept == a, "dataset {t}: ({}, {}) vs ({b}, {a})", l.slope, l.intercept);

        // scaling by powers of two is exact in floating point
        let (sx, sy) = (2f64.powi(r.random_range(-6..6)), 2f64.powi(r.random_range(-6..6)));
        let s = theil_sen_fit(&pts.iter().map(|&(x, y)| (x * sx, y * sy)).collect::<Vec<_>>()).unwrap();
        ensure!(s.slope == l.slope * sy / sx && s.intercept == l.intercept * sy, "dataset {t}: scale equivariance");

        // translation on data whose arithmetic is exact: x in {0, 1, 2}, integer y
        let ipts: Vec<(f64, f64)> = (0..n)
            .map(|_| (r.random_range(0..3) as f64, r.random_range(-500..500) as f64))
            .collect();
        if let Ok(base) = theil_sen_fit(&ipts) {
            let c = r.random_range(-500..500) as f64;
            let sh = theil_sen_fit(&ipts.iter().map(|&(x, y)| (x, y + c)).collect::<Vec<_>>()).unwrap();
            ensure!(sh.slope == base.slope && sh.intercept == base.intercept + c, "dataset {t}: translation");
        }
    }
    Ok("100 datasets equal to all-pairs oracle; equivariance exact".into())
}

fn c7_quantiles() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for v in 0..1000 {
        let n = r.random_range(1..=400);
        let values: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 40.0).collect();
        for p in [0.5, 0.75, 0.9, 0.95, r.random::<f64>()] {
            let got = quantile(&values, p).map_err(|e| e.to_string())?;
            let err = (got - type7(&values, p)).abs();
            ensure!(err <= 1e-12 * got.abs().max(1.0), "vector {v}, p {p}: {err:e}");
            worst = worst.max(err);
        }
        let s = QuantileSummary::from_values(&AreaKey::new("X", Scope::City), &values).unwrap();
        ensure!(s.q50 <= s.q75 && s.q75 <= s.q90 && s.q90 <= s.q95, "vector {v}: not monotone");
    }
    Ok(format!("1000 vectors, max |error| {worst:.1e}, q50 <= q75 <= q90 <= q95"))
}

fn c8_contiguity() -> Outcome {
    for k in [3usize, 5, 10] {
        let fx = grid_fixture(k, k);
        let w = queen_contiguity(&fx.geometries(|x, y| (x as f64, y as f64))).map_err(|e| e.to_string())?;
        for rr in 0..k {
            for c in 0..k {
                let border = (rr == 0 || rr == k - 1) as u8 + (c == 0 || c == k - 1) as u8;
                let want = [8, 5, 3][border as usize];
                ensure!(w.neighbors(rr * k + c).len() == want, "k={k} cell ({rr},{c})");
            }
        }
    }
    let mut r = rng(8);
    let mut count = 0;
    for t in 0..60 {
        let (a, b, m) = (r.random_range(2..=10), r.random_range(2..=10), r.random_range(2..=60));
        let fx = match t % 4 {
            0 => holey_grid(&mut r, a, b, 0.75),
            1 => labeled_grid(&mut r, a, b, m),
            2 => brick_fixture(a, b, t % 8 == 2),
            _ => grid_fixture(a, b),
        };
        if fx.len() == 0 || fx.len() > 100 {
            continue;
        }
        let geoms = if t % 3 == 0 && t % 4 != 2 {
            fx.geometries(jitter(t as u64, 0.2))
        } else {
            fx.geometries(|x, y| (x as f64, y as f64))
        };
        let w = queen_contiguity(&geoms).map_err(|e| e.to_string())?;
        ensure!(w.edges() == fx.brute_force_pairs(), "fixture {t} differs from brute force");
        count += 1;
    }
    Ok(format!("3x3/5x5/10x10 counts; {count} fixtures equal to brute force"))
}

fn c9_zscores() -> Outcome {
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut areas = 0;
    for seed in 0..10 {
        let mut cfg = SynthConfig::tract_like(6, 7, 0.3, 1.0, seed);
        cfg.area_code = format!("A{seed}");
        let out = generate(&cfg).unwrap();
        for part in partition_by_area(&out.dataset).values() {
            let t = rentgap::pipeline::area_table(part);
            let z: Vec<f64> = t.column(col::ZRPV).unwrap().iter().map(|v| v.unwrap()).collect();
            let n = z.len() as f64;
            let m = z.iter().sum::<f64>() / n;
            let sd = (z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
            ensure!(m.abs() <= 1e-12 && (sd - 1.0).abs() <= 1e-12, "area {seed}: mean {m:e}, sd {sd}");
            worst = (worst.0.max(m.abs()), worst.1.max((sd - 1.0).abs()));
            areas += 1;
        }
    }
    Ok(format!("{areas} areas, max |mean| {:.1e}, max |sd - 1| {:.1e}", worst.0, worst.1))
}

fn c10_rpv() -> Outcome {
    let det = compute_rpv(789.0, 41400.0).map_err(|e| e.to_string())?;
    let mke = compute_rpv(845.0, 99300.0).map_err(|e| e.to_string())?;
    ensure!((det - 22.8696).abs() <= 1e-4, "DET {det}");
    ensure!((mke - 10.2115).abs() <= 1e-4, "MKE {mke}");
    Ok(format!("DET {det:.4}, MKE {mke:.4}"))
}

fn c11_report_shape() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (inputs, out) = (dir.path().join("in"), dir.path().join("out"));
    let arg = |p: &Path| p.to_str().unwrap().to_string();
    let code = rentgap::cli::run(["rentgap", "synth", "--rows", "8", "--cols", "8", "--seed", "7", "--out", &arg(&inputs)]);
    ensure!(code == 0, "synth exit {code}");
    let code = rentgap::cli::run([
        "rentgap".to_string(),
        "all".into(),
        "--attributes".into(),
        arg(&inputs.join("attributes.csv")),
        "--geometry".into(),
        arg(&inputs.join("grid.geojson")),
        "--out".into(),
        arg(&out),
    ]);
    ensure!(code == 0, "all exit {code}");
    let text = std::fs::read_to_string(out.join("sar_table_city.txt")).map_err(|e| e.to_string())?;
    let wide = std::fs::read_to_string(out.join("sar_table_city.csv")).map_err(|e| e.to_string())?;

    let header: Vec<&str> = text.lines().next().unwrap_or("").split_whitespace().collect();
    ensure!(
        header == ["Const", "lnMedY", "lnMedVal", "PERCVAC", "PERCWHT", "PERCBLK", "PERCRENT", "rho", "AIC"],
        "header {header:?}"
    );
    let rows: Vec<&str> = text.lines().skip(2).collect();
    ensure!(rows.len() == 2 && rows[0].starts_with("SYN") && rows[1].starts_with(' '), "rows {rows:?}");
    let specs: Vec<&str> = wide.lines().skip(1).map(|l| l.split(',').nth(2).unwrap_or("")).collect();
    ensure!(specs == ["PERCWHT", "PERCBLK"], "spec order {specs:?}");
    for line in wide.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        for c in cells[3..10].iter().filter(|c| !c.is_empty()) {
            ensure!(is_coef_cell(c), "cell `{c}`");
        }
    }

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for f in ["sar_table_city.txt", "sar_table_city.csv", "sar_fits.csv"] {
        let want = std::fs::read(golden.join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure!(std::fs::read(out.join(f)).unwrap() == want, "{f} differs from golden copy");
    }
    Ok("paired PERCWHT/PERCBLK rows, coef (|t|) cells, rho and AIC columns; golden match".into())
}

/// `-?d+.ddd (d+.dd)`
fn is_coef_cell(c: &str) -> bool {
    let Some((est, rest)) = c.split_once(" (") else { return false };
    let Some(t) = rest.strip_suffix(')') else { return false };
    let decimals = |s: &str, k: usize| {
        let s = s.strip_prefix('-').unwrap_or(s);
        matches!(s.split_once('.'), Some((i, f)) if !i.is_empty() && i.bytes().all(|b| b.is_ascii_digit())
            && f.len() == k && f.bytes().all(|b| b.is_ascii_digit()))
    };
    decimals(est, 3) && !t.starts_with('-') && decimals(t, 2)
}

fn c12_extract_ranking() -> Option<Outcome> {
    let path = std::env::var_os("RENTGAP_ACS_EXTRACT")?;
    Some((|| {
        let ds = load_attributes(Path::new(&path), ScopeFilter::City).map_err(|e| e.to_string())?;
        let summaries = partition_by_area(&ds)
            .iter()
            .map(|(k, d)| quantile_summary(d, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let ranking = rank_areas(&summaries).ok_or("no city areas")?;
        let first = &ranking.ordered[0].area_code;
        let last = &ranking.ordered[ranking.ordered.len() - 1].area_code;
        ensure!(first == "DET" && last == "SFO", "first {first}, last {last}");
        Ok(format!("{} cities, DET first, SFO last", ranking.ordered.len()))
    })())
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Option<Outcome>)> = vec![
        (1, "SAR parameter recovery", || Some(c1_parameter_recovery())),
        (2, "noiseless identifiability", || Some(c2_noiseless())),
        (3, "OLS reduction", || Some(c3_ols_reduction())),
        (4, "log-determinant oracle", || Some(c4_log_det())),
        (5, "optimizer correctness", || Some(c5_optimizer())),
        (6, "Theil-Sen oracle", || Some(c6_theil_sen())),
        (7, "quantile oracle", || Some(c7_quantiles())),
        (8, "queen contiguity", || Some(c8_contiguity())),
        (9, "z-score normalization", || Some(c9_zscores())),
        (10, "RPV arithmetic", || Some(c10_rpv())),
        (11, "report shape", || Some(c11_report_shape())),
        (12, "extract ranking", c12_extract_ranking),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Some(Err(format!("panicked: {msg}")))
        });
        match result {
            Some(Ok(detail)) => println!("criterion {id:>2} {name}: PASS ({detail})"),
            Some(Err(detail)) => {
                failed += 1;
                println!("criterion {id:>2} {name}: FAIL ({detail})");
            }
            None => println!("criterion {id:>2} {name}: SKIP (set RENTGAP_ACS_EXTRACT to run)"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Test-side oracles. Nothing here calls into the library's numerics: dense
//! linear algebra, eigenvalues, quantiles and adjacency are recomputed from
//! first principles.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rentgap::geometry::TractGeometry;
use rentgap::weights::SpatialWeights;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i:04}")).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Mat, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        assert!(a[c][c].abs() > 1e-300, "singular system");
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            gauss_solve(a.clone(), e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// OLS through the normal equations `X'X b = X'y`; `x` holds columns.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x.len();
    let xtx: Mat = (0..p)
        .map(|i| (0..p).map(|j| dot(&x[i], &x[j])).collect())
        .collect();
    let xty: Vec<f64> = (0..p).map(|i| dot(&x[i], y)).collect();
    gauss_solve(xtx, xty)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln|det a|` from an LU factorization with partial pivoting.
pub fn lu_log_abs_det(mut a: Mat) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, p);
        let d = a[c][c];
        acc += d.abs().ln();
        for r in c + 1..n {
            let f = a[r][c] / d;
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    acc
}

/// Cyclic Jacobi rotations; eigenvalues of a symmetric matrix, ascending.
pub fn jacobi_eigenvalues(mut a: Mat) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Random undirected graph as an edge list over `n` nodes.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                e.push((i, j));
            }
        }
    }
    e
}

/// Binary adjacency as a dense matrix built straight from an edge list.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Mat {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j) in edges {
        if i != j {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
    }
    a
}

/// Row-standardized dense matrix; zero rows stay zero.
pub fn row_standardized(a: &Mat) -> Mat {
    a.iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| if s > 0.0 { v / s } else { 0.0 }).collect()
        })
        .collect()
}

/// `D^(-1/2) A D^(-1/2)` for binary `a`.
pub fn symmetric_standardized(a: &Mat) -> Mat {
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if a[i][j] == 0.0 {
                        0.0
                    } else {
                        a[i][j] / (d[i] * d[j]).sqrt()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn dense_of(w: &SpatialWeights) -> Mat {
    let n = w.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (&j, &v) in w.neighbors(i).iter().zip(w.row_weights(i)) {
            m[i][j] = v;
        }
    }
    m
}

pub fn mat_vec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| dot(r, x)).collect()
}

/// Type-7 quantile written as a weighted average of order statistics.
pub fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let h = (n as f64 - 1.0) * p;
    let j = h.floor() as usize;
    let g = h - j as f64;
    if j + 1 >= n {
        v[n - 1]
    } else {
        (1.0 - g) * v[j] + g * v[j + 1]
    }
}

/// Median of a sorted slice as the interpolated type-7 value at p = 1/2.
pub fn sorted_median(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (lo, hi) = (v[n / 2 - 1], v[n / 2]);
        lo + 0.5 * (hi - lo)
    }
}

/// Brute-force Theil-Sen: every pairwise slope, fully sorted.
pub fn theil_sen_oracle(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut slopes = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (xi, yi) = pts[i];
            let (xj, yj) = pts[j];
            if xi != xj {
                slopes.push((yj - yi) / (xj - xi));
            }
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = sorted_median(&slopes);
    let mut r: Vec<f64> = pts.iter().map(|&(x, y)| y - b * x).collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some((b, sorted_median(&r)))
}

/// Integer polygon fixtures: each tract is a list of closed integer rings.
#[derive(Debug, Clone)]
pub struct IntFixture {
    pub rings: Vec<Vec<Vec<(i64, i64)>>>,
}

impl IntFixture {
    pub fn len(&self) -> usize {
        self.rings.len()
    }

    /// Geometries with every integer vertex `v` mapped through `f`.
    pub fn geometries(&self, f: impl Fn(i64, i64) -> (f64, f64)) -> Vec<TractGeometry> {
        self.rings
            .iter()
            .enumerate()
            .map(|(t, rings)| {
                TractGeometry::new(
                    format!("t{t:04}"),
                    rings
                        .iter()
                        .map(|r| {
                            r.iter()
                                .map(|&(x, y)| {
                                    let (a, b) = f(x, y);
                                    [a, b]
                                })
                                .collect()
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Pairs of tracts whose boundaries share at least one point, by exact
    /// integer segment intersection over every pair of boundary segments.
    pub fn brute_force_pairs(&self) -> Vec<(usize, usize)> {
        let segs: Vec<Vec<((i64, i64), (i64, i64))>> = self
            .rings
            .iter()
            .map(|rings| {
                rings
                    .iter()
                    .flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                if segs[i]
                    .iter()
                    .any(|a| segs[j].iter().any(|b| segments_touch(*a, *b)))
                {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn orient(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
}

fn on_segment(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    orient(a, b, p) == 0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

pub fn segments_touch(s: ((i64, i64), (i64, i64)), t: ((i64, i64), (i64, i64))) -> bool {
    let (a, b) = s;
    let (c, d) = t;
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

fn square(x: i64, y: i64, w: i64, h: i64) -> Vec<(i64, i64)> {
    vec![(x, y), (x + w, y), (x + w, y + h), (x, y + h), (x, y)]
}

/// k×k unit squares, row-major.
pub fn grid_fixture(rows: usize, cols: usize) -> IntFixture {
    let mut rings = Vec::new();
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            rings.push(vec![square(c, r, 1, 1)]);
        }
    }
    IntFixture { rings }
}

/// Grid with each cell kept with probability `keep`.
pub fn holey_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, keep: f64) -> IntFixture {
    let mut rings = Vec::new();
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            if rng.random::<f64>() < keep {
                rings.push(vec![square(c, r, 1, 1)]);
            }
        }
    }
    IntFixture { rings }
}

/// Running-bond bricks 2 wide, alternate rows offset by one unit. With
/// `subdivided` the long edges carry their midpoints as vertices, so every
/// boundary point shared by two bricks is a vertex of both.
pub fn brick_fixture(rows: usize, bricks: usize, subdivided: bool) -> IntFixture {
    let mut rings = Vec::new();
    for r in 0..rows as i64 {
        let off = r % 2;
        for b in 0..bricks as i64 {
            let x = 2 * b + off;
            let ring = if subdivided {
                vec![(x, r), (x + 1, r), (x + 2, r), (x + 2, r + 1), (x + 1, r + 1), (x, r + 1), (x, r)]
            } else {
                square(x, r, 2, 1)
            };
            rings.push(vec![ring]);
        }
    }
    IntFixture { rings }
}

/// Grid cells grouped into tracts by random labels; a tract is the
/// collection of its cells (a multipolygon).
pub fn labeled_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, tracts: usize) -> IntFixture {
    let mut rings: Vec<Vec<Vec<(i64, i64)>>> = vec![Vec::new(); tracts];
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            let t = rng.random_range(0..tracts);
            rings[t].push(square(c, r, 1, 1));
        }
    }
    rings.retain(|r| !r.is_empty());
    IntFixture { rings }
}

/// Vertex jitter that is a function of the lattice point only, so shared
/// vertices move together and the topology is unchanged.
pub fn jitter(seed: u64, scale: f64) -> impl Fn(i64, i64) -> (f64, f64) {
    move |x, y| {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ ((x as u64) << 32) ^ (y as u64 & 0xffff_ffff));
        let dx: f64 = r.random::<f64>() - 0.5;
        let dy: f64 = r.random::<f64>() - 0.5;
        (x as f64 + scale * dx, y as f64 + scale * dy)
    }
}

/// Row-major lattice with queen neighbors, from index arithmetic alone.
pub fn lattice_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            for (dr, dc) in [(0i64, 1i64), (1, -1), (1, 0), (1, 1)] {
                let (r2, c2) = (r as i64 + dr, c as i64 + dc);
                if r2 < rows as i64 && c2 >= 0 && c2 < cols as i64 {
                    e.push((r * cols + c, r2 as usize * cols + c2 as usize));
                }
            }
        }
    }
    e
}

/// Profile log-likelihood of the spatial lag model at `rho`, from dense
/// matrices: regress `(I - ρW) y` on `X` by normal equations and add
/// `ln|I - ρW|` by LU.
pub fn brute_concentrated(y: &[f64], x: &[Vec<f64>], w: &Mat, rho: f64) -> f64 {
    let n = y.len();
    let wy = mat_vec(w, y);
    let z: Vec<f64> = y.iter().zip(&wy).map(|(a, b)| a - rho * b).collect();
    let b = normal_equations(x, &z);
    let e: Vec<f64> = (0..n)
        .map(|i| z[i] - x.iter().zip(&b).map(|(col, bj)| col[i] * bj).sum::<f64>())
        .collect();
    let s2 = dot(&e, &e) / n as f64;
    let a: Mat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (if i == j { 1.0 } else { 0.0 }) - rho * w[i][j])
                .collect()
        })
        .collect();
    let nf = n as f64;
    -nf / 2.0 * ((2.0 * std::f64::consts::PI).ln() + 1.0) - nf / 2.0 * s2.ln() + lu_log_abs_det(a)
}

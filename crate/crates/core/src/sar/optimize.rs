//! One-dimensional maximization by golden-section search.

/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    /// Final bracket; a unimodal maximum lies inside it.
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

/// Maximizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Assumes `f` is unimodal on the interval.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> GoldenResult
where
    F: Fn(f64) -> f64,
{
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut evaluations = 2;
    while hi - lo > tol {
        // NaN compares false, so a NaN at `a` moves the bracket towards `b`
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
        evaluations += 1;
        if evaluations > 10_000 {
            break;
        }
    }
    let (x, fx) = if fa >= fb { (a, fa) } else { (b, fb) };
    GoldenResult {
        x,
        fx,
        lo,
        hi,
        evaluations,
    }
}

/// Shrinks a bracket around a sign change of `g` (positive at `lo`,
/// negative at `hi`) by bisection. Returns `None` when the ends do not
/// straddle a root.
pub fn bisect_decreasing<G>(g: G, mut lo: f64, mut hi: f64) -> Option<f64>
where
    G: Fn(f64) -> f64,
{
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo > 0.0 && ghi < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.is_nan() {
            return Some(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else if gm < 0.0 {
            hi = mid;
        } else {
            return Some(mid);
        }
    }
    Some(0.5 * (lo + hi))
}

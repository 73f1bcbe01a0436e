//! Order-one Queen contiguity from tract polygons.
//!
//! Two tracts are neighbors when their boundaries share at least one point,
//! vertex or edge, within [`SNAP_TOLERANCE`]. Candidate pairs come from two
//! uniform hash grids: one keyed on snapped vertices (catches the usual case
//! of tracts sharing exact vertices) and one over segment bounding boxes
//! (catches T-junctions and crossings). Only segments that land in the same
//! grid cell are ever compared.

use std::collections::{BTreeSet, HashMap};

use crate::error::Result;
use crate::geometry::{validate_set, Point, TractGeometry};
use crate::weights::SpatialWeights;

pub const SNAP_TOLERANCE: f64 = 1e-9;

type Cell = (i64, i64);

fn cell_of(p: Point, origin: Point, size: f64) -> Cell {
    (
        ((p[0] - origin[0]) / size).floor() as i64,
        ((p[1] - origin[1]) / size).floor() as i64,
    )
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn point_segment_dist2(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    ex * ex + ey * ey
}

/// Squared distance between two closed segments (zero when they cross).
pub(crate) fn segment_dist2(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    point_segment_dist2(p1, q1, q2)
        .min(point_segment_dist2(p2, q1, q2))
        .min(point_segment_dist2(q1, p1, p2))
        .min(point_segment_dist2(q2, p1, p2))
}

fn vertex_pairs(geoms: &[TractGeometry], tol: f64, pairs: &mut BTreeSet<(usize, usize)>) {
    let mut grid: HashMap<Cell, Vec<(usize, Point)>> = HashMap::new();
    let origin = [0.0, 0.0];
    for (gi, g) in geoms.iter().enumerate() {
        for ring in &g.rings {
            // the closing point repeats the first
            for &p in &ring[..ring.len() - 1] {
                grid.entry(cell_of(p, origin, tol)).or_default().push((gi, p));
            }
        }
    }
    let tol2 = tol * tol;
    for (&(cx, cy), items) in &grid {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(others) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &(a, pa) in items {
                    for &(b, pb) in others {
                        if a < b {
                            let d2 = (pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2);
                            if d2 <= tol2 {
                                pairs.insert((a, b));
                            }
                        }
                    }
                }
            }
        }
    }
}

fn segment_pairs(geoms: &[TractGeometry], tol: f64, pairs: &mut BTreeSet<(usize, usize)>) {
    let segs: Vec<(usize, Point, Point)> = geoms
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| g.segments().map(move |(a, b)| (gi, a, b)))
        .collect();
    if segs.is_empty() {
        return;
    }
    let mut min = [f64::INFINITY; 2];
    let mut total_len = 0.0;
    for &(_, a, b) in &segs {
        for p in [a, b] {
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
        }
        total_len += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    }
    let mut size = total_len / segs.len() as f64;
    if !(size > 4.0 * tol) {
        size = 4.0 * tol.max(f64::MIN_POSITIVE);
    }

    let mut grid: HashMap<Cell, Vec<u32>> = HashMap::new();
    for (si, &(_, a, b)) in segs.iter().enumerate() {
        let lo = cell_of([a[0].min(b[0]) - tol, a[1].min(b[1]) - tol], min, size);
        let hi = cell_of([a[0].max(b[0]) + tol, a[1].max(b[1]) + tol], min, size);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                grid.entry((cx, cy)).or_default().push(si as u32);
            }
        }
    }

    let tol2 = tol * tol;
    for items in grid.values() {
        for (k, &s) in items.iter().enumerate() {
            let (ga, a1, a2) = segs[s as usize];
            for &t in &items[k + 1..] {
                let (gb, b1, b2) = segs[t as usize];
                if ga == gb {
                    continue;
                }
                let key = (ga.min(gb), ga.max(gb));
                if pairs.contains(&key) {
                    continue;
                }
                if segment_dist2(a1, a2, b1, b2) <= tol2 {
                    pairs.insert(key);
                }
            }
        }
    }
}

/// Binary Queen contiguity over `geoms`, rows ordered as given.
pub fn queen_contiguity(geoms: &[TractGeometry]) -> Result<SpatialWeights> {
    queen_contiguity_with_tolerance(geoms, SNAP_TOLERANCE)
}

pub fn queen_contiguity_with_tolerance(
    geoms: &[TractGeometry],
    tol: f64,
) -> Result<SpatialWeights> {
    validate_set(geoms)?;
    let mut pairs = BTreeSet::new();
    vertex_pairs(geoms, tol, &mut pairs);
    segment_pairs(geoms, tol, &mut pairs);
    let ids = geoms.iter().map(|g| g.geoid.clone()).collect();
    Ok(SpatialWeights::from_edges(ids, pairs))
}

//! Tract polygons and GeoJSON I/O.

use std::collections::HashSet;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Closed ring: at least four points, first equal to last.
pub type Ring = Vec<Point>;

#[derive(Debug, Clone, PartialEq)]
pub struct TractGeometry {
    pub geoid: String,
    /// First ring is the exterior, the rest are holes. MultiPolygon features
    /// contribute all rings of every part.
    pub rings: Vec<Ring>,
}

impl TractGeometry {
    pub fn new(geoid: impl Into<String>, rings: Vec<Ring>) -> Self {
        TractGeometry {
            geoid: geoid.into(),
            rings,
        }
    }

    /// Axis-aligned unit-ish rectangle, handy for lattices.
    pub fn rect(geoid: impl Into<String>, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(
            geoid,
            vec![vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::Geometry {
            geoid: self.geoid.clone(),
            reason,
        };
        if self.rings.is_empty() {
            return Err(bad("no rings".into()));
        }
        for (i, ring) in self.rings.iter().enumerate() {
            if ring.len() < 4 {
                return Err(bad(format!("ring {i} has {} points, need at least 4", ring.len())));
            }
            if ring.first() != ring.last() {
                return Err(bad(format!("ring {i} is not closed")));
            }
            if ring.iter().flatten().any(|c| !c.is_finite()) {
                return Err(bad(format!("ring {i} has non-finite coordinates")));
            }
        }
        Ok(())
    }

    /// Boundary segments of every ring.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings
            .iter()
            .flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }
}

pub fn validate_set(geoms: &[TractGeometry]) -> Result<()> {
    let mut seen = HashSet::new();
    for g in geoms {
        if !seen.insert(g.geoid.as_str()) {
            return Err(Error::Geometry {
                geoid: g.geoid.clone(),
                reason: "duplicate geoid".into(),
            });
        }
        g.validate()?;
    }
    Ok(())
}

fn parse_ring(v: &Value) -> Option<Ring> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some([p.first()?.as_f64()?, p.get(1)?.as_f64()?])
        })
        .collect()
}

fn parse_rings(v: &Value) -> Option<Vec<Ring>> {
    v.as_array()?.iter().map(parse_ring).collect()
}

fn feature_geoid(feature: &Value) -> Option<String> {
    match feature.get("properties")?.get("GEOID")? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads a FeatureCollection of Polygon/MultiPolygon features keyed by a
/// `GEOID` property.
pub fn read_geojson(path: &Path) -> Result<Vec<TractGeometry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root: Value = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Validation(format!("{}: not a FeatureCollection", path.display())))?;

    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let geoid = feature_geoid(f).ok_or_else(|| {
            Error::Validation(format!("{}: feature {i} has no GEOID property", path.display()))
        })?;
        let geom = f.get("geometry").unwrap_or(&Value::Null);
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let rings = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => parse_rings(coords),
            Some("MultiPolygon") => coords
                .as_array()
                .and_then(|parts| parts.iter().map(parse_rings).collect::<Option<Vec<_>>>())
                .map(|parts| parts.into_iter().flatten().collect()),
            _ => None,
        }
        .ok_or_else(|| Error::Geometry {
            geoid: geoid.clone(),
            reason: "expected Polygon or MultiPolygon coordinates".into(),
        })?;
        out.push(TractGeometry::new(geoid, rings));
    }
    validate_set(&out)?;
    Ok(out)
}

pub fn write_geojson(path: &Path, geoms: &[TractGeometry]) -> Result<()> {
    let features: Vec<Value> = geoms
        .iter()
        .map(|g| {
            json!({
                "type": "Feature",
                "properties": { "GEOID": g.geoid },
                "geometry": { "type": "Polygon", "coordinates": g.rings },
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let text = serde_json::to_string_pretty(&doc).expect("geojson serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

//! Sparse spatial weights with row standardization and eigenvalue bounds.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse contiguity weights. Row/column order follows `ids`.
///
/// The binary neighbor structure is always symmetric and free of self-loops;
/// constructors enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    ids: Vec<String>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    standardized: bool,
    eigenvalues: Option<Vec<f64>>,
}

impl SpatialWeights {
    /// Binary weights from undirected edges. Self-loops are ignored and the
    /// edge set is symmetrized.
    pub fn from_edges(ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = ids.len();
        let mut sets = vec![BTreeSet::new(); n];
        for (i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for n = {n}");
            if i != j {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
        let neighbors: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let weights = neighbors.iter().map(|r| vec![1.0; r.len()]).collect();
        SpatialWeights {
            ids,
            neighbors,
            weights,
            standardized: false,
            eigenvalues: None,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn row_weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn island_count(&self) -> usize {
        self.neighbors.iter().filter(|r| r.is_empty()).count()
    }

    /// Undirected edges as (i, j) with i < j, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect()
    }

    pub fn cached_eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Divides each nonempty row by its neighbor count. Islands stay zero.
    pub fn row_standardize(&self) -> SpatialWeights {
        let weights = self
            .neighbors
            .iter()
            .map(|row| vec![1.0 / row.len() as f64; row.len()])
            .collect();
        SpatialWeights {
            ids: self.ids.clone(),
            neighbors: self.neighbors.clone(),
            weights,
            standardized: true,
            eigenvalues: None,
        }
    }

    /// Restricts to `ids` in the given order. Ids with no row here become
    /// islands and are returned in the second slot.
    pub fn subset(&self, ids: &[String]) -> (SpatialWeights, Vec<String>) {
        let here: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let mut to_new: HashMap<usize, usize> = HashMap::new();
        let mut missing = Vec::new();
        for (k, g) in ids.iter().enumerate() {
            match here.get(g.as_str()) {
                Some(&old) => {
                    to_new.insert(old, k);
                }
                None => missing.push(g.clone()),
            }
        }
        let mut edges = Vec::new();
        for (&old, &new) in &to_new {
            for j in &self.neighbors[old] {
                if let Some(&nj) = to_new.get(j) {
                    edges.push((new, nj));
                }
            }
        }
        let w = SpatialWeights::from_edges(ids.to_vec(), edges);
        (if self.standardized { w.row_standardize() } else { w }, missing)
    }

    /// Spatial lag `W y`.
    pub fn lag(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.len(), "lag: length mismatch");
        self.neighbors
            .iter()
            .zip(&self.weights)
            .map(|(nb, w)| nb.iter().zip(w).map(|(&j, &wj)| wj * y[j]).sum())
            .collect()
    }

    /// Dense `W`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, (nb, w)) in self.neighbors.iter().zip(&self.weights).enumerate() {
            for (&j, &wj) in nb.iter().zip(w) {
                m[(i, j)] = wj;
            }
        }
        m
    }

    /// The symmetric matrix similar to `W`: `A` itself for binary weights,
    /// `D^(-1/2) A D^(-1/2)` once row-standardized.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let n = self.len();
        let deg: Vec<f64> = self.neighbors.iter().map(|r| r.len() as f64).collect();
        let mut m = DMatrix::zeros(n, n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                m[(i, j)] = if self.standardized {
                    1.0 / (deg[i] * deg[j]).sqrt()
                } else {
                    1.0
                };
            }
        }
        m
    }

    /// Computes and caches all eigenvalues, sorted ascending.
    pub fn with_eigenvalues(mut self) -> Self {
        if self.eigenvalues.is_none() {
            self.eigenvalues = Some(compute_eigenvalues(&self));
        }
        self
    }

    /// All eigenvalues, from the cache when present.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match &self.eigenvalues {
            Some(ev) => ev.clone(),
            None => compute_eigenvalues(self),
        }
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_bounds(&self) -> Result<(f64, f64)> {
        if self.is_empty() {
            return Err(Error::Domain("eigen_bounds of an empty weights matrix".into()));
        }
        let compute;
        let ev = match &self.eigenvalues {
            Some(ev) => ev.as_slice(),
            None => {
                compute = compute_eigenvalues(self);
                compute.as_slice()
            }
        };
        Ok((ev[0], ev[ev.len() - 1]))
    }

    /// Admissible open interval for the autoregressive parameter,
    /// `(1/λ_min, 1/λ_max)`. Without a negative (positive) eigenvalue the
    /// bound defaults to -1 (1).
    pub fn rho_interval(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.eigen_bounds()?;
        let lower = if lo < -1e-12 { 1.0 / lo } else { -1.0 };
        let upper = if hi > 1e-12 { 1.0 / hi } else { 1.0 };
        Ok((lower, upper))
    }

    pub fn write_edges(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["geoid_i", "geoid_j"])
            .map_err(|e| Error::csv(path, e))?;
        for (i, j) in self.edges() {
            w.write_record([&self.ids[i], &self.ids[j]])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_weights(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["geoid_i", "geoid_j", "weight"])
            .map_err(|e| Error::csv(path, e))?;
        for (i, (nb, ws)) in self.neighbors.iter().zip(&self.weights).enumerate() {
            for (&j, &wj) in nb.iter().zip(ws) {
                w.write_record([self.ids[i].as_str(), self.ids[j].as_str(), &wj.to_string()])
                    .map_err(|e| Error::csv(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

const EIGEN_SNAP: f64 = 1e-12;

fn compute_eigenvalues(w: &SpatialWeights) -> Vec<f64> {
    let mut ev: Vec<f64> = w.symmetric_form().symmetric_eigenvalues().iter().copied().collect();
    if w.standardized {
        // row-stochastic spectrum lies in [-1, 1]; ±1 are exact when present
        for l in &mut ev {
            if (l.abs() - 1.0).abs() < EIGEN_SNAP || l.abs() > 1.0 {
                *l = l.signum();
            }
        }
    }
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone)]
pub struct AdjacencyLoad {
    pub weights: SpatialWeights,
    /// Directed edges whose reverse was missing from the file.
    pub symmetrized_edges: usize,
}

/// Reads a `geoid_i,geoid_j` edge list over the given id order.
pub fn from_adjacency(path: &Path, ids: &[String]) -> Result<AdjacencyLoad> {
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.into(),
            })
    };
    let (ci, cj) = (col("geoid_i")?, col("geoid_j")?);

    let mut directed = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let lookup = |c: usize| {
            let g = row.get(c).unwrap_or("").trim();
            index
                .get(g)
                .copied()
                .ok_or_else(|| Error::UnknownGeoid(g.to_string()))
        };
        let (i, j) = (lookup(ci)?, lookup(cj)?);
        if i != j {
            directed.insert((i, j));
        }
    }
    let symmetrized_edges = directed
        .iter()
        .filter(|&&(i, j)| !directed.contains(&(j, i)))
        .count();
    Ok(AdjacencyLoad {
        weights: SpatialWeights::from_edges(ids.to_vec(), directed),
        symmetrized_edges,
    })
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("duplicate tract {geoid} ({scope}) in {path}")]
    DuplicateTract {
        path: PathBuf,
        geoid: String,
        scope: String,
    },

    #[error("invalid geometry for {geoid}: {reason}")]
    Geometry { geoid: String, reason: String },

    #[error("unknown geoid `{0}`")]
    UnknownGeoid(String),

    #[error("unknown area `{0}`")]
    UnknownArea(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero variance")]
    ZeroVariance,

    #[error("vertical fit: all x values are identical")]
    VerticalFit,

    #[error("rank-deficient design matrix; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("rho = {rho} outside admissible interval ({lower}, {upper})")]
    InadmissibleRho { rho: f64, lower: f64, upper: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

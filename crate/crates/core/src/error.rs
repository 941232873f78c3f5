use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("point ({}, {}) lies outside the grid", .0.x, .0.y)]
    OutOfBounds(Point2),
    #[error("invalid grid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("obstacle {index} has non-finite vertices")]
    NonFinite { index: usize },
    #[error("obstacle {index} is not a convex, non-degenerate polygon")]
    NotConvex { index: usize },
    #[error("world bounds are empty")]
    EmptyBounds,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("window does not overlap the global grid")]
    NoOverlap,
    #[error("map expansion ceiling of {0} reached")]
    ExpansionCeiling(u32),
    #[error("invalid window spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("trace is empty, nothing to plot")]
    EmptyTrace,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in the mesh a pointwise failure happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub element: usize,
    pub point: usize,
    pub x: f64,
    pub z: f64,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "element {} point {} (x = {:.3} m, z = {:.3} m)",
            self.element, self.point, self.x, self.z
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {what} (final residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("at {location}: {source}")]
    AtPoint {
        location: Location,
        #[source]
        source: Box<Error>,
    },

    #[error("at step {step} (t = {time} s): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("non-finite state: {0}")]
    State(String),

    #[error("harness error: {0}")]
    Harness(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
}

/// Coarse error category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, location: Location) -> Self {
        Error::AtPoint {
            location,
            source: Box::new(self),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::Mesh(_) => Category::Config,
            Error::Io { .. } | Error::Format { .. } => Category::Io,
            Error::AtPoint { source, .. } | Error::AtStep { source, .. } => source.category(),
            Error::Domain(_)
            | Error::Convergence { .. }
            | Error::State(_)
            | Error::Harness(_) => Category::Numeric,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("numerical divergence at step {step} (t = {t}): non-finite value in {field}")]
    Divergence { step: u64, t: f64, field: &'static str },

    #[error("positivity violated at step {step} (t = {t}): min(u) = {min} below -{tol:e}*max(u)")]
    Positivity { step: u64, t: f64, min: f64, tol: f64 },

    #[error("stiffness collapse at step {step} (t = {t}): dt = {dt:e} at floor for {count} consecutive steps")]
    Stiffness { step: u64, t: f64, dt: f64, count: u32 },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}

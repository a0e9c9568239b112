//! Configuration, power sweeps and CSV output behind the `fibercap` binary.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{GridSpec, Method, RawConfig, RunConfig};
pub use output::{write_comparison, write_curve, CSV_HEADER};
pub use sweep::{compare, run, sweep};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("method `{method}` requires `{field}`")]
    MissingField { method: String, field: &'static str },
    #[error("configs {first} and {other} use different power grids")]
    GridMismatch { first: usize, other: usize },
    #[error("nothing to compare")]
    NoConfigs,
    #[error(transparent)]
    Core(#[from] fibercap::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

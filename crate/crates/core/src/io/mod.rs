//! File formats and the JSON scenario configuration.

pub mod config;
pub mod files;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{synthesize_noisy, BuiltScenario, ConfigFile, SyntheticSource};
pub use files::{
    ingest_trace, read_input_table, read_phase_table, read_spectrum, write_angle_table,
    write_spectrum, write_surface, write_trace, SpectrumFile,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{}: {message}", path.display(), LineSuffix(*line))]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
}

impl IoError {
    pub(crate) fn parse(path: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(path: &Path, message: impl Into<String>) -> Self {
        IoError::Config {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

struct LineSuffix(Option<u64>);

impl fmt::Display for LineSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(line) => write!(f, " line {line}"),
            None => Ok(()),
        }
    }
}

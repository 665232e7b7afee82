// SPDX-License-Identifier: MIT OR Apache-2.0

//! Library half of the `pwcluster` command-line tool: sample-file ingestion,
//! generation specs, experiment configs and report emission. The binary in
//! `main.rs` only parses arguments and maps errors to exit codes.

#![forbid(unsafe_code)]

pub mod commands;
pub mod experiment;
pub mod genspec;
pub mod ingest;
pub mod report;

use std::path::PathBuf;

/// Errors of the command-line layer, each tied to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] pwcluster::Error),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 usage, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse { .. }
            | CliError::Data(_)
            | CliError::Core(_)
            | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::Internal(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

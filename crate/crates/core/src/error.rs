// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "value {value} at coordinate {coordinate} lies outside [0, 1); normalize the data first"
    )]
    OutsideUnitInterval { value: f64, coordinate: usize },

    #[error("invalid time series '{id}': {reason}")]
    InvalidSeries { id: String, reason: String },

    #[error("no non-zero gap between values: all {count} values are identical")]
    NoNonzeroGap { count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sample of length {len} is too short: {reason}")]
    TooShort { len: usize, reason: String },

    #[error("unsupported measure oracle: {0}")]
    UnsupportedOracle(String),

    #[error("enumeration of {tuples} support tuples exceeds the limit of {limit}")]
    EnumerationLimit { tuples: f64, limit: f64 },

    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    #[error("cluster count m = {m} must satisfy 1 <= m <= N = {n}")]
    ClusterCount { m: usize, n: usize },

    #[error("degenerate distances: {0}")]
    DegenerateDistances(String),
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Clustering of piecewise stationary ergodic time series.
//!
//! Each sample is a real-valued sequence whose time axis splits into
//! segments, each generated by a stationary ergodic process. Two samples
//! belong together when they share the same *set* of segment
//! distributions, regardless of segment order or change-point locations.
//!
//! The crate is organized bottom-up:
//!
//! - [`measure`]: dyadic-cube empirical frequencies and the empirical
//!   distributional distance between sequences.
//! - [`changepoint`]: a list-estimator producing well-separated change-point
//!   candidates from a two-window distance scan.
//! - [`pwdelta`]: the max-min distance between the segment sets of two
//!   piecewise samples.
//! - [`clustering`]: farthest-point initialization and nearest-center
//!   assignment over the pairwise distance matrix.
//! - [`processes`]: synthetic generators, exact measure oracles and the
//!   ground-truth helpers used by the tests.
//!
//! All values fed to the distance routines must lie in `[0, 1)`.

#![forbid(unsafe_code)]

pub mod changepoint;
pub mod clustering;
mod error;
pub mod measure;
pub mod processes;
pub mod pwdelta;
mod series;

pub use changepoint::{list_estimate, score_profile, CandidateList, ScoreProfile};
pub use clustering::{
    assign_remaining, cluster, compare_labels, compare_partitions, farthest_point_init,
    pairwise_delta, ClusteringResult, DistanceMatrix, GroundTruth, PartitionAgreement,
};
pub use error::{Error, Result};
pub use measure::{
    cube_index, default_policy, dhat, dhat_vs_measure, empirical_frequency, min_nonzero_gap,
    CubeMeasure, DyadicCube, FrequencyTable, TruncationPolicy, V_CAP,
};
pub use processes::{
    generate_piecewise, mu_star, true_d, true_delta, ClassSpec, MeasureOracle, PiecewiseSpec,
    ProcessSpec,
};
pub use pwdelta::{delta_hat, effective_length, split_segments, DeltaBreakdown, SegmentSet};
pub use series::TimeSeries;

/// `floor(lambda * n)`, tolerant of the representation error in fractions
/// such as `1/3`.
pub(crate) fn scaled_floor(lambda: f64, n: usize) -> usize {
    let product = lambda * n as f64;
    (product + product.abs() * 1e-12).floor().max(0.0) as usize
}

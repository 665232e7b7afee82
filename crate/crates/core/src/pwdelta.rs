// SPDX-License-Identifier: MIT OR Apache-2.0

//! Distance between two piecewise stationary samples.
//!
//! Each sample is cut at its change-point candidates. The distance is the
//! sum of the two directed max-min distances between the resulting segment
//! sets, every segment compared on its first `n_eff` values.

use serde::{Deserialize, Serialize};

use crate::changepoint::{list_estimate, CandidateList};
use crate::error::{Error, Result};
use crate::measure::{dhat, policy_for, TruncationPolicy};
use crate::scaled_floor;

/// Consecutive segments of one sample, as 1-based inclusive `(start, end)`
/// pairs. Neighbouring segments share their boundary position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSet {
    n: usize,
    segments: Vec<(usize, usize)>,
}

impl SegmentSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// The values of segment `i`.
    pub fn slice<'a>(&self, y: &'a [f64], i: usize) -> &'a [f64] {
        let (start, end) = self.segments[i];
        &y[start - 1..end]
    }

    /// Length of the shortest segment.
    pub fn min_len(&self) -> usize {
        self.segments
            .iter()
            .map(|&(s, e)| e - s + 1)
            .min()
            .unwrap_or(0)
    }
}

/// Cuts `1..=n` at the candidates: `[psi_{i-1}, psi_i]` with `psi_0 = 1` and
/// `psi_{K+1} = n`.
pub fn split_segments(n: usize, candidates: &CandidateList) -> SegmentSet {
    let mut bounds = Vec::with_capacity(candidates.len() + 2);
    bounds.push(1);
    bounds.extend_from_slice(candidates.candidates());
    bounds.push(n);
    let segments = bounds.windows(2).map(|b| (b[0], b[1])).collect();
    SegmentSet { n, segments }
}

/// Common prefix length `floor(min(lambda * n1, lambda * n2))` at which two
/// samples' segments are compared.
pub fn effective_length(lambda: f64, n1: usize, n2: usize) -> usize {
    scaled_floor(lambda, n1).min(scaled_floor(lambda, n2))
}

/// Full output of one distance evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBreakdown {
    pub value: f64,
    pub n_eff: usize,
    pub policy: TruncationPolicy,
    /// `segment_distances[i][j]` compares segment `i` of the first sample
    /// with segment `j` of the second.
    pub segment_distances: Vec<Vec<f64>>,
    pub forward: f64,
    pub backward: f64,
}

/// Max over rows of the row minimum; ties resolve to the earliest index.
fn max_of_mins(rows: impl Iterator<Item = f64>) -> f64 {
    rows.fold(f64::NEG_INFINITY, |best, m| if m > best { m } else { best })
}

/// Distance between two samples whose segment sets are already known.
pub fn delta_with_segments(
    y: &[f64],
    segments_y: &SegmentSet,
    z: &[f64],
    segments_z: &SegmentSet,
    lambda: f64,
) -> Result<DeltaBreakdown> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if segments_y.n() != y.len() || segments_z.n() != z.len() {
        return Err(Error::Precondition(
            "segment sets do not belong to the given samples".into(),
        ));
    }
    let n_eff = effective_length(lambda, y.len(), z.len());
    if n_eff == 0 {
        return Err(Error::TooShort {
            len: y.len().min(z.len()),
            reason: format!("lambda * n is below 1 for lambda = {lambda}"),
        });
    }
    if segments_y.min_len() < n_eff || segments_z.min_len() < n_eff {
        return Err(Error::Precondition(format!(
            "a segment is shorter than the effective length {n_eff}"
        )));
    }
    let policy = policy_for(y, z, n_eff);

    let pairs: Vec<(usize, usize)> = (0..segments_y.len())
        .flat_map(|i| (0..segments_z.len()).map(move |j| (i, j)))
        .collect();
    let eval = |&(i, j): &(usize, usize)| {
        dhat(
            segments_y.slice(y, i),
            segments_z.slice(z, j),
            n_eff,
            &policy,
        )
    };
    #[cfg(feature = "parallel")]
    let flat: Vec<f64> = {
        use rayon::prelude::*;
        pairs.par_iter().map(eval).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let flat: Vec<f64> = pairs.iter().map(eval).collect::<Result<_>>()?;

    let segment_distances: Vec<Vec<f64>> =
        flat.chunks(segments_z.len()).map(<[f64]>::to_vec).collect();
    let forward = max_of_mins(
        segment_distances
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)),
    );
    let backward = max_of_mins((0..segments_z.len()).map(|j| {
        segment_distances
            .iter()
            .map(|row| row[j])
            .fold(f64::INFINITY, f64::min)
    }));
    Ok(DeltaBreakdown {
        value: forward + backward,
        n_eff,
        policy,
        segment_distances,
        forward,
        backward,
    })
}

/// Empirical distance between two piecewise stationary samples.
pub fn delta_hat(y: &[f64], z: &[f64], lambda: f64) -> Result<f64> {
    let cy = list_estimate(y, lambda)?;
    let cz = list_estimate(z, lambda)?;
    let sy = split_segments(y.len(), &cy);
    let sz = split_segments(z.len(), &cz);
    Ok(delta_with_segments(y, &sy, z, &sz, lambda)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(lambda: f64, n: usize, c: &[usize]) -> CandidateList {
        CandidateList::new(lambda, n, c.to_vec(), vec![1.0; c.len()]).unwrap()
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_segments(100, &list(0.25, 100, &[])).segments(),
            &[(1, 100)]
        );
        assert_eq!(
            split_segments(100, &list(0.25, 100, &[40])).segments(),
            &[(1, 40), (40, 100)]
        );
        assert_eq!(
            split_segments(100, &list(0.25, 100, &[30, 70])).segments(),
            &[(1, 30), (30, 70), (70, 100)]
        );
    }

    #[test]
    fn separated_constants() {
        let y = vec![0.25; 64];
        let z = vec![0.75; 64];
        let d = delta_hat(&y, &z, 0.25).unwrap();
        assert!((d - 1.6).abs() < 1e-12, "{d}");
        assert_eq!(delta_hat(&y, &y, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_and_zero_on_identity() {
        let y: Vec<f64> = (0..400).map(|i| ((i * 37 % 101) as f64) / 101.0).collect();
        let z: Vec<f64> = (0..300).map(|i| ((i * 13 % 64) as f64) / 64.0).collect();
        let a = delta_hat(&y, &z, 0.1).unwrap();
        let b = delta_hat(&z, &y, 0.1).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(delta_hat(&y, &y, 0.1).unwrap(), 0.0);
        assert!(a > 0.0 && a < 4.0);
    }

    #[test]
    fn extra_cut_inside_constant_run_changes_nothing() {
        let mut y = vec![0.25; 100];
        y.extend(vec![0.75; 100]);
        let z: Vec<f64> = vec![0.75; 200];
        let coarse = split_segments(200, &list(0.2, 200, &[101]));
        let fine = split_segments(200, &list(0.2, 200, &[50, 101, 150]));
        let whole = split_segments(200, &list(0.2, 200, &[]));
        let a = delta_with_segments(&y, &coarse, &z, &whole, 0.2).unwrap();
        let b = delta_with_segments(&y, &fine, &z, &whole, 0.2).unwrap();
        assert_eq!(a.value, b.value);
    }
}

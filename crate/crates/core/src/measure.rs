// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dyadic-cube empirical measures and the empirical distributional distance.
//!
//! For a window length `u` and a resolution `v`, the cubes of side `2^-v`
//! partition `[0, 1)^u`. The distance between two sequences sums, over a
//! truncated range of `(u, v)`, the weighted L1 discrepancy between the
//! frequencies with which their length-`u` windows fall into each cube.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the resolution level chosen by [`default_policy`].
pub const V_CAP: u32 = 24;

/// Summable positive weight `1 / (j (j + 1))` attached to level `j >= 1`.
pub fn weight(j: usize) -> f64 {
    let j = j as f64;
    1.0 / (j * (j + 1.0))
}

/// Partial sum of [`weight`] over `1..=k`, which equals `k / (k + 1)`.
pub fn weight_sum(k: usize) -> f64 {
    (1..=k).map(weight).sum()
}

/// A single cube of side `2^-v` in `[0, 1)^u`, `u = index.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    v: u32,
    index: Vec<u32>,
}

impl DyadicCube {
    pub fn new(v: u32, index: Vec<u32>) -> Result<Self> {
        if v == 0 || v > 31 {
            return Err(Error::Precondition(format!(
                "resolution level must be in 1..=31, got {v}"
            )));
        }
        if index.is_empty() {
            return Err(Error::Precondition(
                "a cube needs at least one coordinate".into(),
            ));
        }
        let side = 1u64 << v;
        if let Some(&bad) = index.iter().find(|&&i| u64::from(i) >= side) {
            return Err(Error::Precondition(format!(
                "cube coordinate {bad} is out of range for level {v}"
            )));
        }
        Ok(Self { v, index })
    }

    pub fn u(&self) -> usize {
        self.index.len()
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn index(&self) -> &[u32] {
        &self.index
    }

    /// Whether `point` lies in the half-open product of intervals.
    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.index.len() {
            return false;
        }
        let scale = (1u64 << self.v) as f64;
        point.iter().zip(&self.index).all(|(&x, &i)| {
            let lo = f64::from(i) / scale;
            let hi = (f64::from(i) + 1.0) / scale;
            lo <= x && x < hi
        })
    }
}

#[inline]
fn quantize(x: f64, v: u32, coordinate: usize) -> Result<u32> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutsideUnitInterval {
            value: x,
            coordinate,
        });
    }
    // Multiplying by a power of two is exact, so the floor is exact too.
    Ok((x * (1u64 << v) as f64) as u32)
}

/// Index tuple of the level-`v` cube containing `point`.
pub fn cube_index(point: &[f64], v: u32) -> Result<Vec<u32>> {
    if v == 0 || v > 31 {
        return Err(Error::Precondition(format!(
            "resolution level must be in 1..=31, got {v}"
        )));
    }
    point
        .iter()
        .enumerate()
        .map(|(j, &x)| quantize(x, v, j))
        .collect()
}

/// Fraction of the `n - u + 1` length-`u` windows of `x` that fall in `cube`;
/// zero when `x` is shorter than the window.
pub fn empirical_frequency(x: &[f64], cube: &DyadicCube) -> f64 {
    let u = cube.u();
    if x.len() < u {
        return 0.0;
    }
    let windows = x.len() - u + 1;
    let hits = x.windows(u).filter(|w| cube.contains(w)).count();
    hits as f64 / windows as f64
}

/// Window counts per occupied cube at one scale `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    u: usize,
    v: u32,
    counts: BTreeMap<Vec<u32>, usize>,
    window_count: usize,
}

impl FrequencyTable {
    /// Counts the windows of `x` per cube. Windows with a coordinate outside
    /// `[0, 1)` belong to no cube and are skipped.
    pub fn build(x: &[f64], u: usize, v: u32) -> Result<Self> {
        if u == 0 {
            return Err(Error::Precondition("window length must be >= 1".into()));
        }
        if v == 0 || v > 31 {
            return Err(Error::Precondition(format!(
                "resolution level must be in 1..=31, got {v}"
            )));
        }
        let window_count = if x.len() >= u { x.len() - u + 1 } else { 0 };
        let mut counts = BTreeMap::new();
        if window_count > 0 {
            for window in x.windows(u) {
                if let Ok(key) = cube_index(window, v) {
                    *counts.entry(key).or_insert(0) += 1;
                }
            }
        }
        Ok(Self {
            u,
            v,
            counts,
            window_count,
        })
    }

    pub fn scale(&self) -> (usize, u32) {
        (self.u, self.v)
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }

    pub fn counts(&self) -> &BTreeMap<Vec<u32>, usize> {
        &self.counts
    }

    pub fn frequency(&self, index: &[u32]) -> f64 {
        if self.window_count == 0 {
            return 0.0;
        }
        self.counts.get(index).copied().unwrap_or(0) as f64 / self.window_count as f64
    }

    /// Iterator over `(cube index, frequency)` for the occupied cubes.
    pub fn frequencies(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        let total = self.window_count as f64;
        self.counts
            .iter()
            .map(move |(k, &c)| (k.as_slice(), c as f64 / total))
    }
}

/// Smallest strictly positive difference among the pooled values of `x` and
/// `y`. Fails when every value is the same.
pub fn min_nonzero_gap(x: &[f64], y: &[f64]) -> Result<f64> {
    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    pooled.sort_unstable_by(f64::total_cmp);
    pooled
        .windows(2)
        .map(|p| p[1] - p[0])
        .filter(|&gap| gap > 0.0)
        .min_by(f64::total_cmp)
        .ok_or(Error::NoNonzeroGap {
            count: pooled.len(),
        })
}

/// The truncation of the infinite `(u, v)` double sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    u_max: usize,
    v_max: u32,
}

impl TruncationPolicy {
    pub fn new(u_max: usize, v_max: u32) -> Result<Self> {
        if u_max == 0 || v_max == 0 {
            return Err(Error::Precondition(format!(
                "truncation needs u_max >= 1 and v_max >= 1, got ({u_max}, {v_max})"
            )));
        }
        if v_max > 31 {
            return Err(Error::Precondition(format!(
                "v_max = {v_max} exceeds the supported 31 levels"
            )));
        }
        Ok(Self { u_max, v_max })
    }

    pub fn u_max(&self) -> usize {
        self.u_max
    }

    pub fn v_max(&self) -> u32 {
        self.v_max
    }

    /// Upper bound `2 (sum_u w_u)(sum_v w_v)` on any truncated distance.
    pub fn bound(&self) -> f64 {
        2.0 * weight_sum(self.u_max) * weight_sum(self.v_max as usize)
    }
}

/// Truncation derived from the effective length `n` and the smallest gap
/// `s_min` between values: `u_max = max(1, floor(log2 n))` and
/// `v_max = clamp(ceil(-log2 s_min), 1, V_CAP)`.
pub fn default_policy(n: usize, s_min: f64) -> TruncationPolicy {
    let u_max = n.max(1).ilog2().max(1) as usize;
    let levels = -s_min.log2();
    let v_max = if levels.is_nan() || levels <= 1.0 {
        1
    } else {
        (levels.ceil() as u32).min(V_CAP)
    };
    TruncationPolicy { u_max, v_max }
}

/// [`default_policy`] for the pooled values of `x` and `y`, falling back to
/// `v_max = 1` when they are all identical.
pub fn policy_for(x: &[f64], y: &[f64], n: usize) -> TruncationPolicy {
    match min_nonzero_gap(x, y) {
        Ok(s_min) => default_policy(n, s_min),
        Err(_) => default_policy(n, 1.0),
    }
}

const NO_LABEL: u32 = u32::MAX;

/// Empirical distributional distance between the first `n_eff` values of `x`
/// and of `y` under `policy`.
///
/// Only occupied cubes are visited. Scales are refined coarse to fine, and a
/// window whose cube holds windows of one sequence only is retired: every
/// finer cube and every longer window extending it stays one-sided, so its
/// contribution at all later scales is known without revisiting it.
pub fn dhat(x: &[f64], y: &[f64], n_eff: usize, policy: &TruncationPolicy) -> Result<f64> {
    if n_eff == 0 {
        return Err(Error::Precondition("effective length must be >= 1".into()));
    }
    if n_eff > x.len() || n_eff > y.len() {
        return Err(Error::Precondition(format!(
            "effective length {n_eff} exceeds sample lengths ({}, {})",
            x.len(),
            y.len()
        )));
    }
    let n = n_eff;
    let v_max = policy.v_max();
    let levels = v_max as usize;

    // Finest-level symbols for both sequences, laid out back to back:
    // window `c < n` starts in `x`, window `c >= n` starts in `y`.
    let mut finest = Vec::with_capacity(2 * n);
    for (j, &value) in x[..n].iter().chain(&y[..n]).enumerate() {
        finest.push(quantize(value, v_max, j % n)?);
    }
    let symbols: Vec<Vec<u32>> = (1..=v_max)
        .map(|v| finest.iter().map(|&q| q >> (v_max - v)).collect())
        .collect();

    // labels[level][c] = (u, group) for windows still in a two-sided cube at
    // (u, level + 1); entries with an older `u` are stale.
    let mut labels: Vec<Vec<(u32, u32)>> = vec![Vec::new(); levels];
    // mixed[level] = windows in two-sided cubes at the latest u processed.
    let mut mixed: Vec<Vec<u32>> = vec![Vec::new(); levels];
    let mut candidates: Vec<u32> = Vec::with_capacity(2 * n);
    let mut groups: FxHashMap<u64, u32> = FxHashMap::default();
    let mut counts: Vec<(u32, u32)> = Vec::new();
    let mut group_of: Vec<u32> = Vec::with_capacity(2 * n);

    let mut total = 0.0;
    for u in 1..=policy.u_max().min(n) {
        let windows = n - u + 1;
        let stamp = u as u32;
        for level in 0..levels {
            candidates.clear();
            if level == 0 {
                if u == 1 {
                    candidates.extend(0..(2 * n) as u32);
                } else {
                    // Windows of length u - 1 that were two-sided, minus the
                    // last one of each sequence, which cannot be extended.
                    candidates.extend(
                        mixed[0]
                            .iter()
                            .copied()
                            .filter(|&c| (c as usize % n) < windows),
                    );
                }
            } else if u == 1 {
                candidates.extend_from_slice(&mixed[level - 1]);
            } else {
                let previous = &labels[level];
                if !previous.is_empty() {
                    candidates.extend(
                        mixed[level - 1]
                            .iter()
                            .copied()
                            .filter(|&c| previous[c as usize].0 == stamp - 1),
                    );
                }
            }

            mixed[level].clear();
            let mut discrepancy = 2 * windows - candidates.len();
            if !candidates.is_empty() {
                if labels[level].is_empty() {
                    labels[level] = vec![(0, NO_LABEL); 2 * n];
                }
                let symbols_here = &symbols[level];
                let labels_here = &mut labels[level];
                groups.clear();
                counts.clear();
                group_of.clear();
                for &c in &candidates {
                    let last = u64::from(symbols_here[c as usize + u - 1]);
                    let key = if u == 1 {
                        last
                    } else {
                        (u64::from(labels_here[c as usize].1) << 32) | last
                    };
                    let fresh = counts.len() as u32;
                    let group = *groups.entry(key).or_insert(fresh);
                    if group == fresh {
                        counts.push((0, 0));
                    }
                    let slot = &mut counts[group as usize];
                    if (c as usize) < n {
                        slot.0 += 1;
                    } else {
                        slot.1 += 1;
                    }
                    group_of.push(group);
                }
                discrepancy += counts
                    .iter()
                    .map(|&(a, b)| a.abs_diff(b) as usize)
                    .sum::<usize>();
                for (&c, &group) in candidates.iter().zip(&group_of) {
                    let (a, b) = counts[group as usize];
                    if a > 0 && b > 0 {
                        labels_here[c as usize] = (stamp, group);
                        mixed[level].push(c);
                    }
                }
            }
            // Retired windows each sit alone on their side of a cube, which
            // the initial `2 * windows - candidates` accounts for.
            total += weight(u) * weight(level + 1) * discrepancy as f64 / windows as f64;
        }
    }
    Ok(total)
}

/// A measure that can report the exact mass of every dyadic cube.
pub trait CubeMeasure {
    /// Masses of all cubes at scale `(u, v)` with positive measure.
    fn cube_masses(&self, u: usize, v: u32) -> Result<BTreeMap<Vec<u32>, f64>>;
}

/// Empirical distance between the first `n_eff` values of `x` and a measure
/// known exactly on dyadic cubes.
pub fn dhat_vs_measure<M: CubeMeasure + ?Sized>(
    x: &[f64],
    measure: &M,
    n_eff: usize,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if n_eff == 0 || n_eff > x.len() {
        return Err(Error::Precondition(format!(
            "effective length {n_eff} must lie in 1..={}",
            x.len()
        )));
    }
    let x = &x[..n_eff];
    if let Some((j, &bad)) = x.iter().enumerate().find(|(_, v)| !(0.0..1.0).contains(*v)) {
        return Err(Error::OutsideUnitInterval {
            value: bad,
            coordinate: j,
        });
    }
    let mut total = 0.0;
    for u in 1..=policy.u_max() {
        for v in 1..=policy.v_max() {
            let table = FrequencyTable::build(x, u, v)?;
            let masses = measure.cube_masses(u, v)?;
            let mut sum = 0.0;
            for (key, &mass) in &masses {
                sum += (table.frequency(key) - mass).abs();
            }
            for (key, freq) in table.frequencies() {
                if !masses.contains_key(key) {
                    sum += freq;
                }
            }
            total += weight(u) * weight(v as usize) * sum;
        }
    }
    Ok(total)
}

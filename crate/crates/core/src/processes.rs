// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic piecewise stationary ergodic processes and exact oracles.
//!
//! Three segment families are supported: i.i.d. draws from a finite
//! support, stationary finite-state Markov chains, and irrational
//! rotations of the circle (ergodic but not mixing). The two finite
//! families have exact cube masses, which gives a brute-force reference
//! for the empirical distances.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{weight, CubeMeasure, TruncationPolicy, V_CAP};

const PROB_TOLERANCE: f64 = 1e-12;

/// Upper bound on the number of support tuples enumerated per window length.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// A stationary ergodic segment distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess", into = "RawProcess")]
pub enum ProcessSpec {
    IidFinite {
        support: Vec<f64>,
        probs: Vec<f64>,
    },
    MarkovFinite {
        values: Vec<f64>,
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    Rotation {
        angle: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawProcess {
    IidFinite {
        support: Vec<f64>,
        probs: Vec<f64>,
    },
    MarkovFinite {
        values: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    Rotation {
        angle: f64,
    },
}

impl TryFrom<RawProcess> for ProcessSpec {
    type Error = Error;

    fn try_from(raw: RawProcess) -> Result<Self> {
        match raw {
            RawProcess::IidFinite { support, probs } => ProcessSpec::iid(support, probs),
            RawProcess::MarkovFinite { values, transition } => {
                ProcessSpec::markov(values, transition)
            }
            RawProcess::Rotation { angle } => ProcessSpec::rotation(angle),
        }
    }
}

impl From<ProcessSpec> for RawProcess {
    fn from(spec: ProcessSpec) -> Self {
        match spec {
            ProcessSpec::IidFinite { support, probs } => RawProcess::IidFinite { support, probs },
            ProcessSpec::MarkovFinite {
                values, transition, ..
            } => RawProcess::MarkovFinite { values, transition },
            ProcessSpec::Rotation { angle } => RawProcess::Rotation { angle },
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidSpec("support must not be empty".into()));
    }
    for (k, &v) in values.iter().enumerate() {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidSpec(format!("value {v} is outside [0, 1)")));
        }
        if values[..k].contains(&v) {
            return Err(Error::InvalidSpec(format!("value {v} is repeated")));
        }
    }
    Ok(())
}

fn normalized(probs: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidSpec(format!(
            "{what} has a negative or non-finite probability"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidSpec(format!("{what} sums to {sum}, not 1")));
    }
    Ok(probs.into_iter().map(|p| p / sum).collect())
}

/// Whether some power of the transition graph is fully connected. By
/// Wielandt's bound it suffices to check powers up to `(s - 1)^2 + 1`.
fn is_primitive(transition: &[Vec<f64>]) -> bool {
    let s = transition.len();
    let step: Vec<Vec<bool>> = transition
        .iter()
        .map(|row| row.iter().map(|&p| p > 0.0).collect())
        .collect();
    let mut reach = step.clone();
    for _ in 0..((s - 1) * (s - 1) + 1) {
        if reach.iter().all(|row| row.iter().all(|&r| r)) {
            return true;
        }
        reach = (0..s)
            .map(|i| {
                (0..s)
                    .map(|j| (0..s).any(|k| reach[i][k] && step[k][j]))
                    .collect()
            })
            .collect();
    }
    reach.iter().all(|row| row.iter().all(|&r| r))
}

/// Solves `pi T = pi`, `sum(pi) = 1` by Gaussian elimination.
fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    let s = transition.len();
    // Rows of (T^T - I), with the last equation replaced by sum(pi) = 1.
    let mut a: Vec<Vec<f64>> = (0..s)
        .map(|i| {
            let mut row: Vec<f64> = (0..s).map(|j| transition[j][i]).collect();
            row[i] -= 1.0;
            row.push(0.0);
            row
        })
        .collect();
    a[s - 1] = vec![1.0; s + 1];
    for col in 0..s {
        let pivot = (col..s)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        let p = a[col][col];
        for k in col..=s {
            a[col][k] /= p;
        }
        for r in 0..s {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in col..=s {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = a.iter().map(|row| row[s].max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.into_iter().map(|p| p / total).collect()
}

fn draw(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return k;
        }
    }
    // Rounding left r above the cumulative sum: take the last positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl ProcessSpec {
    /// i.i.d. draws of `support[k]` with probability `probs[k]`.
    pub fn iid(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        check_values(&support)?;
        if probs.len() != support.len() {
            return Err(Error::InvalidSpec(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let probs = normalized(probs, "i.i.d. distribution")?;
        Ok(Self::IidFinite { support, probs })
    }

    /// i.i.d. on `{1/4, 3/4}` with mass `p` on `3/4`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::iid(vec![0.25, 0.75], vec![1.0 - p, p])
    }

    /// A stationary Markov chain emitting `values[state]`, started from its
    /// stationary law.
    pub fn markov(values: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        check_values(&values)?;
        let s = values.len();
        if transition.len() != s || transition.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidSpec(format!(
                "transition matrix must be {s} x {s}"
            )));
        }
        let transition = transition
            .into_iter()
            .enumerate()
            .map(|(i, row)| normalized(row, &format!("transition row {i}")))
            .collect::<Result<Vec<_>>>()?;
        if !is_primitive(&transition) {
            return Err(Error::InvalidSpec(
                "transition matrix is not irreducible and aperiodic".into(),
            ));
        }
        let stationary = stationary_distribution(&transition);
        Ok(Self::MarkovFinite {
            values,
            transition,
            stationary,
        })
    }

    /// Two-state chain on `{1/4, 3/4}` that keeps its state with
    /// probability `stay`.
    pub fn sticky_pair(stay: f64) -> Result<Self> {
        Self::markov(
            vec![0.25, 0.75],
            vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
        )
    }

    /// `x_t = frac(phase + t * angle)` with a uniform random phase.
    pub fn rotation(angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "rotation angle must lie in (0, 1), got {angle}"
            )));
        }
        Ok(Self::Rotation { angle })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::IidFinite { .. } => "iid_finite",
            Self::MarkovFinite { .. } => "markov_finite",
            Self::Rotation { .. } => "rotation",
        }
    }

    /// Appends `len` values of a fresh stationary realization.
    pub fn sample_into(&self, rng: &mut impl Rng, len: usize, out: &mut Vec<f64>) {
        out.reserve(len);
        match self {
            Self::IidFinite { support, probs } => {
                out.extend((0..len).map(|_| support[draw(rng, probs)]));
            }
            Self::MarkovFinite {
                values,
                transition,
                stationary,
            } => {
                if len == 0 {
                    return;
                }
                let mut state = draw(rng, stationary);
                out.push(values[state]);
                for _ in 1..len {
                    state = draw(rng, &transition[state]);
                    out.push(values[state]);
                }
            }
            Self::Rotation { angle } => {
                let phase: f64 = rng.random();
                out.extend((0..len).map(|t| {
                    let x = (phase + (t as f64 * angle).fract()).fract();
                    if x < 1.0 {
                        x
                    } else {
                        0.0
                    }
                }));
            }
        }
    }
}

/// A piecewise stationary sample description: segment `j` spans the
/// fraction `(theta_{j-1}, theta_j]` of the length scale, `theta_0 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise", into = "RawPiecewise")]
pub struct PiecewiseSpec {
    thetas: Vec<f64>,
    segments: Vec<ProcessSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPiecewise {
    thetas: Vec<f64>,
    segments: Vec<ProcessSpec>,
}

impl TryFrom<RawPiecewise> for PiecewiseSpec {
    type Error = Error;

    fn try_from(raw: RawPiecewise) -> Result<Self> {
        PiecewiseSpec::new(raw.thetas, raw.segments)
    }
}

impl From<PiecewiseSpec> for RawPiecewise {
    fn from(spec: PiecewiseSpec) -> Self {
        Self {
            thetas: spec.thetas,
            segments: spec.segments,
        }
    }
}

impl PiecewiseSpec {
    pub fn new(thetas: Vec<f64>, segments: Vec<ProcessSpec>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != segments.len() {
            return Err(Error::InvalidSpec(format!(
                "{} segment boundaries for {} segments",
                thetas.len(),
                segments.len()
            )));
        }
        let mut previous = 0.0;
        for &t in &thetas {
            if !(t > previous) {
                return Err(Error::InvalidSpec(format!(
                    "segment boundaries must increase from 0, got {thetas:?}"
                )));
            }
            previous = t;
        }
        if previous > 1.0 {
            return Err(Error::InvalidSpec(format!(
                "last segment boundary {previous} exceeds 1"
            )));
        }
        if let Some(k) = segments.windows(2).position(|p| p[0] == p[1]) {
            return Err(Error::InvalidSpec(format!(
                "segments {} and {} share the same distribution",
                k + 1,
                k + 2
            )));
        }
        Ok(Self { thetas, segments })
    }

    /// A single stationary segment.
    pub fn stationary(spec: ProcessSpec) -> Self {
        Self {
            thetas: vec![1.0],
            segments: vec![spec],
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn segments(&self) -> &[ProcessSpec] {
        &self.segments
    }

    /// Smallest segment fraction.
    pub fn alpha(&self) -> f64 {
        let mut previous = 0.0;
        let mut alpha = f64::INFINITY;
        for &t in &self.thetas {
            alpha = alpha.min(t - previous);
            previous = t;
        }
        alpha
    }

    /// Sample length `floor(n theta_last)` and the change points
    /// `floor(n theta_j)` between segments.
    pub fn layout(&self, n: usize) -> (usize, Vec<usize>) {
        let at = |t: f64| (n as f64 * t).floor() as usize;
        let total = at(*self.thetas.last().expect("validated non-empty"));
        let cuts = self.thetas[..self.thetas.len() - 1]
            .iter()
            .map(|&t| at(t))
            .collect();
        (total, cuts)
    }
}

/// A generated sample and its true change points (1-based, each the last
/// position of a segment).
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSample {
    pub values: Vec<f64>,
    pub change_points: Vec<usize>,
}

/// Generates a piecewise sample at length scale `n`, drawing from `rng`.
pub fn generate_piecewise_with(
    spec: &PiecewiseSpec,
    n: usize,
    rng: &mut impl Rng,
) -> Result<GeneratedSample> {
    if (n as f64) * spec.alpha() < 10.0 {
        return Err(Error::Precondition(format!(
            "n * alpha = {} is below 10",
            n as f64 * spec.alpha()
        )));
    }
    let (total, change_points) = spec.layout(n);
    let mut values = Vec::with_capacity(total);
    let mut start = 0;
    for (k, segment) in spec.segments.iter().enumerate() {
        let end = change_points.get(k).copied().unwrap_or(total);
        segment.sample_into(rng, end - start, &mut values);
        start = end;
    }
    Ok(GeneratedSample {
        values,
        change_points,
    })
}

/// Deterministic generation from a seed.
pub fn generate_piecewise(spec: &PiecewiseSpec, n: usize, seed: u64) -> Result<GeneratedSample> {
    generate_piecewise_with(spec, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// How the samples of one experiment draw their randomness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Every sample gets its own derived seed.
    #[default]
    Independent,
    /// Every sample reuses the base seed, so samples are dependent.
    Shared,
}

/// Seed of sample `index` in a run with base seed `base`.
pub fn sample_seed(base: u64, index: usize, mode: NoiseMode) -> u64 {
    match mode {
        NoiseMode::Shared => base,
        NoiseMode::Independent => {
            // splitmix64 finalizer over the pair.
            let mut z = base
                ^ (index as u64)
                    .wrapping_add(1)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }
    }
}

/// Exact cube masses of an i.i.d. or Markov segment distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureOracle {
    values: Vec<f64>,
    initial: Vec<f64>,
    /// `None` for i.i.d.: every step redraws from `initial`.
    transition: Option<Vec<Vec<f64>>>,
}

impl MeasureOracle {
    /// Fails for rotations and for support values that are not dyadic
    /// rationals resolvable at level [`V_CAP`].
    pub fn new(spec: &ProcessSpec) -> Result<Self> {
        let (values, initial, transition) = match spec {
            ProcessSpec::IidFinite { support, probs } => (support, probs, None),
            ProcessSpec::MarkovFinite {
                values,
                transition,
                stationary,
            } => (values, stationary, Some(transition.clone())),
            ProcessSpec::Rotation { .. } => {
                return Err(Error::UnsupportedOracle(
                    "rotations have no finite cube-mass oracle".into(),
                ))
            }
        };
        let scale = (1u64 << V_CAP) as f64;
        if let Some(v) = values.iter().find(|&&v| (v * scale).fract() != 0.0) {
            return Err(Error::UnsupportedOracle(format!(
                "support value {v} is not a multiple of 2^-{V_CAP}"
            )));
        }
        Ok(Self {
            values: values.clone(),
            initial: initial.clone(),
            transition,
        })
    }

    fn support_size(&self) -> usize {
        self.values.len()
    }

    fn check_enumeration(&self, u: usize) -> Result<()> {
        let tuples = (self.support_size() as f64).powi(u as i32);
        if tuples > ENUMERATION_LIMIT {
            return Err(Error::EnumerationLimit {
                tuples,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }

    /// Every state path of length `u` with positive probability.
    fn paths(&self, u: usize) -> Result<Vec<(Vec<usize>, f64)>> {
        self.check_enumeration(u)?;
        let mut paths: Vec<(Vec<usize>, f64)> = self
            .initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (vec![s], p))
            .collect();
        for _ in 1..u {
            let mut next = Vec::with_capacity(paths.len() * self.support_size());
            for (path, p) in &paths {
                let last = *path.last().expect("paths are non-empty");
                let row = match &self.transition {
                    Some(t) => &t[last],
                    None => &self.initial,
                };
                for (s, &q) in row.iter().enumerate() {
                    if q > 0.0 {
                        let mut extended = path.clone();
                        extended.push(s);
                        next.push((extended, p * q));
                    }
                }
            }
            paths = next;
        }
        Ok(paths)
    }

    fn masses_from_paths(&self, paths: &[(Vec<usize>, f64)], v: u32) -> BTreeMap<Vec<u32>, f64> {
        let scale = (1u64 << v) as f64;
        let mut out = BTreeMap::new();
        for (path, p) in paths {
            let key: Vec<u32> = path
                .iter()
                .map(|&s| (self.values[s] * scale) as u32)
                .collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        out
    }
}

impl CubeMeasure for MeasureOracle {
    fn cube_masses(&self, u: usize, v: u32) -> Result<BTreeMap<Vec<u32>, f64>> {
        if u == 0 || v == 0 || v > V_CAP {
            return Err(Error::UnsupportedOracle(format!(
                "scale ({u}, {v}) is outside 1.. x 1..={V_CAP}"
            )));
        }
        Ok(self.masses_from_paths(&self.paths(u)?, v))
    }
}

fn l1_between(a: &BTreeMap<Vec<u32>, f64>, b: &BTreeMap<Vec<u32>, f64>) -> f64 {
    let mut sum = 0.0;
    for (key, &ma) in a {
        sum += (ma - b.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, &mb) in b {
        if !a.contains_key(key) {
            sum += mb;
        }
    }
    sum
}

/// Truncated distributional distance between two exactly known measures.
pub fn true_d(a: &MeasureOracle, b: &MeasureOracle, policy: &TruncationPolicy) -> Result<f64> {
    if policy.v_max() > V_CAP {
        return Err(Error::UnsupportedOracle(format!(
            "oracles resolve at most {V_CAP} levels"
        )));
    }
    a.check_enumeration(policy.u_max())?;
    b.check_enumeration(policy.u_max())?;
    let mut total = 0.0;
    for u in 1..=policy.u_max() {
        let (pa, pb) = (a.paths(u)?, b.paths(u)?);
        for v in 1..=policy.v_max() {
            // Sum in a fixed order over the pair so that true_d(a, b) and
            // true_d(b, a) agree bit for bit.
            let (ma, mb) = (a.masses_from_paths(&pa, v), b.masses_from_paths(&pb, v));
            let sum = if ma <= mb {
                l1_between(&ma, &mb)
            } else {
                l1_between(&mb, &ma)
            };
            total += weight(u) * weight(v as usize) * sum;
        }
    }
    Ok(total)
}

/// The set of segment distributions of an equivalence class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    distributions: Vec<ProcessSpec>,
}

impl ClassSpec {
    pub fn new(distributions: Vec<ProcessSpec>) -> Result<Self> {
        if distributions.is_empty() {
            return Err(Error::InvalidSpec(
                "a class needs at least one distribution".into(),
            ));
        }
        for (k, d) in distributions.iter().enumerate() {
            if distributions[..k].contains(d) {
                return Err(Error::InvalidSpec(format!(
                    "distribution {} repeats an earlier member",
                    k + 1
                )));
            }
        }
        Ok(Self { distributions })
    }

    pub fn distributions(&self) -> &[ProcessSpec] {
        &self.distributions
    }
}

/// Sum of the two directed max-min distances between the member sets.
pub fn true_delta(a: &ClassSpec, b: &ClassSpec, policy: &TruncationPolicy) -> Result<f64> {
    let oa = a
        .distributions
        .iter()
        .map(MeasureOracle::new)
        .collect::<Result<Vec<_>>>()?;
    let ob = b
        .distributions
        .iter()
        .map(MeasureOracle::new)
        .collect::<Result<Vec<_>>>()?;
    let table = oa
        .iter()
        .map(|x| {
            ob.iter()
                .map(|y| true_d(x, y, policy))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let forward = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let backward = (0..ob.len())
        .map(|j| table.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(forward + backward)
}

/// Index of the segment that generates the largest connected part of the
/// 1-based inclusive interval `start..=end`; the smaller index wins ties.
/// Segment `k` covers `change_points[k-1] + 1 ..= change_points[k]`.
pub fn mu_star(start: usize, end: usize, change_points: &[usize]) -> usize {
    let mut best = (0, 0);
    let mut lo = 1;
    for k in 0..=change_points.len() {
        let hi = change_points.get(k).copied().unwrap_or(usize::MAX);
        let overlap = end.min(hi).saturating_add(1).saturating_sub(start.max(lo));
        if overlap > best.1 {
            best = (k, overlap);
        }
        lo = hi.saturating_add(1);
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{dhat_vs_measure, weight_sum};

    fn point(x: f64) -> ProcessSpec {
        ProcessSpec::iid(vec![x], vec![1.0]).unwrap()
    }

    #[test]
    fn validates_specs() {
        assert!(ProcessSpec::iid(vec![0.25, 0.25], vec![0.5, 0.5]).is_err());
        assert!(ProcessSpec::iid(vec![1.0], vec![1.0]).is_err());
        assert!(ProcessSpec::iid(vec![0.5], vec![0.9]).is_err());
        let tiny = ProcessSpec::iid(vec![0.25, 0.75], vec![0.5, 0.5 + 5e-13]).unwrap();
        if let ProcessSpec::IidFinite { probs, .. } = tiny {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        // Periodic chain.
        assert!(
            ProcessSpec::markov(vec![0.25, 0.75], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_err()
        );
        // Reducible chain.
        assert!(
            ProcessSpec::markov(vec![0.25, 0.75], vec![vec![1.0, 0.0], vec![0.5, 0.5]]).is_err()
        );
        assert!(ProcessSpec::rotation(1.2).is_err());
        assert!(PiecewiseSpec::new(vec![0.5, 1.0], vec![point(0.25), point(0.25)]).is_err());
        assert!(PiecewiseSpec::new(vec![0.6, 0.5], vec![point(0.25), point(0.75)]).is_err());
        assert!(PiecewiseSpec::new(vec![0.5, 1.1], vec![point(0.25), point(0.75)]).is_err());
    }

    #[test]
    fn stationary_law_solves_balance() {
        let spec = ProcessSpec::markov(
            vec![0.0, 0.25, 0.5],
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.2, 0.3, 0.5],
                vec![0.6, 0.0, 0.4],
            ],
        )
        .unwrap();
        let ProcessSpec::MarkovFinite {
            transition,
            stationary,
            ..
        } = &spec
        else {
            unreachable!()
        };
        for j in 0..3 {
            let flow: f64 = (0..3).map(|i| stationary[i] * transition[i][j]).sum();
            assert!((flow - stationary[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn markov_frequencies_approach_stationary_law() {
        let spec = ProcessSpec::markov(
            vec![0.125, 0.5, 0.875],
            vec![
                vec![0.8, 0.1, 0.1],
                vec![0.3, 0.4, 0.3],
                vec![0.05, 0.15, 0.8],
            ],
        )
        .unwrap();
        let ProcessSpec::MarkovFinite { stationary, .. } = &spec else {
            unreachable!()
        };
        let g = generate_piecewise(&PiecewiseSpec::stationary(spec.clone()), 200_000, 11).unwrap();
        for (k, &value) in [0.125, 0.5, 0.875].iter().enumerate() {
            let freq = g.values.iter().filter(|&&x| x == value).count() as f64 / 200_000.0;
            assert!(
                (freq - stationary[k]).abs() < 0.01,
                "{freq} vs {}",
                stationary[k]
            );
        }
    }

    #[test]
    fn generate_examples() {
        let g = generate_piecewise(&PiecewiseSpec::stationary(point(0.25)), 10, 1).unwrap();
        assert_eq!(g.values, vec![0.25; 10]);
        assert!(g.change_points.is_empty());

        let two = PiecewiseSpec::new(vec![0.5, 1.0], vec![point(0.25), point(0.75)]).unwrap();
        let g = generate_piecewise(&two, 20, 1).unwrap();
        let mut expected = vec![0.25; 10];
        expected.extend(vec![0.75; 10]);
        assert_eq!(g.values, expected);
        assert_eq!(g.change_points, vec![10]);

        let rot = PiecewiseSpec::new(
            vec![0.3, 0.9],
            vec![
                ProcessSpec::rotation(0.2).unwrap(),
                ProcessSpec::bernoulli(0.3).unwrap(),
            ],
        )
        .unwrap();
        let a = generate_piecewise(&rot, 1000, 99).unwrap();
        let b = generate_piecewise(&rot, 1000, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 900);
        assert_eq!(a.change_points, vec![300]);
        assert!(a.values.iter().all(|x| (0.0..1.0).contains(x)));
        assert_ne!(a, generate_piecewise(&rot, 1000, 100).unwrap());
    }

    #[test]
    fn layout_uses_cumulative_floors() {
        let spec = PiecewiseSpec::new(vec![0.5, 1.0], vec![point(0.25), point(0.75)]).unwrap();
        assert_eq!(spec.layout(10), (10, vec![5]));
        assert!(matches!(
            generate_piecewise(&spec, 10, 0),
            Err(Error::Precondition(_))
        ));
        assert_eq!(spec.alpha(), 0.5);
    }

    #[test]
    fn seeds_are_shared_or_spread() {
        assert_eq!(sample_seed(7, 3, NoiseMode::Shared), 7);
        let a = sample_seed(7, 0, NoiseMode::Independent);
        let b = sample_seed(7, 1, NoiseMode::Independent);
        assert_ne!(a, b);
    }

    #[test]
    fn true_d_examples() {
        let a = MeasureOracle::new(&point(0.25)).unwrap();
        let b = MeasureOracle::new(&point(0.75)).unwrap();
        let policy = TruncationPolicy::new(4, 1).unwrap();
        assert_eq!(true_d(&a, &a, &policy).unwrap(), 0.0);
        assert!((true_d(&a, &b, &policy).unwrap() - 0.8).abs() < 1e-15);

        // u = 1 slice: w_1 * sum_v w_v * 2|p - q|.
        let p = MeasureOracle::new(&ProcessSpec::bernoulli(0.3).unwrap()).unwrap();
        let q = MeasureOracle::new(&ProcessSpec::bernoulli(0.8).unwrap()).unwrap();
        let policy = TruncationPolicy::new(1, 12).unwrap();
        let expected = 0.5 * weight_sum(12) * 2.0 * 0.5;
        assert!((true_d(&p, &q, &policy).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn oracle_rejects_unsupported_inputs() {
        assert!(MeasureOracle::new(&ProcessSpec::rotation(0.3).unwrap()).is_err());
        assert!(MeasureOracle::new(&point(0.1)).is_err());
        let big = ProcessSpec::iid(
            (0..16).map(|k| k as f64 / 16.0).collect(),
            vec![1.0 / 16.0; 16],
        )
        .unwrap();
        let o = MeasureOracle::new(&big).unwrap();
        let policy = TruncationPolicy::new(6, 4).unwrap();
        assert!(matches!(
            true_d(&o, &o, &policy),
            Err(Error::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn oracle_masses_partition_unity() {
        let spec = ProcessSpec::sticky_pair(0.9).unwrap();
        let o = MeasureOracle::new(&spec).unwrap();
        for u in 1..=4 {
            let masses = o.cube_masses(u, 2).unwrap();
            let total: f64 = masses.values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // Stay-probability 0.9 and pi = (1/2, 1/2).
        let pairs = o.cube_masses(2, 1).unwrap();
        assert!((pairs[&vec![0, 0]] - 0.45).abs() < 1e-15);
        assert!((pairs[&vec![0, 1]] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empirical_distance_to_oracle_matches_point_masses() {
        let policy = TruncationPolicy::new(3, 2).unwrap();
        let o = MeasureOracle::new(&point(0.25)).unwrap();
        assert_eq!(dhat_vs_measure(&[0.25; 20], &o, 20, &policy).unwrap(), 0.0);
    }

    #[test]
    fn true_delta_examples() {
        let policy = TruncationPolicy::new(4, 1).unwrap();
        let a = ClassSpec::new(vec![point(0.25)]).unwrap();
        let b = ClassSpec::new(vec![point(0.75)]).unwrap();
        let ab = ClassSpec::new(vec![point(0.25), point(0.75)]).unwrap();
        assert_eq!(true_delta(&a, &a, &policy).unwrap(), 0.0);
        assert!((true_delta(&a, &b, &policy).unwrap() - 1.6).abs() < 1e-15);
        assert!((true_delta(&a, &ab, &policy).unwrap() - 0.8).abs() < 1e-15);
        assert!(ClassSpec::new(vec![point(0.25), point(0.25)]).is_err());
    }

    #[test]
    fn mu_star_examples() {
        assert_eq!(mu_star(12, 18, &[10, 20]), 1);
        assert_eq!(mu_star(4, 10, &[6]), 1);
        assert_eq!(mu_star(4, 9, &[6]), 0);
        assert_eq!(mu_star(1, 3, &[]), 0);
    }
}

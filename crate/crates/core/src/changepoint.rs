// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point candidate lists.
//!
//! A two-window scan scores every grid position `t` by the empirical
//! distance between the `w` values ending at `t` and the `w` values after
//! it. Greedy suppression then keeps the best-scoring positions that are at
//! least `floor(lambda * n)` apart from each other and from both ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{dhat, policy_for, TruncationPolicy};
use crate::scaled_floor;

/// Two-window distance scores over a grid of positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreProfile {
    window: usize,
    grid_step: usize,
    policy: TruncationPolicy,
    /// `(t, score)` with 1-based `t`; the left window ends at `t`.
    entries: Vec<(usize, f64)>,
}

impl ScoreProfile {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn grid_step(&self) -> usize {
        self.grid_step
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn max_score(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

/// Sorted change-point candidates, 1-based, with their profile scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    lambda: f64,
    n: usize,
    candidates: Vec<usize>,
    scores: Vec<f64>,
}

impl CandidateList {
    /// Builds a list from explicit positions, checking the separation and
    /// cardinality constraints.
    pub fn new(lambda: f64, n: usize, candidates: Vec<usize>, scores: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        if scores.len() != candidates.len() {
            return Err(Error::Precondition(format!(
                "{} candidates but {} scores",
                candidates.len(),
                scores.len()
            )));
        }
        let gap = scaled_floor(lambda, n);
        let mut previous = 1;
        for &c in &candidates {
            if c < previous + gap || c > n {
                return Err(Error::Precondition(format!(
                    "candidate {c} violates the minimum separation {gap} on 1..={n}"
                )));
            }
            previous = c;
        }
        if let Some(&last) = candidates.last() {
            if n - last < gap {
                return Err(Error::Precondition(format!(
                    "candidate {last} is closer than {gap} to the end {n}"
                )));
            }
        }
        if candidates.len() > max_candidates(lambda) {
            return Err(Error::Precondition(format!(
                "{} candidates exceed the limit floor(1/lambda) = {}",
                candidates.len(),
                max_candidates(lambda)
            )));
        }
        Ok(Self {
            lambda,
            n,
            candidates,
            scores,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )))
    }
}

fn max_candidates(lambda: f64) -> usize {
    scaled_floor(1.0 / lambda, 1)
}

/// Scores the grid positions `t = w + k g` (`k >= 1`, `t <= n - w`) with
/// `w = floor(lambda n / 3)` and `g = max(1, floor(w / 10))`.
pub fn score_profile(y: &[f64], lambda: f64) -> Result<ScoreProfile> {
    check_lambda(lambda)?;
    let n = y.len();
    let window = scaled_floor(lambda, n) / 3;
    if window == 0 {
        return Err(Error::TooShort {
            len: n,
            reason: format!(
                "lambda * n = {} leaves no room for a window",
                lambda * n as f64
            ),
        });
    }
    let grid_step = (window / 10).max(1);
    let positions: Vec<usize> = (1..)
        .map(|k| window + k * grid_step)
        .take_while(|&t| t + window <= n)
        .collect();
    if positions.is_empty() {
        return Err(Error::TooShort {
            len: n,
            reason: format!("no position fits two windows of length {window}"),
        });
    }
    let policy = policy_for(y, y, window);
    let score = |t: usize| -> Result<(usize, f64)> {
        let left = &y[t - window..t];
        let right = &y[t..t + window];
        Ok((t, dhat(left, right, window, &policy)?))
    };

    #[cfg(feature = "parallel")]
    let entries = {
        use rayon::prelude::*;
        positions
            .par_iter()
            .map(|&t| score(t))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let entries = positions
        .iter()
        .map(|&t| score(t))
        .collect::<Result<Vec<_>>>()?;

    Ok(ScoreProfile {
        window,
        grid_step,
        policy,
        entries,
    })
}

/// Greedy non-maximum suppression over a finished profile of a sample of
/// length `n`.
pub fn select_candidates(profile: &ScoreProfile, n: usize, lambda: f64) -> Result<CandidateList> {
    check_lambda(lambda)?;
    let gap = scaled_floor(lambda, n);
    let limit = max_candidates(lambda);

    // Highest score first, smaller position on ties.
    let mut order: Vec<&(usize, f64)> = profile.entries.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut chosen: Vec<(usize, f64)> = Vec::new();
    for &(t, score) in order {
        if chosen.len() == limit || score <= 0.0 {
            break;
        }
        // Distance to position 1 is t - 1.
        let clear_of_ends = t > gap && n >= t + gap;
        let clear_of_chosen = chosen.iter().all(|&(c, _)| c.abs_diff(t) >= gap);
        if clear_of_ends && clear_of_chosen {
            chosen.push((t, score));
        }
    }
    chosen.sort_by_key(|c| c.0);
    let (candidates, scores) = chosen.into_iter().unzip();
    CandidateList::new(lambda, n, candidates, scores)
}

/// Candidate change points of `y` at least `floor(lambda n)` apart.
pub fn list_estimate(y: &[f64], lambda: f64) -> Result<CandidateList> {
    let profile = score_profile(y, lambda)?;
    select_candidates(&profile, y.len(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_level(len: usize) -> Vec<f64> {
        let mut y = vec![0.25; len];
        y.extend(vec![0.75; len]);
        y
    }

    #[test]
    fn constant_sample_scores_zero_and_yields_nothing() {
        let y = vec![0.4; 300];
        let profile = score_profile(&y, 0.2).unwrap();
        assert!(profile.entries().iter().all(|&(_, s)| s == 0.0));
        assert!(list_estimate(&y, 0.2).unwrap().is_empty());
        assert!(list_estimate(&y, 0.05).unwrap().is_empty());
    }

    #[test]
    fn pure_windows_give_the_unique_maximum() {
        let y = two_level(6);
        let profile = score_profile(&y, 0.75).unwrap();
        assert_eq!((profile.window(), profile.grid_step()), (3, 1));
        let positions: Vec<usize> = profile.entries().iter().map(|e| e.0).collect();
        assert_eq!(positions, vec![4, 5, 6, 7, 8, 9]);
        let best = profile.max_score();
        let at_best: Vec<usize> = profile
            .entries()
            .iter()
            .filter(|e| e.1 == best)
            .map(|e| e.0)
            .collect();
        assert_eq!(at_best, vec![6]);
    }

    #[test]
    fn finds_the_level_shift() {
        let y = two_level(6);
        let list = list_estimate(&y, 1.0 / 3.0).unwrap();
        assert!(list.candidates().contains(&6), "{list:?}");
    }

    #[test]
    fn rejects_bad_lambda_and_short_samples() {
        let y = two_level(6);
        assert!(matches!(
            score_profile(&y, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            score_profile(&y, 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            score_profile(&y, 0.2),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            score_profile(&[0.1, 0.2], 0.9),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn candidate_list_checks_constraints() {
        assert!(CandidateList::new(0.25, 100, vec![30, 60], vec![1.0, 1.0]).is_ok());
        assert!(CandidateList::new(0.25, 100, vec![20], vec![1.0]).is_err());
        assert!(CandidateList::new(0.25, 100, vec![30, 50], vec![1.0, 1.0]).is_err());
        assert!(CandidateList::new(0.25, 100, vec![80], vec![1.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn candidates_respect_separation_and_count(
            y in prop::collection::vec(
                prop_oneof![(0u32..4).prop_map(|k| f64::from(k) / 4.0), 0.0f64..1.0],
                40..400,
            ),
            lambda in 0.05f64..0.6,
        ) {
            let n = y.len();
            prop_assume!(scaled_floor(lambda, n) >= 3);
            let first = list_estimate(&y, lambda).unwrap();
            let again = list_estimate(&y, lambda).unwrap();
            prop_assert_eq!(&first, &again);
            let gap = scaled_floor(lambda, n);
            let c = first.candidates();
            prop_assert!(c.len() <= max_candidates(lambda));
            prop_assert!(c.windows(2).all(|p| p[1] >= p[0] + gap));
            if let (Some(&lo), Some(&hi)) = (c.first(), c.last()) {
                prop_assert!(lo > gap && hi + gap <= n);
            }
        }
    }
}

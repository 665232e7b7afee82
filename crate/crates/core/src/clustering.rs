// SPDX-License-Identifier: MIT OR Apache-2.0

//! Farthest-point initialization and nearest-center assignment.
//!
//! Samples are 0-indexed here; every argmax/argmin tie resolves to the
//! smallest sample index.

use serde::{Deserialize, Serialize};

use crate::changepoint::{list_estimate, CandidateList};
use crate::error::{Error, Result};
use crate::pwdelta::{delta_with_segments, split_segments, SegmentSet};
use crate::series::TimeSeries;

/// Symmetric, zero-diagonal matrix of pairwise distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates a row-major square matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("distance matrix must be square".into()));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::Precondition(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in 0..n {
                let d = entries[i * n + j];
                if !(d >= 0.0) || d.to_bits() != entries[j * n + i].to_bits() {
                    return Err(Error::Precondition(format!(
                        "entries ({i}, {j}) are negative, NaN or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Evaluates `f` once per unordered pair `i < j`.
    pub fn from_pairs(n: usize, values: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        let mut entries = vec![0.0; n * n];
        for ((i, j), d) in values {
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Per-sample intermediate results of [`pairwise_delta_detailed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSegmentation {
    pub candidates: CandidateList,
    pub segments: SegmentSet,
}

/// Pairwise distances together with the candidate lists they were built
/// from. Each sample's candidate list is computed once.
pub fn pairwise_delta_detailed(
    samples: &[TimeSeries],
    lambda: f64,
) -> Result<(DistanceMatrix, Vec<SampleSegmentation>)> {
    if samples.len() < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let segment = |s: &TimeSeries| -> Result<SampleSegmentation> {
        let candidates = list_estimate(s.values(), lambda)?;
        let segments = split_segments(s.len(), &candidates);
        Ok(SampleSegmentation {
            candidates,
            segments,
        })
    };
    let pairs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|i| (i + 1..samples.len()).map(move |j| (i, j)))
        .collect();

    #[cfg(feature = "parallel")]
    let (segmentations, distances) = {
        use rayon::prelude::*;
        let segs = samples
            .par_iter()
            .map(segment)
            .collect::<Result<Vec<_>>>()?;
        let d = pairs
            .par_iter()
            .map(|&(i, j)| pair_distance(samples, &segs, i, j, lambda))
            .collect::<Result<Vec<_>>>()?;
        (segs, d)
    };
    #[cfg(not(feature = "parallel"))]
    let (segmentations, distances) = {
        let segs = samples.iter().map(segment).collect::<Result<Vec<_>>>()?;
        let d = pairs
            .iter()
            .map(|&(i, j)| pair_distance(samples, &segs, i, j, lambda))
            .collect::<Result<Vec<_>>>()?;
        (segs, d)
    };
    let matrix = DistanceMatrix::from_pairs(samples.len(), pairs.into_iter().zip(distances));
    Ok((matrix, segmentations))
}

fn pair_distance(
    samples: &[TimeSeries],
    segs: &[SampleSegmentation],
    i: usize,
    j: usize,
    lambda: f64,
) -> Result<f64> {
    Ok(delta_with_segments(
        samples[i].values(),
        &segs[i].segments,
        samples[j].values(),
        &segs[j].segments,
        lambda,
    )?
    .value)
}

/// Matrix of [`delta_hat`](crate::delta_hat) over all sample pairs.
pub fn pairwise_delta(samples: &[TimeSeries], lambda: f64) -> Result<DistanceMatrix> {
    pairwise_delta_detailed(samples, lambda).map(|(d, _)| d)
}

/// Picks `m` centers: the first sample, then repeatedly the sample farthest
/// from its nearest chosen center.
pub fn farthest_point_init(d: &DistanceMatrix, m: usize) -> Result<Vec<usize>> {
    let n = d.len();
    if m == 0 || m > n {
        return Err(Error::ClusterCount { m, n });
    }
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = (0..n).map(|i| d.get(i, 0)).collect();
    while centers.len() < m {
        let (best, &far) = nearest
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, cur| {
                if *cur.1 > *acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if centers.contains(&best) {
            return Err(Error::DegenerateDistances(format!(
                "all remaining samples are at distance {far} from the {} chosen centers; \
                 cannot place center {}",
                centers.len(),
                centers.len() + 1
            )));
        }
        centers.push(best);
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(d.get(i, best));
        }
    }
    Ok(centers)
}

/// Parameters recorded alongside a clustering.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    /// Range of `(u_max, v_max)` truncations used across sample pairs.
    pub policy_range: Option<((usize, u32), (usize, u32))>,
}

/// A partition of the samples into `m` clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    m: usize,
    centers: Vec<usize>,
    assignment: Vec<usize>,
    pub params: ClusterParams,
}

impl ClusteringResult {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Center sample of cluster `l`, in initialization order.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Cluster label in `0..m` of every sample.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Member lists of the clusters, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, &l) in self.assignment.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Assigns each sample to the cluster of its nearest center. Equidistant
/// centers resolve to the one with the smaller sample index.
pub fn assign_remaining(d: &DistanceMatrix, centers: &[usize]) -> Result<ClusteringResult> {
    let n = d.len();
    if centers.is_empty() || centers.len() > n {
        return Err(Error::ClusterCount {
            m: centers.len(),
            n,
        });
    }
    for (k, &c) in centers.iter().enumerate() {
        if c >= n {
            return Err(Error::Precondition(format!("center {c} is out of range")));
        }
        if centers[..k].contains(&c) {
            return Err(Error::Precondition(format!("center {c} is repeated")));
        }
    }
    let mut by_index: Vec<(usize, usize)> =
        centers.iter().enumerate().map(|(l, &c)| (c, l)).collect();
    by_index.sort_unstable();
    let assignment = (0..n)
        .map(|i| {
            by_index
                .iter()
                .fold(None::<(f64, usize)>, |best, &(c, l)| {
                    let dist = d.get(i, c);
                    match best {
                        Some((b, _)) if b <= dist => best,
                        _ => Some((dist, l)),
                    }
                })
                .map(|(_, l)| l)
                .unwrap_or(0)
        })
        .collect();
    Ok(ClusteringResult {
        m: centers.len(),
        centers: centers.to_vec(),
        assignment,
        params: ClusterParams::default(),
    })
}

/// Clusters a distance matrix into `m` groups.
pub fn cluster_matrix(d: &DistanceMatrix, m: usize) -> Result<ClusteringResult> {
    let centers = farthest_point_init(d, m)?;
    assign_remaining(d, &centers)
}

/// Clusters piecewise stationary samples into `m` groups.
pub fn cluster(samples: &[TimeSeries], m: usize, lambda: f64) -> Result<ClusteringResult> {
    if m == 0 || m > samples.len() {
        return Err(Error::ClusterCount {
            m,
            n: samples.len(),
        });
    }
    if samples.len() == 1 {
        return Ok(ClusteringResult {
            m: 1,
            centers: vec![0],
            assignment: vec![0],
            params: ClusterParams {
                lambda: Some(lambda),
                ..ClusterParams::default()
            },
        });
    }
    let d = pairwise_delta(samples, lambda)?;
    let mut result = cluster_matrix(&d, m)?;
    result.params.lambda = Some(lambda);
    Ok(result)
}

/// Reference partition as one label per sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    labels: Vec<usize>,
}

impl GroundTruth {
    pub fn from_labels(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    /// Builds labels from arbitrary class names, numbered by first
    /// appearance.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut seen: Vec<&str> = Vec::new();
        let labels = names
            .iter()
            .map(|name| {
                let name = name.as_ref();
                match seen.iter().position(|s| *s == name) {
                    Some(k) => k,
                    None => {
                        seen.push(name);
                        seen.len() - 1
                    }
                }
            })
            .collect();
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// How well a clustering matches a reference partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionAgreement {
    pub exact_match: bool,
    /// Fraction of unordered pairs whose co-membership agrees.
    pub pair_accuracy: f64,
}

/// Compares two labelings of the same samples as set partitions.
pub fn compare_labels(a: &[usize], b: &[usize]) -> Result<PartitionAgreement> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "partitions cover {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(PartitionAgreement {
        exact_match: agree == total,
        pair_accuracy: if total == 0 {
            1.0
        } else {
            agree as f64 / total as f64
        },
    })
}

/// Compares a clustering with the ground truth.
pub fn compare_partitions(a: &ClusteringResult, g: &GroundTruth) -> Result<PartitionAgreement> {
    compare_labels(a.assignment(), g.labels())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block_matrix() -> DistanceMatrix {
        DistanceMatrix::from_rows(vec![
            vec![0.0, 1.0, 5.0, 5.0],
            vec![1.0, 0.0, 5.0, 5.0],
            vec![5.0, 5.0, 0.0, 1.0],
            vec![5.0, 5.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn farthest_point_examples() {
        let d = block_matrix();
        assert_eq!(farthest_point_init(&d, 2).unwrap(), vec![0, 2]);
        assert_eq!(farthest_point_init(&d, 1).unwrap(), vec![0]);
        let zero = DistanceMatrix::from_rows(vec![vec![0.0; 3]; 3]).unwrap();
        assert!(matches!(
            farthest_point_init(&zero, 2),
            Err(Error::DegenerateDistances(_))
        ));
        assert!(matches!(
            farthest_point_init(&d, 5),
            Err(Error::ClusterCount { m: 5, n: 4 })
        ));
    }

    #[test]
    fn assignment_examples() {
        let d = block_matrix();
        let r = assign_remaining(&d, &[0, 2]).unwrap();
        assert_eq!(r.clusters(), vec![vec![0, 1], vec![2, 3]]);
        for (l, &c) in r.centers().iter().enumerate() {
            assert_eq!(r.assignment()[c], l);
        }
        // Sample 1 is equidistant from centers 2 and 0.
        let tie = DistanceMatrix::from_rows(vec![
            vec![0.0, 2.0, 4.0],
            vec![2.0, 0.0, 2.0],
            vec![4.0, 2.0, 0.0],
        ])
        .unwrap();
        let r = assign_remaining(&tie, &[2, 0]).unwrap();
        assert_eq!(r.assignment(), &[1, 1, 0]);
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![1.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn compare_examples() {
        let g = GroundTruth::from_labels(vec![0, 0, 1, 1]);
        let same = compare_labels(&[1, 1, 0, 0], g.labels()).unwrap();
        assert!(same.exact_match);
        assert_eq!(same.pair_accuracy, 1.0);
        let crossed = compare_labels(&[0, 1, 0, 1], g.labels()).unwrap();
        assert!(!crossed.exact_match);
        assert!((crossed.pair_accuracy - 1.0 / 3.0).abs() < 1e-15);
        // Moving sample 1 into the other cluster: pairs (0,1), (1,2), (1,3)
        // flip, leaving 3 of 6 in agreement.
        let moved = compare_labels(&[0, 1, 1, 1], g.labels()).unwrap();
        assert!(!moved.exact_match);
        assert_eq!(moved.pair_accuracy, 0.5);
        assert!(compare_labels(&[0], g.labels()).is_err());
    }

    #[test]
    fn names_become_labels() {
        let g = GroundTruth::from_names(&["b", "a", "b", "c"]);
        assert_eq!(g.labels(), &[0, 1, 0, 2]);
    }

    #[test]
    fn clusters_constant_samples() {
        let s = |id: &str, v: f64| TimeSeries::new(id, vec![v; 64]).unwrap();
        let samples = vec![s("a", 0.25), s("b", 0.75), s("c", 0.25), s("d", 0.75)];
        let d = pairwise_delta(&samples, 0.25).unwrap();
        assert!((d.get(0, 1) - 1.6).abs() < 1e-12);
        assert_eq!(d.get(0, 2), 0.0);
        let r = cluster(&samples, 2, 0.25).unwrap();
        assert_eq!(r.clusters(), vec![vec![0, 2], vec![1, 3]]);

        let same = vec![s("a", 0.4), s("b", 0.4), s("c", 0.4)];
        let r = cluster(&same, 1, 0.25).unwrap();
        assert_eq!(r.clusters(), vec![vec![0, 1, 2]]);
        assert!(pairwise_delta(&same, 0.25)
            .unwrap()
            .rows()
            .iter()
            .flatten()
            .all(|&x| x == 0.0));
        assert!(matches!(
            cluster(&same, 4, 0.25),
            Err(Error::ClusterCount { .. })
        ));
    }

    /// Random strictly separated block structure: within-block distances in
    /// [0.1, 1), across-block in [2, 3).
    fn separated(sizes: Vec<usize>, seed_vals: Vec<f64>) -> (DistanceMatrix, Vec<usize>) {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat(k).take(s))
            .collect();
        let n = labels.len();
        let mut pairs = Vec::new();
        let mut next = seed_vals.iter().cycle();
        for i in 0..n {
            for j in i + 1..n {
                let r = *next.next().unwrap();
                let d = if labels[i] == labels[j] {
                    0.1 + 0.9 * r
                } else {
                    2.0 + r
                };
                pairs.push(((i, j), d));
            }
        }
        (DistanceMatrix::from_pairs(n, pairs), labels)
    }

    proptest! {
        #[test]
        fn strict_separation_recovers_blocks(
            sizes in prop::collection::vec(1usize..5, 1..5),
            noise in prop::collection::vec(0.0f64..0.999, 1..50),
        ) {
            let (d, labels) = separated(sizes.clone(), noise);
            let r = cluster_matrix(&d, sizes.len()).unwrap();
            prop_assert!(compare_labels(r.assignment(), &labels).unwrap().exact_match);
            prop_assert_eq!(r.clusters().iter().filter(|c| !c.is_empty()).count(), sizes.len());
        }

        #[test]
        fn relabeling_commutes_with_clustering(
            raw in prop::collection::vec(0.0f64..1.0, 21),
            perm_keys in prop::collection::vec(any::<u32>(), 7),
            m in 1usize..5,
        ) {
            let n = 7;
            let mut pairs = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    // Distinct distances.
                    pairs.push(((i, j), 1.0 + raw[k] + k as f64 * 1e-3));
                    k += 1;
                }
            }
            let d = DistanceMatrix::from_pairs(n, pairs.clone());
            let mut perm: Vec<usize> = (0..n).collect();
            perm.sort_by_key(|&i| (perm_keys[i], i));
            // Keep sample 0 first so the initial center is the same sample.
            let pos0 = perm.iter().position(|&p| p == 0).unwrap();
            perm.swap(0, pos0);
            let mut inverse = vec![0; n];
            for (new, &old) in perm.iter().enumerate() {
                inverse[old] = new;
            }
            let relabeled = DistanceMatrix::from_pairs(
                n,
                pairs.iter().map(|&((i, j), v)| ((inverse[i], inverse[j]), v)),
            );
            let a = cluster_matrix(&d, m).unwrap();
            let b = cluster_matrix(&relabeled, m).unwrap();
            let mapped: Vec<usize> = (0..n).map(|old| b.assignment()[inverse[old]]).collect();
            prop_assert!(compare_labels(a.assignment(), &mapped).unwrap().exact_match);
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Generation specs and ground-truth sidecars.
//!
//! A spec is a TOML file naming segment processes and listing the samples
//! to draw:
//!
//! ```toml
//! [processes.low]
//! kind = "iid_finite"
//! support = [0.25, 0.75]
//! probs = [0.8, 0.2]
//!
//! [processes.high]
//! kind = "iid_finite"
//! support = [0.25, 0.75]
//! probs = [0.2, 0.8]
//!
//! [[samples]]
//! id = "a1"
//! class = "A"
//! thetas = [0.4, 1.0]
//! segments = ["low", "high"]
//! ```
//!
//! Samples of one class must use the same set of processes, and different
//! classes must use different sets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pwcluster::processes::{generate_piecewise, sample_seed, NoiseMode};
use pwcluster::{GroundTruth, PiecewiseSpec, ProcessSpec, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::{read_to_string, CliError, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    noise: NoiseMode,
    processes: BTreeMap<String, ProcessSpec>,
    samples: Vec<RawSample>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    id: String,
    class: String,
    thetas: Vec<f64>,
    segments: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub id: String,
    pub class: String,
    pub spec: PiecewiseSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationSpec {
    pub noise: NoiseMode,
    pub samples: Vec<SampleSpec>,
}

impl GenerationSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| CliError::Data(e.to_string()))?;
        let names: Vec<&String> = raw.processes.keys().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if raw.processes[*a] == raw.processes[*b] {
                    return Err(CliError::Data(format!(
                        "processes '{a}' and '{b}' are identical"
                    )));
                }
            }
        }
        if raw.samples.is_empty() {
            return Err(CliError::Data("spec lists no samples".into()));
        }

        let mut ids = BTreeSet::new();
        let mut class_sets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut samples = Vec::with_capacity(raw.samples.len());
        for s in &raw.samples {
            if !ids.insert(s.id.as_str()) {
                return Err(CliError::Data(format!("duplicate sample id '{}'", s.id)));
            }
            let segments = s
                .segments
                .iter()
                .map(|name| {
                    raw.processes.get(name).cloned().ok_or_else(|| {
                        CliError::Data(format!("sample '{}' uses unknown process '{name}'", s.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let spec = PiecewiseSpec::new(s.thetas.clone(), segments)
                .map_err(|e| CliError::Data(format!("sample '{}': {e}", s.id)))?;
            let set: BTreeSet<&str> = s.segments.iter().map(String::as_str).collect();
            match class_sets.get(s.class.as_str()) {
                Some(prev) if *prev != set => {
                    return Err(CliError::Data(format!(
                        "sample '{}' uses processes {set:?} but class '{}' uses {prev:?}",
                        s.id, s.class
                    )))
                }
                Some(_) => {}
                None => {
                    class_sets.insert(&s.class, set);
                }
            }
            samples.push(SampleSpec {
                id: s.id.clone(),
                class: s.class.clone(),
                spec,
            });
        }
        let sets: Vec<(&&str, &BTreeSet<&str>)> = class_sets.iter().collect();
        for (i, (a, sa)) in sets.iter().enumerate() {
            for (b, sb) in &sets[i + 1..] {
                if sa == sb {
                    return Err(CliError::Data(format!(
                        "classes '{a}' and '{b}' use the same processes"
                    )));
                }
            }
        }
        Ok(Self {
            noise: raw.noise,
            samples,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?).map_err(|e| match e {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Smallest normalized segment separation over all samples.
    pub fn alpha(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.spec.alpha())
            .fold(f64::INFINITY, f64::min)
    }

    /// Draws every sample at length scale `n`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<(Vec<TimeSeries>, Truth)> {
        let mut series = Vec::with_capacity(self.samples.len());
        let mut entries = Vec::with_capacity(self.samples.len());
        for (k, s) in self.samples.iter().enumerate() {
            let g = generate_piecewise(&s.spec, n, sample_seed(seed, k, self.noise))
                .map_err(|e| CliError::Data(format!("sample '{}': {e}", s.id)))?;
            entries.push(TruthEntry {
                id: s.id.clone(),
                class: s.class.clone(),
                length: g.values.len(),
                change_points: g.change_points,
                alpha: s.spec.alpha(),
            });
            series.push(TimeSeries::new(s.id.clone(), g.values)?);
        }
        Ok((
            series,
            Truth {
                n,
                seed,
                noise: self.noise,
                samples: entries,
            },
        ))
    }
}

/// Sidecar written next to a generated sample file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub n: usize,
    pub seed: u64,
    pub noise: NoiseMode,
    pub samples: Vec<TruthEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub id: String,
    pub class: String,
    pub length: usize,
    pub change_points: Vec<usize>,
    pub alpha: f64,
}

impl Truth {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn alpha(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.alpha)
            .fold(f64::INFINITY, f64::min)
    }

    /// Ground truth for samples listed in `ids` order.
    pub fn ground_truth(&self, ids: &[String]) -> Result<GroundTruth> {
        let classes = ids
            .iter()
            .map(|id| {
                self.samples
                    .iter()
                    .find(|s| &s.id == id)
                    .map(|s| s.class.as_str())
                    .ok_or_else(|| {
                        CliError::Data(format!("sample '{id}' is missing from the truth file"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if ids.len() != self.samples.len() {
            return Err(CliError::Data(format!(
                "report has {} samples, truth file has {}",
                ids.len(),
                self.samples.len()
            )));
        }
        Ok(GroundTruth::from_names(&classes))
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Convergence experiments: regenerate a spec at several lengths and seeds,
//! cluster each draw and tabulate within-class and cross-class distances.
//!
//! Config file (TOML):
//!
//! ```toml
//! specs = "classes.toml"   # generation spec, relative to this file
//! n_list = [2048, 8192, 32768]
//! seeds = [1, 2, 3]
//! lambda = 0.1
//! m = 3
//! ```

use std::path::{Path, PathBuf};

use pwcluster::clustering::{cluster_matrix, pairwise_delta_detailed};
use pwcluster::{compare_partitions, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::genspec::GenerationSpec;
use crate::ingest::Normalization;
use crate::{read_to_string, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub specs: PathBuf,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub m: usize,
    /// Apply the same global rescale as `cluster` does to sample files.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Loads a config; a relative `specs` path is taken from the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if cfg.specs.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.specs = dir.join(&cfg.specs);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.seeds.is_empty() {
            return Err(CliError::Data("n_list and seeds must be non-empty".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(CliError::Data(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if self.m == 0 {
            return Err(CliError::Data("m must be at least 1".into()));
        }
        Ok(())
    }
}

/// One `(n, seed)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub seed: u64,
    pub same_class_mean: f64,
    pub same_class_max: f64,
    pub cross_class_mean: f64,
    pub cross_class_min: f64,
    pub exact_match: bool,
    pub pair_accuracy: f64,
}

/// Aggregate over seeds at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub seeds: usize,
    pub same_class_mean: f64,
    pub cross_class_mean: f64,
    pub exact_match_rate: f64,
    pub pair_accuracy_mean: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn run_cell(
    spec: &GenerationSpec,
    cfg: &ExperimentConfig,
    n: usize,
    seed: u64,
) -> Result<Cell> {
    let (mut samples, truth) = spec.generate(n, seed)?;
    if cfg.normalize {
        let norm = Normalization::fit(&samples);
        samples = samples
            .iter()
            .map(|s| s.map_values(|x| norm.apply(x)))
            .collect::<pwcluster::Result<Vec<TimeSeries>>>()?;
    }
    let (d, _) = pairwise_delta_detailed(&samples, cfg.lambda)?;
    let result = cluster_matrix(&d, cfg.m)?;
    let ids: Vec<String> = samples.iter().map(|s| s.id().to_owned()).collect();
    let g = truth.ground_truth(&ids)?;
    let agreement = compare_partitions(&result, &g)?;

    let labels = g.labels();
    let (mut same, mut cross) = (Vec::new(), Vec::new());
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if labels[i] == labels[j] {
                same.push(d.get(i, j));
            } else {
                cross.push(d.get(i, j));
            }
        }
    }
    Ok(Cell {
        n,
        seed,
        same_class_mean: mean(&same),
        same_class_max: same.iter().copied().fold(f64::NAN, f64::max),
        cross_class_mean: mean(&cross),
        cross_class_min: cross.iter().copied().fold(f64::NAN, f64::min),
        exact_match: agreement.exact_match,
        pair_accuracy: agreement.pair_accuracy,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Vec<Cell>, Vec<SummaryRow>)> {
    let spec = GenerationSpec::load(&cfg.specs)?;
    if cfg.lambda > spec.alpha() {
        eprintln!(
            "warning: lambda = {} exceeds the smallest segment fraction {} of the spec",
            cfg.lambda,
            spec.alpha()
        );
    }
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &n in &cfg.n_list {
        let row: Vec<Cell> = cfg
            .seeds
            .iter()
            .map(|&seed| run_cell(&spec, cfg, n, seed))
            .collect::<Result<_>>()?;
        let pick = |f: fn(&Cell) -> f64| row.iter().map(f).collect::<Vec<_>>();
        summary.push(SummaryRow {
            n,
            seeds: row.len(),
            same_class_mean: mean(&pick(|c| c.same_class_mean)),
            cross_class_mean: mean(&pick(|c| c.cross_class_mean)),
            exact_match_rate: mean(&pick(|c| c.exact_match as u8 as f64)),
            pair_accuracy_mean: mean(&pick(|c| c.pair_accuracy)),
        });
        cells.extend(row);
    }
    Ok((cells, summary))
}

/// CSV encoding with a header row.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

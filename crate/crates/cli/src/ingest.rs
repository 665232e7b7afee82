// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sample files: one JSON record `{"id": ..., "values": [...]}` per line.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use pwcluster::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::{read_to_string, CliError, Result};

/// Slack keeping the image of the global maximum below 1.
pub const EPSILON: f64 = 1.0 / 4_294_967_296.0;

/// Affine map `x -> (x - min) / ((max - min) * (1 + epsilon))` shared by every
/// sample of one input file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
    pub epsilon: f64,
}

impl Normalization {
    pub fn fit(samples: &[TimeSeries]) -> Self {
        let (min, max) = samples
            .iter()
            .flat_map(|s| s.values().iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        Self {
            min,
            max,
            epsilon: EPSILON,
        }
    }

    /// A constant dataset maps every value to 0.5.
    pub fn apply(&self, x: f64) -> f64 {
        if self.max == self.min {
            return 0.5;
        }
        let y = (x - self.min) / ((self.max - self.min) * (1.0 + self.epsilon));
        // Guards the last ulp; the division can round up to exactly 1.
        y.clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Parses a sample file without rescaling.
pub fn read_samples(path: &Path) -> Result<Vec<TimeSeries>> {
    let text = read_to_string(path)?;
    parse_samples(&text, path)
}

pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| CliError::Parse {
            path: path.to_owned(),
            line: k + 1,
            reason,
        };
        let series: TimeSeries = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !seen.insert(series.id().to_owned()) {
            return Err(err(format!("duplicate id '{}'", series.id())));
        }
        out.push(series);
    }
    if out.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no samples",
            path.display()
        )));
    }
    Ok(out)
}

/// Reads a sample file and maps all values into `[0, 1)` with one shared
/// affine map.
pub fn ingest(path: &Path) -> Result<(Vec<TimeSeries>, Normalization)> {
    let raw = read_samples(path)?;
    let norm = Normalization::fit(&raw);
    let samples = raw
        .iter()
        .map(|s| s.map_values(|x| norm.apply(x)))
        .collect::<pwcluster::Result<Vec<_>>>()?;
    Ok((samples, norm))
}

pub fn write_samples(mut w: impl Write, samples: &[TimeSeries]) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

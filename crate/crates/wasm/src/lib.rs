// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser bindings for the `www/index.html` demo.
//!
//! Samples are described by a layout string of `process:theta` tokens, for
//! example `low:0.4 high:1`, over a fixed library of named processes. Each
//! exported function returns a JSON document for the page to draw.

use pwcluster::changepoint::{score_profile, select_candidates};
use pwcluster::clustering::{cluster_matrix, pairwise_delta_detailed};
use pwcluster::processes::{generate_piecewise, sample_seed, NoiseMode};
use pwcluster::pwdelta::delta_with_segments;
use pwcluster::{
    compare_partitions, split_segments, GroundTruth, PiecewiseSpec, ProcessSpec, TimeSeries,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Names accepted in layout strings.
pub const PROCESSES: [&str; 7] = ["low", "high", "fair", "sticky", "flippy", "rot2", "rot3"];

fn process(name: &str) -> Result<ProcessSpec, String> {
    let spec = match name {
        "low" => ProcessSpec::bernoulli(0.2),
        "high" => ProcessSpec::bernoulli(0.8),
        "fair" => ProcessSpec::bernoulli(0.5),
        "sticky" => ProcessSpec::sticky_pair(0.9),
        "flippy" => ProcessSpec::sticky_pair(0.2),
        "rot2" => ProcessSpec::rotation(2f64.sqrt() - 1.0),
        "rot3" => ProcessSpec::rotation(3f64.sqrt() - 1.0),
        _ => {
            return Err(format!(
                "unknown process '{name}'; use one of {}",
                PROCESSES.join(", ")
            ))
        }
    };
    spec.map_err(|e| e.to_string())
}

/// Parses `low:0.4 high:1` into a piecewise spec.
pub fn parse_layout(layout: &str) -> Result<PiecewiseSpec, String> {
    let mut thetas = Vec::new();
    let mut segments = Vec::new();
    for token in layout.split_whitespace() {
        let (name, theta) = token
            .split_once(':')
            .ok_or_else(|| format!("expected process:theta, got '{token}'"))?;
        thetas.push(
            theta
                .parse::<f64>()
                .map_err(|_| format!("bad fraction '{theta}' in '{token}'"))?,
        );
        segments.push(process(name)?);
    }
    PiecewiseSpec::new(thetas, segments).map_err(|e| e.to_string())
}

fn sample(layout: &str, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<usize>), String> {
    let g = generate_piecewise(&parse_layout(layout)?, n, seed).map_err(|e| e.to_string())?;
    Ok((g.values, g.change_points))
}

/// Two-window score profile and selected candidates of one sample.
pub fn profile_json(layout: &str, n: usize, seed: u64, lambda: f64) -> Result<String, String> {
    let (values, truth) = sample(layout, n, seed)?;
    let profile = score_profile(&values, lambda).map_err(|e| e.to_string())?;
    let cands = select_candidates(&profile, values.len(), lambda).map_err(|e| e.to_string())?;
    Ok(json!({
        "values": values,
        "change_points": truth,
        "window": profile.window(),
        "grid_step": profile.grid_step(),
        "policy": profile.policy(),
        "entries": profile.entries(),
        "candidates": cands.candidates(),
        "scores": cands.scores(),
    })
    .to_string())
}

/// Distance between two samples with the segment-by-segment matrix.
pub fn delta_json(
    layout_a: &str,
    layout_b: &str,
    n: usize,
    seed: u64,
    lambda: f64,
) -> Result<String, String> {
    let (y, ty) = sample(layout_a, n, sample_seed(seed, 0, NoiseMode::Independent))?;
    let (z, tz) = sample(layout_b, n, sample_seed(seed, 1, NoiseMode::Independent))?;
    let cy = pwcluster::list_estimate(&y, lambda).map_err(|e| e.to_string())?;
    let cz = pwcluster::list_estimate(&z, lambda).map_err(|e| e.to_string())?;
    let sy = split_segments(y.len(), &cy);
    let sz = split_segments(z.len(), &cz);
    let d = delta_with_segments(&y, &sy, &z, &sz, lambda).map_err(|e| e.to_string())?;
    Ok(json!({
        "a": { "values": y, "change_points": ty, "segments": sy.segments() },
        "b": { "values": z, "change_points": tz, "segments": sz.segments() },
        "value": d.value,
        "forward": d.forward,
        "backward": d.backward,
        "n_eff": d.n_eff,
        "policy": d.policy,
        "segment_distances": d.segment_distances,
    })
    .to_string())
}

/// Clusters samples given one `class | layout` line each.
pub fn cluster_json(
    lines: &str,
    n: usize,
    seed: u64,
    lambda: f64,
    m: usize,
) -> Result<String, String> {
    let mut samples = Vec::new();
    let mut classes = Vec::new();
    for (k, line) in lines.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let (class, layout) = line
            .split_once('|')
            .ok_or_else(|| format!("line {}: expected 'class | layout'", k + 1))?;
        let class = class.trim().to_owned();
        let (values, _) = sample(layout, n, sample_seed(seed, k, NoiseMode::Independent))
            .map_err(|e| format!("line {}: {e}", k + 1))?;
        let same = classes.iter().filter(|c| **c == class).count();
        samples.push(
            TimeSeries::new(format!("{class}{}", same + 1), values).map_err(|e| e.to_string())?,
        );
        classes.push(class);
    }
    if m == 0 || m > samples.len() {
        return Err(format!("m must lie in 1..={}", samples.len()));
    }
    let (d, segs) = pairwise_delta_detailed(&samples, lambda).map_err(|e| e.to_string())?;
    let result = cluster_matrix(&d, m).map_err(|e| e.to_string())?;
    let agreement = compare_partitions(&result, &GroundTruth::from_names(&classes))
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "ids": samples.iter().map(|s| s.id()).collect::<Vec<_>>(),
        "classes": classes,
        "matrix": d.rows(),
        "candidates": segs.iter().map(|s| s.candidates.candidates()).collect::<Vec<_>>(),
        "centers": result.centers(),
        "assignment": result.assignment(),
        "exact_match": agreement.exact_match,
        "pair_accuracy": agreement.pair_accuracy,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn profile(layout: &str, n: usize, seed: u64, lambda: f64) -> Result<String, JsError> {
    profile_json(layout, n, seed, lambda).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn delta(
    layout_a: &str,
    layout_b: &str,
    n: usize,
    seed: u64,
    lambda: f64,
) -> Result<String, JsError> {
    delta_json(layout_a, layout_b, n, seed, lambda).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cluster(lines: &str, n: usize, seed: u64, lambda: f64, m: usize) -> Result<String, JsError> {
    cluster_json(lines, n, seed, lambda, m).map_err(|e| JsError::new(&e))
}

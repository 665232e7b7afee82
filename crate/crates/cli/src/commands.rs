// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pwcluster::changepoint::{score_profile, select_candidates};
use pwcluster::clustering::{cluster_matrix, pairwise_delta_detailed};
use pwcluster::measure::policy_for;
use pwcluster::pwdelta::delta_with_segments;
use pwcluster::{
    compare_labels, effective_length, split_segments, CandidateList, SegmentSet, TimeSeries,
    TruncationPolicy,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiment::{self, ExperimentConfig};
use crate::genspec::{GenerationSpec, Truth};
use crate::ingest::{self, Normalization};
use crate::report::{self, write_atomic, write_json, Report, Timings, TOOL_NAME, TOOL_VERSION};
use crate::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "pwcluster",
    version,
    about = "Cluster piecewise stationary time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a generation spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth sidecar; defaults to `<out>.truth.json`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Change-point candidate lists for every sample.
    Changepoints {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance between two samples of a file.
    Delta {
        #[arg(long)]
        input: PathBuf,
        /// Two sample ids, comma separated.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        lambda: f64,
        /// Optional report with the per-segment breakdown.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster all samples of a file into `m` groups.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
        /// Truth sidecar, used only to warn when lambda exceeds its alpha.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Compare a cluster report with a truth sidecar.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep sample length and seeds; emit a convergence table as CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Per-length summary; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-(n, seed) table.
        #[arg(long)]
        cells: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

fn tool() -> Tool {
    Tool {
        name: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
    }
}

/// Resolved inputs common to every report on a sample file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    /// SHA-256 of the input file bytes; paths are left out so that a
    /// moved file still reproduces the same body.
    pub input_digest: String,
    pub samples: usize,
    pub normalization: Normalization,
}

fn load_input(path: &Path) -> Result<(Vec<TimeSeries>, InputRecord)> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })?;
    let (samples, normalization) = ingest::ingest(path)?;
    Ok((
        samples.clone(),
        InputRecord {
            input_digest: hex::encode(Sha256::digest(&bytes)),
            samples: samples.len(),
            normalization,
        },
    ))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--lambda must lie in (0, 1), got {lambda}"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCandidates {
    pub id: String,
    pub length: usize,
    pub candidates: Vec<usize>,
    pub scores: Vec<f64>,
    pub segments: Vec<(usize, usize)>,
}

impl SampleCandidates {
    fn new(s: &TimeSeries, c: &CandidateList, seg: &SegmentSet) -> Self {
        Self {
            id: s.id().to_owned(),
            length: s.len(),
            candidates: c.candidates().to_vec(),
            scores: c.scores().to_vec(),
            segments: seg.segments().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub window: usize,
    pub grid_step: usize,
    pub grid_points: usize,
    pub policy: TruncationPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangepointsBody {
    pub tool: Tool,
    pub command: String,
    pub lambda: f64,
    pub input: InputRecord,
    pub samples: Vec<(SampleCandidates, ProfileRecord)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBody {
    pub tool: Tool,
    pub command: String,
    pub lambda: f64,
    pub input: InputRecord,
    pub value: f64,
    pub n_eff: usize,
    pub policy: TruncationPolicy,
    pub first: SampleCandidates,
    pub second: SampleCandidates,
    pub segment_distances: Vec<Vec<f64>>,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPolicy {
    pub i: usize,
    pub j: usize,
    pub n_eff: usize,
    pub policy: TruncationPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBody {
    pub tool: Tool,
    pub command: String,
    pub lambda: f64,
    pub m: usize,
    pub input: InputRecord,
    pub ids: Vec<String>,
    pub candidates: Vec<SampleCandidates>,
    pub pair_policies: Vec<PairPolicy>,
    pub distance_matrix: Vec<Vec<f64>>,
    /// Center sample index of each cluster, in selection order.
    pub centers: Vec<usize>,
    /// Cluster label of each sample.
    pub assignment: Vec<usize>,
    pub clusters: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationBody {
    pub tool: Tool,
    pub command: String,
    pub report_digest: String,
    pub samples: usize,
    pub exact_match: bool,
    pub pair_accuracy: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            spec,
            n,
            seed,
            out,
            truth,
        } => generate(&spec, n, seed, &out, truth.as_deref()),
        Command::Changepoints { input, lambda, out } => changepoints(&input, lambda, &out),
        Command::Delta {
            input,
            pair,
            lambda,
            out,
        } => delta(&input, &pair, lambda, out.as_deref()),
        Command::Cluster {
            input,
            m,
            lambda,
            out,
            truth,
        } => cluster(&input, m, lambda, &out, truth.as_deref()),
        Command::Evaluate { report, truth, out } => evaluate(&report, &truth, out.as_deref()),
        Command::Experiment { config, out, cells } => {
            run_experiment(&config, out.as_deref(), cells.as_deref())
        }
    }
}

pub fn generate(spec: &Path, n: usize, seed: u64, out: &Path, truth: Option<&Path>) -> Result<()> {
    let spec = GenerationSpec::load(spec)?;
    let (samples, truth_record) = spec.generate(n, seed)?;
    let mut bytes = Vec::new();
    ingest::write_samples(&mut bytes, &samples).map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(out, &bytes)?;
    let truth_path = match truth {
        Some(p) => p.to_owned(),
        None => {
            let mut p = out.as_os_str().to_owned();
            p.push(".truth.json");
            PathBuf::from(p)
        }
    };
    write_json(&truth_path, &truth_record)
}

pub fn changepoints(input: &Path, lambda: f64, out: &Path) -> Result<()> {
    check_lambda(lambda)?;
    let mut timings = Timings::default();
    let (samples, record) = timings.time("ingest", || load_input(input))?;
    let rows = timings.time("changepoints", || {
        samples
            .iter()
            .map(|s| {
                let profile = score_profile(s.values(), lambda)?;
                let c = select_candidates(&profile, s.len(), lambda)?;
                let seg = split_segments(s.len(), &c);
                Ok((
                    SampleCandidates::new(s, &c, &seg),
                    ProfileRecord {
                        window: profile.window(),
                        grid_step: profile.grid_step(),
                        grid_points: profile.entries().len(),
                        policy: *profile.policy(),
                    },
                ))
            })
            .collect::<pwcluster::Result<Vec<_>>>()
    })?;
    timings.finish();
    let body = ChangepointsBody {
        tool: tool(),
        command: "changepoints".into(),
        lambda,
        input: record,
        samples: rows,
    };
    write_json(out, &Report::new(body, &timings)?)
}

pub fn delta(input: &Path, pair: &str, lambda: f64, out: Option<&Path>) -> Result<()> {
    check_lambda(lambda)?;
    let (a, b) = pair
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("--pair expects 'idA,idB', got '{pair}'")))?;
    let mut timings = Timings::default();
    let (samples, record) = timings.time("ingest", || load_input(input))?;
    let find = |id: &str| {
        samples
            .iter()
            .find(|s| s.id() == id.trim())
            .ok_or_else(|| CliError::Data(format!("no sample with id '{}'", id.trim())))
    };
    let (y, z) = (find(a)?, find(b)?);
    let (cy, cz) = timings.time("changepoints", || -> pwcluster::Result<_> {
        Ok((
            pwcluster::list_estimate(y.values(), lambda)?,
            pwcluster::list_estimate(z.values(), lambda)?,
        ))
    })?;
    let sy = split_segments(y.len(), &cy);
    let sz = split_segments(z.len(), &cz);
    let d = timings.time("delta", || {
        delta_with_segments(y.values(), &sy, z.values(), &sz, lambda)
    })?;
    timings.finish();
    println!("{}", d.value);
    if let Some(out) = out {
        let body = DeltaBody {
            tool: tool(),
            command: "delta".into(),
            lambda,
            input: record,
            value: d.value,
            n_eff: d.n_eff,
            policy: d.policy,
            first: SampleCandidates::new(y, &cy, &sy),
            second: SampleCandidates::new(z, &cz, &sz),
            segment_distances: d.segment_distances,
            forward: d.forward,
            backward: d.backward,
        };
        write_json(out, &Report::new(body, &timings)?)?;
    }
    Ok(())
}

pub fn cluster(
    input: &Path,
    m: usize,
    lambda: f64,
    out: &Path,
    truth: Option<&Path>,
) -> Result<()> {
    check_lambda(lambda)?;
    let mut timings = Timings::default();
    let (samples, record) = timings.time("ingest", || load_input(input))?;
    if m == 0 || m > samples.len() {
        return Err(CliError::Usage(format!(
            "--m must satisfy 1 <= m <= N, the number of samples; got m = {m}, N = {}",
            samples.len()
        )));
    }
    if let Some(t) = truth {
        let alpha = Truth::load(t)?.alpha();
        if lambda > alpha {
            eprintln!(
                "warning: lambda = {lambda} exceeds alpha = {alpha} of the generated data; recovery is not guaranteed"
            );
        }
    }
    let ids: Vec<String> = samples.iter().map(|s| s.id().to_owned()).collect();
    let (matrix, segs, centers, assignment) = if samples.len() == 1 {
        let segs = pwcluster::list_estimate(samples[0].values(), lambda)?;
        let seg = split_segments(samples[0].len(), &segs);
        (
            vec![vec![0.0]],
            vec![SampleCandidates::new(&samples[0], &segs, &seg)],
            vec![0],
            vec![0],
        )
    } else {
        let (d, segs) = timings.time("distances", || pairwise_delta_detailed(&samples, lambda))?;
        let result = timings.time("clustering", || cluster_matrix(&d, m))?;
        let cands = samples
            .iter()
            .zip(&segs)
            .map(|(s, g)| SampleCandidates::new(s, &g.candidates, &g.segments))
            .collect();
        (
            d.rows(),
            cands,
            result.centers().to_vec(),
            result.assignment().to_vec(),
        )
    };
    let mut pair_policies = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let n_eff = effective_length(lambda, samples[i].len(), samples[j].len());
            pair_policies.push(PairPolicy {
                i,
                j,
                n_eff,
                policy: policy_for(samples[i].values(), samples[j].values(), n_eff),
            });
        }
    }
    let mut clusters = vec![Vec::new(); m];
    for (i, &l) in assignment.iter().enumerate() {
        clusters[l].push(ids[i].clone());
    }
    timings.finish();
    let body = ClusterBody {
        tool: tool(),
        command: "cluster".into(),
        lambda,
        m,
        input: record,
        ids,
        candidates: segs,
        pair_policies,
        distance_matrix: matrix,
        centers,
        assignment,
        clusters,
    };
    write_json(out, &Report::new(body, &timings)?)
}

pub fn evaluate(report_path: &Path, truth: &Path, out: Option<&Path>) -> Result<()> {
    let text = crate::read_to_string(report_path)?;
    let report: Report<ClusterBody> = serde_json::from_str(&text).map_err(|e| {
        CliError::Data(format!(
            "{} is not a cluster report: {e}",
            report_path.display()
        ))
    })?;
    if report::digest(&report.body)? != report.body_digest {
        return Err(CliError::Data(format!(
            "{}: body does not match its digest",
            report_path.display()
        )));
    }
    let g = Truth::load(truth)?.ground_truth(&report.body.ids)?;
    let agreement = compare_labels(&report.body.assignment, g.labels())?;
    let body = EvaluationBody {
        tool: tool(),
        command: "evaluate".into(),
        report_digest: report.body_digest.clone(),
        samples: report.body.ids.len(),
        exact_match: agreement.exact_match,
        pair_accuracy: agreement.pair_accuracy,
    };
    println!(
        "exact_match={} pair_accuracy={}",
        body.exact_match, body.pair_accuracy
    );
    if let Some(out) = out {
        let mut t = Timings::default();
        t.finish();
        write_json(out, &Report::new(body, &t)?)?;
    }
    Ok(())
}

pub fn run_experiment(config: &Path, out: Option<&Path>, cells_out: Option<&Path>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let start = std::time::Instant::now();
    let (cells, summary) = experiment::run(&cfg)?;
    eprintln!(
        "experiment: {} cells in {:.3}s",
        cells.len(),
        start.elapsed().as_secs_f64()
    );
    let table = experiment::to_csv(&summary)?;
    match out {
        Some(p) => write_atomic(p, &table)?,
        None => print!("{}", String::from_utf8_lossy(&table)),
    }
    if let Some(p) = cells_out {
        write_atomic(p, &experiment::to_csv(&cells)?)?;
    }
    Ok(())
}

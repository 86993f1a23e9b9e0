//! Experiment sweeps and result emission.
//!
//! A sweep point is one noise parameter at one depth. Every trial at that
//! point draws its circuit (random benchmark), input state and compilation
//! seed from a stream keyed by `(master seed, benchmark, depth index, trial)`.
//! The noise parameter is deliberately not part of the key, so all points of
//! a sweep see the same inputs and differ only in the channel.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchlib::{build_benchmark, maxcut_expectation, BenchmarkId, DepthSpec, MaxCutGraph, Metric};
use crate::circuit::{apply_gates, run_noisy, Circuit, GateSet};
use crate::compile::{interleave_idle, RandomizedCompiler};
use crate::error::{Error, Result};
use crate::noise::{NoiseKind, NoiseModel};
use crate::protocols::derive_seed;
use crate::state::{ket_to_density, measurement_distribution, random_product_state, Ket};

/// Trials per sweep point when the config does not say otherwise.
pub const DEFAULT_TRIALS: usize = 100;

/// Evenly spaced parameter values `start, start + step, …` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Inclusive depth range with a positive step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl DepthRange {
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.stop).step_by(self.step.max(1)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::config("format", format!("unknown format `{s}`"))),
        }
    }
}

/// One experiment: a benchmark swept over noise parameters (and depths for
/// the idle and random benchmarks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkId,
    pub noise: NoiseKind,
    /// Tabulated levels 0 to 3. Mutually exclusive with `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<FineSweep>,
    #[serde(default)]
    pub rc: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Only for the idle and random benchmarks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depths: Option<DepthRange>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl ExperimentConfig {
    /// A config with all optional fields at their defaults.
    pub fn new(benchmark: BenchmarkId, noise: NoiseKind) -> Self {
        Self {
            benchmark,
            noise,
            levels: None,
            sweep: None,
            rc: false,
            trials: DEFAULT_TRIALS,
            depths: None,
            seed: 0,
            output: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.levels.is_some() && self.sweep.is_some() {
            return Err(Error::config("sweep", "give either `levels` or `sweep`, not both"));
        }
        if let Some(levels) = &self.levels {
            if levels.is_empty() {
                return Err(Error::config("levels", "must not be empty"));
            }
            if let Some(l) = levels.iter().find(|&&l| l > 3) {
                return Err(Error::config("levels", format!("unknown level {l} (expected 0..=3)")));
            }
        }
        if let Some(s) = &self.sweep {
            if !(s.step > 0.0) || !s.step.is_finite() {
                return Err(Error::config("sweep.step", "must be positive"));
            }
            if !s.start.is_finite() || !s.stop.is_finite() || s.stop < s.start {
                return Err(Error::config("sweep", "need finite start <= stop"));
            }
        }
        for p in self.params_unchecked() {
            self.noise
                .model(p)
                .map_err(|e| Error::config("sweep", format!("parameter {p}: {e}")))?;
        }
        let spec = self.benchmark.spec();
        match (spec.depth, &self.depths) {
            (DepthSpec::Fixed, Some(_)) => {
                return Err(Error::config(
                    "depths",
                    format!("benchmark `{}` has a fixed depth", self.benchmark),
                ))
            }
            (DepthSpec::Range { min, max }, Some(d)) => {
                if d.step == 0 {
                    return Err(Error::config("depths.step", "must be at least 1"));
                }
                if d.start < min || d.stop > max || d.start > d.stop {
                    return Err(Error::config(
                        "depths",
                        format!("range must lie within {min}..={max}"),
                    ));
                }
            }
            _ => {}
        }
        if self.rc && spec.gate_set != GateSet::CliffordT {
            return Err(Error::config(
                "rc",
                format!(
                    "randomized compiling needs a Clifford+T benchmark; `{}` uses continuous rotations",
                    self.benchmark
                ),
            ));
        }
        Ok(())
    }

    fn params_unchecked(&self) -> Vec<f64> {
        if let Some(s) = &self.sweep {
            if !(s.step > 0.0) {
                return vec![];
            }
            let count = ((s.stop - s.start) / s.step + 1e-9).floor() as usize;
            (0..=count).map(|i| s.start + i as f64 * s.step).collect()
        } else {
            let levels = self.levels.clone().unwrap_or_else(|| vec![0, 1, 2, 3]);
            levels
                .into_iter()
                .filter_map(|l| self.noise.level_param(l).ok())
                .collect()
        }
    }

    /// Noise parameter values of the sweep.
    pub fn params(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(self.params_unchecked())
    }

    /// Depth values for swept benchmarks, `None` for fixed ones.
    pub fn depth_values(&self) -> Vec<Option<usize>> {
        match self.benchmark.spec().depth {
            DepthSpec::Fixed => vec![None],
            DepthSpec::Range { min, max } => self
                .depths
                .unwrap_or(DepthRange {
                    start: min,
                    stop: max,
                    step: 4,
                })
                .values()
                .into_iter()
                .map(Some)
                .collect(),
        }
    }
}

/// Aggregated metric at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub benchmark: String,
    pub noise: String,
    pub param: f64,
    pub depth: usize,
    pub rc: bool,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// `(mean, sample standard deviation / √n)`.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Everything a trial needs that does not depend on the trial index.
struct PointContext<'a> {
    cfg: &'a ExperimentConfig,
    metric: Metric,
    graph: MaxCutGraph,
    /// Shared circuit and compiler for fixed benchmarks.
    fixed: Option<(Circuit, Option<RandomizedCompiler>)>,
}

/// Idle and random circuits run with one cycle per listed depth step, so
/// idle cycles are only inserted into a random circuit when it is randomly
/// compiled. The decomposed Clifford+T benchmarks are always interleaved,
/// whether or not RC is on.
fn prepare_circuit(cfg: &ExperimentConfig, depth: usize, seed: u64) -> Result<Circuit> {
    let circ = build_benchmark(cfg.benchmark, depth, seed)?;
    let interleave = match cfg.benchmark {
        BenchmarkId::Idle | BenchmarkId::Random => cfg.rc,
        _ => cfg.benchmark.spec().gate_set == GateSet::CliffordT,
    };
    Ok(if interleave { interleave_idle(&circ) } else { circ })
}

fn compiler_for(cfg: &ExperimentConfig, circ: &Circuit) -> Result<Option<RandomizedCompiler>> {
    cfg.rc.then(|| RandomizedCompiler::new(circ)).transpose()
}

/// One trial's metric value.
fn run_trial(ctx: &PointContext, noise: &NoiseModel, depth: usize, trial_seed: u64) -> Result<f64> {
    let owned;
    let (circ, compiler) = match &ctx.fixed {
        Some((c, comp)) => (c, comp.as_ref()),
        None => {
            let c = prepare_circuit(ctx.cfg, depth, derive_seed(&[trial_seed, 0]))?;
            let comp = compiler_for(ctx.cfg, &c)?;
            owned = (c, comp);
            (&owned.0, owned.1.as_ref())
        }
    };
    let n = circ.n_qubits();
    let input = match ctx.metric {
        Metric::ExpectationValue => Ket::basis(n, 0),
        Metric::ProcessFidelity => random_product_state(n, derive_seed(&[trial_seed, 1])),
    };
    let compiled = compiler.map(|c| c.compile(derive_seed(&[trial_seed, 2])));
    let (exec, correction) = match &compiled {
        Some(rc) => (rc.circuit(), rc.frame().correction_gates()),
        None => (circ, Vec::new()),
    };
    let mut rho = run_noisy(exec, &ket_to_density(&input), noise);
    apply_gates(&mut rho, &correction);
    match ctx.metric {
        Metric::ProcessFidelity => {
            let mut reference = exec.apply_to_ket(&input)?;
            if !correction.is_empty() {
                let fix = Circuit::from_gates(n, correction)?;
                reference = fix.apply_to_ket(&reference)?;
            }
            Ok(rho.expectation_of_ket(&reference))
        }
        Metric::ExpectationValue => {
            let dist = measurement_distribution(&rho)?;
            maxcut_expectation(&dist, &ctx.graph)
        }
    }
}

/// Runs the sweep. Rows come out ordered by parameter, then depth; the
/// result does not depend on how many worker threads execute the trials.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let params = cfg.params()?;
    let depths = cfg.depth_values();
    let spec = cfg.benchmark.spec();
    let bench_key = BenchmarkId::ALL
        .iter()
        .position(|b| *b == cfg.benchmark)
        .expect("listed") as u64;
    let fixed = match spec.depth {
        DepthSpec::Fixed => {
            let c = prepare_circuit(cfg, 0, 0)?;
            let comp = compiler_for(cfg, &c)?;
            Some((c, comp))
        }
        DepthSpec::Range { .. } => None,
    };
    let ctx = PointContext {
        cfg,
        metric: spec.metric,
        graph: MaxCutGraph::hypercube_q3(),
        fixed,
    };
    let mut rows = Vec::with_capacity(params.len() * depths.len());
    for &param in &params {
        let noise = cfg.noise.model(param)?;
        for (di, depth) in depths.iter().enumerate() {
            let d = depth.unwrap_or(0);
            let values: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(&[cfg.seed, bench_key, di as u64, t as u64]);
                    run_trial(&ctx, &noise, d, seed)
                })
                .collect::<Result<_>>()?;
            let (mean, stderr) = mean_stderr(&values);
            let reported_depth = match (&ctx.fixed, depth) {
                (Some((c, _)), _) => c.depth(),
                (None, Some(d)) => *d,
                (None, None) => 0,
            };
            rows.push(ResultRow {
                benchmark: cfg.benchmark.name().to_string(),
                noise: cfg.noise.name().to_string(),
                param,
                depth: reported_depth,
                rc: cfg.rc,
                metric: spec.metric.name().to_string(),
                mean,
                stderr,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Emission

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 10] = [
    "benchmark", "noise", "param", "depth", "rc", "metric", "mean", "stderr", "trials", "seed",
];

/// Formats `x` with 10 significant digits.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-6..10).contains(&exp) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.9999999999 becomes 10.000000000).
    let carried = s.parse::<f64>().map(|v| v.abs() >= 10f64.powi(exp + 1)).unwrap_or(false);
    if carried && decimals > 0 {
        let d = decimals - 1;
        return format!("{x:.d$}");
    }
    s
}

/// `x` rounded to 10 significant digits.
pub fn round_sig10(x: f64) -> f64 {
    format_sig10(x).parse().unwrap_or(x)
}

fn rounded(row: &ResultRow) -> ResultRow {
    ResultRow {
        param: round_sig10(row.param),
        mean: round_sig10(row.mean),
        stderr: round_sig10(row.stderr),
        ..row.clone()
    }
}

fn csv_record(row: &ResultRow) -> [String; 10] {
    [
        row.benchmark.clone(),
        row.noise.clone(),
        format_sig10(row.param),
        row.depth.to_string(),
        row.rc.to_string(),
        row.metric.clone(),
        format_sig10(row.mean),
        format_sig10(row.stderr),
        row.trials.to_string(),
        row.seed.to_string(),
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    let rounded: Vec<ResultRow> = rows.iter().map(rounded).collect();
    serde_json::to_writer_pretty(&mut out, &rounded)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn to_json_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_json(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_reader(input)?)
}

/// Writes `rows` to `path` in `format`.
pub fn emit(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParams("no rows to emit".into()));
    }
    let file = fs::File::create(path)?;
    let buf = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(rows, buf),
        OutputFormat::Json => write_json(rows, buf),
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

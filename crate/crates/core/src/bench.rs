//! Experiment runners: runtime scaling against the MLE baseline, the Werner
//! family sweep, the bound report for the built-in sets, and single-shot
//! estimation.
//!
//! Every trial derives its own seed as `base_seed + trial + SEED_STRIDE * group`,
//! where `group` is the qubit count (scaling) or the grid-point index (Werner).
//! Trials run in parallel and rows are collected in trial order, so output
//! bytes never depend on scheduling.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::basis::pauli_basis;
use crate::error::{Result, TomoError};
use crate::lre::{lre_estimate, EstimateReport};
use crate::measurement::{
    builtin_set, cube_set, mse_upper_bound, optimal_bound_global, optimal_bound_local_2qubit,
    MeasurementSet,
};
use crate::mle::{mle_estimate, MleOptions};
use crate::sampling::{simulate_record, MeasurementRecord};
use crate::states::{mse, random_mixed_pure, werner, DensityMatrix};

/// Prime spacing between the seed blocks of different trial groups.
pub const SEED_STRIDE: u64 = 1_000_003;

/// Generator stream for the per-trial mixing weight.
const ALPHA_STREAM: u64 = 2;

/// Sets listed by the bound report when none are requested.
pub const DEFAULT_REPORT_SETS: [&str; 10] = [
    "cube1", "cube2", "cube3", "cube4", "tetra1", "tetra2", "tetra3", "tetra4", "mub1", "mub2",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Scaling,
    Werner,
    BoundReport,
    SingleShot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Total copies as a function of the qubit count: a product of factors
/// `a`, `a^b`, where each of `a`, `b` is an integer literal or `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopiesRule {
    factors: Vec<(Atom, Atom)>,
    text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Atom {
    Literal(u64),
    Qubits,
}

impl Atom {
    fn parse(s: &str, rule: &str) -> Result<Self> {
        let s = s.trim();
        if s == "n" {
            return Ok(Atom::Qubits);
        }
        s.parse().map(Atom::Literal).map_err(|_| {
            TomoError::parse(
                "copies-rule",
                format!("`{s}` in `{rule}` is neither an integer nor `n`"),
            )
        })
    }

    fn value(self, n: usize) -> u64 {
        match self {
            Atom::Literal(v) => v,
            Atom::Qubits => n as u64,
        }
    }
}

impl CopiesRule {
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(TomoError::parse("copies-rule", "empty expression"));
        }
        let factors = text
            .split('*')
            .map(|term| {
                let mut parts = term.split('^');
                let base = Atom::parse(parts.next().unwrap_or(""), text)?;
                let exp = match parts.next() {
                    Some(e) => Atom::parse(e, text)?,
                    None => Atom::Literal(1),
                };
                if parts.next().is_some() {
                    return Err(TomoError::parse(
                        "copies-rule",
                        format!("chained `^` in `{term}`"),
                    ));
                }
                Ok((base, exp))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CopiesRule {
            factors,
            text: text.trim().to_string(),
        })
    }

    /// Copies for `n` qubits; errors on overflow.
    pub fn evaluate(&self, n: usize) -> Result<u64> {
        let overflow = || {
            TomoError::parse(
                "copies-rule",
                format!("`{}` overflows at n = {n}", self.text),
            )
        };
        self.factors.iter().try_fold(1u64, |acc, &(base, exp)| {
            let exp = u32::try_from(exp.value(n)).map_err(|_| overflow())?;
            let term = base.value(n).checked_pow(exp).ok_or_else(overflow)?;
            acc.checked_mul(term).ok_or_else(overflow)
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl Default for CopiesRule {
    fn default() -> Self {
        CopiesRule::parse("3^9*4^n").expect("valid default rule")
    }
}

/// Parses `a..b` (inclusive) or a single qubit count.
pub fn parse_qubit_range(text: &str) -> Result<RangeInclusive<usize>> {
    let bad = || TomoError::parse("qubits", format!("`{text}` is not a range like 2..4"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            )
        }
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list. All values must lie in [0, 1].
pub fn parse_q_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| TomoError::parse("q", format!("`{s}` is not a number")))
    };
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(TomoError::parse(
                "q",
                format!("`{text}` is not start:stop:step"),
            ));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step <= 0.0 || stop < start {
            return Err(TomoError::parse(
                "q",
                format!("`{text}` describes an empty grid"),
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count > 1e6 {
            return Err(TomoError::parse(
                "q",
                format!("`{text}` has too many points"),
            ));
        }
        (0..=count as usize)
            .map(|k| {
                // snap to the decimal grid so 0.1*3 prints as 0.3
                let v = start + step * k as f64;
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(TomoError::parse("q", format!("{v} is outside [0, 1]")));
    }
    if values.is_empty() {
        return Err(TomoError::parse("q", "empty grid"));
    }
    Ok(values)
}

/// Parses a comma-separated list of positive copy counts.
pub fn parse_copies_list(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| {
                    TomoError::parse("copies", format!("`{s}` is not a positive integer"))
                })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub experiment: Experiment,
    pub qubit_range: RangeInclusive<usize>,
    pub copies_rule: CopiesRule,
    pub q_grid: Vec<f64>,
    pub copies_list: Vec<u64>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_format: OutputFormat,
    /// Options for the MLE baseline in the scaling study.
    pub mle_options: MleOptions,
    /// Set names for the bound report.
    pub sets: Vec<String>,
    /// Worker threads for trials; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Zero the timing columns and omit the generation timestamp.
    pub deterministic: bool,
}

impl BenchmarkConfig {
    pub fn new(experiment: Experiment) -> Self {
        BenchmarkConfig {
            experiment,
            qubit_range: 2..=4,
            copies_rule: CopiesRule::default(),
            q_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            copies_list: vec![36_000],
            trials: 10,
            base_seed: 0,
            output_format: OutputFormat::Csv,
            mle_options: MleOptions {
                max_iterations: 500,
                ..MleOptions::default()
            },
            sets: DEFAULT_REPORT_SETS.iter().map(|s| s.to_string()).collect(),
            threads: None,
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(TomoError::OutOfRange {
                name: "trials",
                value: 0.0,
                range: ">= 1",
            });
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(TomoError::OutOfRange {
                name: "q",
                value: *q,
                range: "[0, 1]",
            });
        }
        if self.threads == Some(0) {
            return Err(TomoError::OutOfRange {
                name: "threads",
                value: 0.0,
                range: ">= 1",
            });
        }
        self.mle_options.validate()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| TomoError::Unsupported(format!("thread pool: {e}")))
    }
}

fn trial_seed(base: u64, trial: usize, group: usize) -> u64 {
    base.wrapping_add(trial as u64)
        .wrapping_add(SEED_STRIDE.wrapping_mul(group as u64))
}

/// One cell of a result table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Column-labelled rows, rendered as CSV or JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                serde_json::to_string_pretty(&self.to_json_value()).expect("serializable") + "\n"
            }
        }
    }
}

/// Raw rows plus an optional summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub raw: ResultTable,
    pub summary: Option<ResultTable>,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

// --- scaling -------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n_qubits: usize,
    pub trial: usize,
    pub copies: u64,
    pub alpha: f64,
    /// Seconds.
    pub time_lre: f64,
    pub time_mle: f64,
    pub mse_lre: f64,
    pub mse_plre: f64,
    pub mse_mle: f64,
    pub mle_iterations: usize,
    pub mle_converged: bool,
    /// Largest decrease between consecutive likelihood values (0 if monotone).
    pub mle_max_drop: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSummary {
    pub n_qubits: usize,
    pub copies: u64,
    pub median_time_lre: f64,
    pub median_time_mle: f64,
    pub mean_mse_lre: f64,
    pub mean_mse_plre: f64,
    pub mean_mse_mle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub rows: Vec<ScalingRow>,
    pub summary: Vec<ScalingSummary>,
}

/// LRE against MLE on random mixed states, cube sets, `copies_rule(n)` copies.
pub fn run_scaling(config: &BenchmarkConfig) -> Result<ScalingResult> {
    let (result, status) = run_scaling_partial(config);
    status.map(|()| result)
}

/// Like [`run_scaling`], but keeps the rows completed before a failure.
/// Rows of a failing group are kept up to the first failing trial.
pub fn run_scaling_partial(config: &BenchmarkConfig) -> (ScalingResult, Result<()>) {
    let mut result = ScalingResult {
        rows: Vec::new(),
        summary: Vec::new(),
    };
    let status = scaling_into(config, &mut result);
    (result, status)
}

fn scaling_into(config: &BenchmarkConfig, out: &mut ScalingResult) -> Result<()> {
    config.validate()?;
    let pool = config.pool()?;
    for n in config.qubit_range.clone() {
        let set = cube_set(n)?;
        let basis = pauli_basis(n)?;
        let copies = config.copies_rule.evaluate(n)?;
        let outcomes: Vec<Result<ScalingRow>> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|trial| scaling_trial(config, &set, &basis, n, copies, trial))
                .collect()
        });
        let mut group = Vec::with_capacity(outcomes.len());
        for outcome in outcomes {
            match outcome {
                Ok(row) => group.push(row),
                Err(e) => {
                    out.rows.extend(group);
                    return Err(e);
                }
            }
        }

        let mut t_lre: Vec<f64> = group.iter().map(|r| r.time_lre).collect();
        let mut t_mle: Vec<f64> = group.iter().map(|r| r.time_mle).collect();
        let mean =
            |f: fn(&ScalingRow) -> f64| group.iter().map(f).sum::<f64>() / group.len() as f64;
        out.summary.push(ScalingSummary {
            n_qubits: n,
            copies,
            median_time_lre: median(&mut t_lre),
            median_time_mle: median(&mut t_mle),
            mean_mse_lre: mean(|r| r.mse_lre),
            mean_mse_plre: mean(|r| r.mse_plre),
            mean_mse_mle: mean(|r| r.mse_mle),
        });
        out.rows.extend(group);
    }
    Ok(())
}

fn scaling_trial(
    config: &BenchmarkConfig,
    set: &MeasurementSet,
    basis: &crate::basis::OperatorBasis,
    n: usize,
    copies: u64,
    trial: usize,
) -> Result<ScalingRow> {
    let seed = trial_seed(config.base_seed, trial, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ALPHA_STREAM);
    let alpha: f64 = rng.random();
    let truth = random_mixed_pure(n, alpha, seed)?;
    let record = simulate_record(&truth, set, copies, seed)?;

    let report = lre_estimate(&record, set, basis, Some(&truth))?;
    let start = Instant::now();
    let mle = mle_estimate(&record, set, &config.mle_options)?;
    let time_mle = start.elapsed().as_secs_f64();
    let mle_max_drop = mle
        .likelihood_trace
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);

    let (time_lre, time_mle) = if config.deterministic {
        (0.0, 0.0)
    } else {
        (report.elapsed_total().as_secs_f64(), time_mle)
    };
    Ok(ScalingRow {
        n_qubits: n,
        trial,
        copies,
        alpha,
        time_lre,
        time_mle,
        mse_lre: report.mse_vs_truth.expect("truth supplied"),
        mse_plre: report.mse_plre_vs_truth.expect("truth supplied"),
        mse_mle: mse(mle.rho.matrix(), &truth)?,
        mle_iterations: mle.iterations,
        mle_converged: mle.converged,
        mle_max_drop,
        seed,
    })
}

impl ScalingResult {
    pub fn output(&self) -> ExperimentOutput {
        let raw = ResultTable {
            columns: vec![
                "n",
                "trial",
                "copies",
                "alpha",
                "time_lre",
                "time_mle",
                "mse_lre",
                "mse_plre",
                "mse_mle",
                "mle_iterations",
                "mle_converged",
                "mle_max_drop",
                "seed",
            ],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n_qubits as u64),
                        Cell::Int(r.trial as u64),
                        Cell::Int(r.copies),
                        Cell::Float(r.alpha),
                        Cell::Float(r.time_lre),
                        Cell::Float(r.time_mle),
                        Cell::Float(r.mse_lre),
                        Cell::Float(r.mse_plre),
                        Cell::Float(r.mse_mle),
                        Cell::Int(r.mle_iterations as u64),
                        Cell::Bool(r.mle_converged),
                        Cell::Float(r.mle_max_drop),
                        Cell::Int(r.seed),
                    ]
                })
                .collect(),
        };
        let summary = ResultTable {
            columns: vec![
                "n",
                "copies",
                "median_time_lre",
                "median_time_mle",
                "mean_mse_lre",
                "mean_mse_plre",
                "mean_mse_mle",
            ],
            rows: self
                .summary
                .iter()
                .map(|s| {
                    vec![
                        Cell::Int(s.n_qubits as u64),
                        Cell::Int(s.copies),
                        Cell::Float(s.median_time_lre),
                        Cell::Float(s.median_time_mle),
                        Cell::Float(s.mean_mse_lre),
                        Cell::Float(s.mean_mse_plre),
                        Cell::Float(s.mean_mse_mle),
                    ]
                })
                .collect(),
        };
        ExperimentOutput {
            raw,
            summary: Some(summary),
        }
    }
}

// --- werner --------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct WernerRow {
    pub q: f64,
    pub copies: u64,
    pub trial: usize,
    pub mse_lre: f64,
    pub mse_plre: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WernerSummary {
    pub q: f64,
    pub copies: u64,
    pub trials: usize,
    pub mean_mse_lre: f64,
    pub se_mse_lre: f64,
    pub mean_mse_plre: f64,
    pub se_mse_plre: f64,
    /// `(M/4N) Tr((XᵀX)⁻¹)` for the two-qubit cube set, i.e. 99/N.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WernerResult {
    pub rows: Vec<WernerRow>,
    pub summary: Vec<WernerSummary>,
}

/// LRE and PLRE error on Werner states measured with the two-qubit cube set.
pub fn run_werner(config: &BenchmarkConfig) -> Result<WernerResult> {
    config.validate()?;
    let pool = config.pool()?;
    let set = cube_set(2)?;
    let basis = pauli_basis(2)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut group = 0;
    for &q in &config.q_grid {
        let truth = werner(q)?;
        for &copies in &config.copies_list {
            let point: Vec<WernerRow> = pool.install(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let seed = trial_seed(config.base_seed, trial, group);
                        let record = simulate_record(&truth, &set, copies, seed)?;
                        let report = lre_estimate(&record, &set, &basis, Some(&truth))?;
                        Ok(WernerRow {
                            q,
                            copies,
                            trial,
                            mse_lre: report.mse_vs_truth.expect("truth supplied"),
                            mse_plre: report.mse_plre_vs_truth.expect("truth supplied"),
                            seed,
                        })
                    })
                    .collect::<Result<_>>()
            })?;
            let (mean_mse_lre, se_mse_lre) = mean_and_se(point.iter().map(|r| r.mse_lre));
            let (mean_mse_plre, se_mse_plre) = mean_and_se(point.iter().map(|r| r.mse_plre));
            summary.push(WernerSummary {
                q,
                copies,
                trials: config.trials,
                mean_mse_lre,
                se_mse_lre,
                mean_mse_plre,
                se_mse_plre,
                bound: mse_upper_bound(&set, copies)?,
            });
            rows.extend(point);
            group += 1;
        }
    }
    Ok(WernerResult { rows, summary })
}

impl WernerResult {
    pub fn output(&self) -> ExperimentOutput {
        let raw = ResultTable {
            columns: vec!["q", "copies", "trial", "mse_lre", "mse_plre", "seed"],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Float(r.q),
                        Cell::Int(r.copies),
                        Cell::Int(r.trial as u64),
                        Cell::Float(r.mse_lre),
                        Cell::Float(r.mse_plre),
                        Cell::Int(r.seed),
                    ]
                })
                .collect(),
        };
        let summary = ResultTable {
            columns: vec![
                "q",
                "copies",
                "trials",
                "mean_mse_lre",
                "se_mse_lre",
                "mean_mse_plre",
                "se_mse_plre",
                "bound",
            ],
            rows: self
                .summary
                .iter()
                .map(|s| {
                    vec![
                        Cell::Float(s.q),
                        Cell::Int(s.copies),
                        Cell::Int(s.trials as u64),
                        Cell::Float(s.mean_mse_lre),
                        Cell::Float(s.se_mse_lre),
                        Cell::Float(s.mean_mse_plre),
                        Cell::Float(s.se_mse_plre),
                        Cell::Float(s.bound),
                    ]
                })
                .collect(),
        };
        ExperimentOutput {
            raw,
            summary: Some(summary),
        }
    }
}

// --- bound report ----------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub label: String,
    pub n_qubits: usize,
    pub count: usize,
    /// Distinct Gram eigenvalues with multiplicities, largest first.
    pub spectrum: Vec<(f64, usize)>,
    pub trace_gram_inverse: f64,
    /// `N * mse_upper_bound`, i.e. `(M/4) Tr((XᵀX)⁻¹)`.
    pub bound_coefficient: f64,
    pub global_optimum: f64,
    pub local_optimum: Option<f64>,
    pub achieves_global: bool,
    pub achieves_local: bool,
}

impl BoundRow {
    pub fn flag(&self) -> &'static str {
        if self.achieves_global {
            "achieves global optimum"
        } else if self.achieves_local {
            "achieves local optimum"
        } else {
            ""
        }
    }

    pub fn spectrum_text(&self) -> String {
        let mut s = String::new();
        for (k, (value, mult)) in self.spectrum.iter().enumerate() {
            if k > 0 {
                s.push(';');
            }
            let _ = write!(s, "{}x{mult}", (value * 1e9).round() / 1e9);
        }
        s
    }
}

/// Groups a non-increasing spectrum into (value, multiplicity) pairs.
fn group_spectrum(eigenvalues: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &lambda in eigenvalues {
        match out.last_mut() {
            Some((value, mult)) if (*value - lambda).abs() <= 1e-9 * value.abs().max(1.0) => {
                *mult += 1
            }
            _ => out.push((lambda, 1)),
        }
    }
    out
}

/// Gram spectra and bound coefficients of the configured sets.
pub fn run_bound_report(config: &BenchmarkConfig) -> Result<Vec<BoundRow>> {
    config
        .sets
        .iter()
        .map(|name| {
            let set = builtin_set(name)?;
            bound_row(&set)
        })
        .collect()
}

pub fn bound_row(set: &MeasurementSet) -> Result<BoundRow> {
    let m = set.count() as u64;
    let d = set.dim();
    let bound_coefficient = mse_upper_bound(set, m)? * m as f64;
    let global_optimum = optimal_bound_global(d, 1);
    let local_optimum = (set.n_qubits() == 2).then(|| optimal_bound_local_2qubit(1));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    Ok(BoundRow {
        label: set.label().to_string(),
        n_qubits: set.n_qubits(),
        count: set.count(),
        spectrum: group_spectrum(set.gram_eigenvalues()),
        trace_gram_inverse: set.gram_inverse_trace()?,
        bound_coefficient,
        global_optimum,
        local_optimum,
        achieves_global: close(bound_coefficient, global_optimum),
        achieves_local: local_optimum.is_some_and(|l| close(bound_coefficient, l)),
    })
}

pub fn bound_table(rows: &[BoundRow]) -> ResultTable {
    ResultTable {
        columns: vec![
            "set",
            "n",
            "M",
            "gram_spectrum",
            "trace_gram_inverse",
            "bound_coefficient",
            "global_optimum",
            "local_optimum",
            "flag",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.label.clone()),
                    Cell::Int(r.n_qubits as u64),
                    Cell::Int(r.count as u64),
                    Cell::Text(r.spectrum_text()),
                    Cell::Float(r.trace_gram_inverse),
                    Cell::Float(r.bound_coefficient),
                    Cell::Float(r.global_optimum),
                    r.local_optimum
                        .map_or(Cell::Text(String::new()), Cell::Float),
                    Cell::Text(r.flag().to_string()),
                ]
            })
            .collect(),
    }
}

// --- single shot -------------------------------------------------------------

/// Resolves a built-in set name, or loads a set from a JSON file.
pub fn resolve_set(name: &str) -> Result<MeasurementSet> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        MeasurementSet::from_json(&std::fs::read_to_string(path)?)
    } else {
        builtin_set(name)
    }
}

/// Reads a record from JSON, or from CSV (one frequency per line) when the
/// file name ends in `.csv`; CSV records get `copies / M` trials per base.
pub fn load_record(path: &Path, set: &MeasurementSet, copies: u64) -> Result<MeasurementRecord> {
    let text = std::fs::read_to_string(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        MeasurementRecord::from_csv(&text, set.label(), copies as f64 / set.count() as f64)
    } else {
        MeasurementRecord::from_json(&text)
    }
}

/// Simulates (or takes) one record of `truth` and runs the estimator on it.
pub fn single_shot(
    truth: &DensityMatrix,
    set: &MeasurementSet,
    copies: u64,
    seed: u64,
    record: Option<MeasurementRecord>,
) -> Result<EstimateReport> {
    if truth.dim() != set.dim() {
        return Err(TomoError::ShapeMismatch(format!(
            "state has dimension {}, set `{}` has dimension {}",
            truth.dim(),
            set.label(),
            set.dim()
        )));
    }
    let record = match record {
        Some(r) => r,
        None => simulate_record(truth, set, copies, seed)?,
    };
    let basis = pauli_basis(set.n_qubits())?;
    lre_estimate(&record, set, &basis, Some(truth))
}

/// File-driven form of [`single_shot`].
pub fn run_single_shot(
    state_file: &Path,
    set_name: &str,
    copies: u64,
    seed: u64,
    record_in: Option<&Path>,
) -> Result<EstimateReport> {
    let truth = DensityMatrix::from_json(&std::fs::read_to_string(state_file)?)?;
    let set = resolve_set(set_name)?;
    let record = record_in
        .map(|p| load_record(p, &set, copies))
        .transpose()?;
    single_shot(&truth, &set, copies, seed, record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_rule_default() {
        let rule = CopiesRule::default();
        assert_eq!(rule.evaluate(1).unwrap(), 19683 * 4);
        assert_eq!(rule.evaluate(4).unwrap(), 19683 * 256);
        assert_eq!(
            CopiesRule::parse("36000").unwrap().evaluate(3).unwrap(),
            36000
        );
        assert_eq!(
            CopiesRule::parse("100*6^n").unwrap().evaluate(2).unwrap(),
            3600
        );
        assert_eq!(CopiesRule::parse("n^n").unwrap().evaluate(3).unwrap(), 27);
    }

    #[test]
    fn copies_rule_errors() {
        for bad in ["", "3^", "x*4", "3^4^5", "2**3"] {
            assert!(CopiesRule::parse(bad).is_err(), "{bad}");
        }
        assert!(CopiesRule::parse("10^n").unwrap().evaluate(30).is_err());
    }

    #[test]
    fn qubit_ranges() {
        assert_eq!(parse_qubit_range("2..4").unwrap(), 2..=4);
        assert_eq!(parse_qubit_range("2..=3").unwrap(), 2..=3);
        assert_eq!(parse_qubit_range("3").unwrap(), 3..=3);
        for bad in ["4..2", "0..2", "a..b", ""] {
            assert!(parse_qubit_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn q_grids() {
        let g = parse_q_grid("0:1:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_q_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        for bad in ["0:1", "0:1:0", "1:0:0.1", "0,2", "a", "0:1:1e-9"] {
            assert!(parse_q_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn copies_lists() {
        assert_eq!(
            parse_copies_list("36000,360000").unwrap(),
            vec![36000, 360000]
        );
        assert!(parse_copies_list("0").is_err());
        assert!(parse_copies_list("1,,2").is_err());
    }

    #[test]
    fn summary_statistics() {
        let (m, se) = mean_and_se([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn csv_escaping() {
        let t = ResultTable {
            columns: vec!["a", "b"],
            rows: vec![vec![Cell::Text("x,y".into()), Cell::Float(0.5)]],
        };
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",0.5\n");
    }

    #[test]
    fn spectrum_grouping() {
        assert_eq!(
            group_spectrum(&[3.0, 3.0 + 1e-12, 1.0, 1.0, 1.0]),
            vec![(3.0, 2), (1.0, 3)]
        );
    }

    #[test]
    fn seeds_are_disjoint_across_groups() {
        let a: Vec<u64> = (0..100).map(|t| trial_seed(7, t, 2)).collect();
        let b: Vec<u64> = (0..100).map(|t| trial_seed(7, t, 3)).collect();
        assert!(a.iter().all(|s| !b.contains(s)));
    }
}

//! `tomo`: command-line front end for the LRE tomography library.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lre_tomo::bench::{
    self, parse_copies_list, parse_q_grid, parse_qubit_range, BenchmarkConfig, CopiesRule,
    Experiment, ExperimentOutput, OutputFormat, ResultTable,
};
use lre_tomo::TomoError;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tomo",
    version,
    about = "Quantum state tomography by linear regression estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gram spectra and MSE bound coefficients of measurement sets.
    BoundReport {
        /// Comma-separated set names (default: cube1-4, tetra1-4, mub1-2).
        #[arg(long, value_delimiter = ',')]
        sets: Option<Vec<String>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// LRE against MLE runtime and MSE on random states with cube sets.
    Scaling {
        /// Qubit range, e.g. 2..4.
        #[arg(long, default_value = "2..4")]
        qubits: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Total copies as a function of n, e.g. "3^9*4^n".
        #[arg(long, default_value = "3^9*4^n")]
        copies_rule: String,
        /// Iteration cap of the MLE baseline.
        #[arg(long, default_value_t = 500)]
        mle_max_iterations: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// LRE and PLRE error on Werner states with the two-qubit cube set.
    Werner {
        /// Grid as start:stop:step or a comma-separated list.
        #[arg(long, default_value = "0:1:0.1")]
        q: String,
        /// Comma-separated total copy counts.
        #[arg(long, default_value = "36000")]
        copies: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate one state from a simulated or supplied record.
    Estimate {
        /// Density matrix JSON file of the true state.
        #[arg(long)]
        state: PathBuf,
        /// Built-in set name (cube2, tetra3, mub2, ...) or a set JSON file.
        #[arg(long)]
        set: String,
        #[arg(long)]
        copies: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measurement record (JSON, or CSV with one frequency per line).
        #[arg(long)]
        record_in: Option<PathBuf>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write zero timings.
        #[arg(long)]
        no_timestamp: bool,
    },
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table path; defaults to `<out>.summary.<ext>` when --out is set.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the generation timestamp and zero timing columns.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

enum Failure {
    Usage(String),
    Tomo(TomoError),
}

impl From<TomoError> for Failure {
    fn from(e: TomoError) -> Self {
        Failure::Tomo(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Tomo(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Tomo(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            })
        }
    }
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("TOMO_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Failure::Usage(format!(
                "TOMO_THREADS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Input-grammar errors are usage errors.
fn usage<T>(r: lre_tomo::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn config(experiment: Experiment, output: &OutputArgs) -> Result<BenchmarkConfig, Failure> {
    let mut c = BenchmarkConfig::new(experiment);
    c.output_format = output.format.into();
    c.deterministic = output.no_timestamp;
    c.threads = thread_cap()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::BoundReport { sets, output } => {
            let mut c = config(Experiment::BoundReport, &output)?;
            if let Some(sets) = sets {
                c.sets = sets;
            }
            let rows = bench::run_bound_report(&c)?;
            emit(
                &ExperimentOutput {
                    raw: bench::bound_table(&rows),
                    summary: None,
                },
                &output,
            )
        }
        Command::Scaling {
            qubits,
            trials,
            seed,
            copies_rule,
            mle_max_iterations,
            output,
        } => {
            let mut c = config(Experiment::Scaling, &output)?;
            c.qubit_range = usage(parse_qubit_range(&qubits))?;
            c.copies_rule = usage(CopiesRule::parse(&copies_rule))?;
            c.trials = trials;
            c.base_seed = seed;
            c.mle_options.max_iterations = mle_max_iterations;
            usage(c.validate())?;
            let (result, status) = bench::run_scaling_partial(&c);
            emit(&result.output(), &output)?;
            status.map_err(Failure::from)
        }
        Command::Werner {
            q,
            copies,
            trials,
            seed,
            output,
        } => {
            let mut c = config(Experiment::Werner, &output)?;
            c.q_grid = usage(parse_q_grid(&q))?;
            c.copies_list = usage(parse_copies_list(&copies))?;
            c.trials = trials;
            c.base_seed = seed;
            usage(c.validate())?;
            let result = bench::run_werner(&c)?;
            emit(&result.output(), &output)
        }
        Command::Estimate {
            state,
            set,
            copies,
            seed,
            record_in,
            out,
            no_timestamp,
        } => {
            if copies == 0 {
                return Err(Failure::Usage("--copies must be positive".into()));
            }
            let report = bench::run_single_shot(&state, &set, copies, seed, record_in.as_deref())?;
            let mut text = report.to_json_with_timing(!no_timestamp);
            text.push('\n');
            write_text(out.as_deref(), &text)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn render(table: &ResultTable, output: &OutputArgs) -> String {
    let format = output.format.into();
    if output.no_timestamp {
        return table.render(format);
    }
    match format {
        OutputFormat::Csv => format!("# generated_at_unix={}\n{}", timestamp(), table.to_csv()),
        OutputFormat::Json => {
            let mut value = table.to_json_value();
            value["generated_at_unix"] = timestamp().into();
            serde_json::to_string_pretty(&value).expect("serializable") + "\n"
        }
    }
}

fn summary_path(output: &OutputArgs) -> Option<PathBuf> {
    if output.summary.is_some() {
        return output.summary.clone();
    }
    let out = output.out.as_ref()?;
    let ext = match output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    Some(out.with_extension(format!("summary.{ext}")))
}

fn emit(result: &ExperimentOutput, output: &OutputArgs) -> Result<(), Failure> {
    write_text(output.out.as_deref(), &render(&result.raw, output))?;
    if let Some(summary) = &result.summary {
        match summary_path(output) {
            Some(p) => write_text(Some(&p), &render(summary, output))?,
            None => log::info!("summary:\n{}", summary.to_csv()),
        }
    }
    Ok(())
}

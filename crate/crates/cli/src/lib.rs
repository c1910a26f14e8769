//! Command-line front end for `dephasr`: scenario configuration, kernel
//! tables, one-time and two-time runs across modes, figure datasets and
//! mode comparisons, all written as CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dephasr::Mode;

use crate::config::{default_document, Scenario};
pub use crate::error::{CliError, CliResult};

/// Environment variable capping the worker pool size.
pub const THREADS_VAR: &str = "DEPHASR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dephasr",
    version,
    about = "Non-Markovian correlation functions of the pure-dephasing spin-boson model",
    after_help = "Any config field can be overridden with a flag named by its JSON path, \
                  e.g. --params.gamma 0.2, --t2 0.2,1,5 or --operators.a 'sx + 0.5*sz'."
)]
pub struct Cli {
    /// JSON scenario file layered over the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate D(t), Gamma(t) and the cross kernel for each configured t2.
    Kernels,
    /// One-time expectation values <sx>, <sy>, <sz> for each mode.
    Evolve {
        /// Write the density matrix elements instead.
        #[arg(long)]
        master: bool,
    },
    /// <A(t1) B(t2)> for each configured t2 and mode.
    TwoTime,
    /// Closed-form <A(t1) B(t2)> only.
    ExactCf {
        /// Evaluate at this single t1 instead of over the grid.
        #[arg(long)]
        t1: Option<f64>,
    },
    /// Write the dataset of one of the three standard figures.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        /// Directory receiving figN.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Max and RMS deviations between every pair of configured modes.
    Compare,
}

/// Parses raw arguments (without the program name) and runs the command.
pub fn run<I>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = String>,
{
    let (rest, overrides) = config::split_overrides(args)?;
    let cli = Cli::parse_from(std::iter::once("dephasr".to_string()).chain(rest));
    execute(cli, &overrides)
}

pub fn execute(cli: Cli, overrides: &[(String, String)]) -> CliResult<()> {
    let pool = thread_pool()?;
    pool.install(|| dispatch(cli, overrides))
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

fn dispatch(cli: Cli, overrides: &[(String, String)]) -> CliResult<()> {
    let file = cli.config.as_deref();
    if let Command::Figure { id, out_dir } = &cli.command {
        let cfg = config::load(commands::figure_document(*id)?, file, overrides)?;
        let scenario = Scenario::new(cfg)?;
        let bytes = commands::figure(*id, &scenario)?;
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        let name = scenario.config.output.clone().unwrap_or_else(|| format!("fig{id}.csv"));
        return write_file(&out_dir.join(name), &bytes);
    }

    let scenario = Scenario::new(config::load(default_document(), file, overrides)?)?;
    let output = scenario.config.output.clone();
    match cli.command {
        Command::Kernels => emit(output.as_deref(), &commands::kernels(&scenario)?),
        Command::Evolve { master } => emit(output.as_deref(), &commands::evolve(&scenario, master)?),
        Command::TwoTime => emit(
            output.as_deref(),
            &commands::two_time(&scenario, &scenario.config.modes)?,
        ),
        Command::ExactCf { t1: Some(t1) } => emit(output.as_deref(), &commands::exact_cf_at(&scenario, t1)?),
        Command::ExactCf { t1: None } => emit(output.as_deref(), &commands::two_time(&scenario, &[Mode::Exact])?),
        Command::Compare => {
            let devs = commands::compare(&scenario)?;
            let summary = commands::compare_summary(&scenario, &devs);
            let csv = commands::compare_csv(&devs)?;
            if is_stdout(output.as_deref()) {
                eprint!("{summary}");
            } else {
                print!("{summary}");
            }
            emit(output.as_deref(), &csv)
        }
        Command::Figure { .. } => unreachable!("handled above"),
    }
}

fn is_stdout(output: Option<&str>) -> bool {
    matches!(output, None | Some("-"))
}

fn emit(output: Option<&str>, bytes: &[u8]) -> CliResult<()> {
    match output {
        None | Some("-") => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
        Some(path) => write_file(Path::new(path), bytes),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

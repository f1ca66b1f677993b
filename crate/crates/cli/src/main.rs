//! `maser`: Bell-sum sweeps, peak finding and oracle comparisons.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maser_core::sweep::{find_peaks, read_sweep, render, run_sweep, Metadata, SweepFile};
use maser_core::{compare_with_cf, Error, PumpModel, Result};

use config::{OracleFileConfig, SweepFileConfig};

#[derive(Parser, Debug)]
#[command(name = "maser", version, about = "Micromaser steady states and two-atom Bell sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep one parameter and write the Bell sum at each point.
    Sweep(SweepArgs),
    /// Report the local maxima of B in a sweep file.
    Peaks(PeaksArgs),
    /// Compare the continued fraction with the master-equation oracle.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// JSON file with any of the flag names as keys; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter preset: maser or laser.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "N")]
    pub n: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub nth: Option<f64>,
    /// D, tau, N, kappa, gamma or nth.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi3: Option<f64>,
    /// Fixed tau for sweeps along an axis other than D and tau.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json; defaults to the output extension, else csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// first_phase or averaged.
    #[arg(long = "e0-mode")]
    pub e0_mode: Option<String>,
    /// Include the lower axis bound as a sample point.
    #[arg(long = "include-min")]
    pub include_min: bool,
    /// Record wall time per point (output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
struct PeaksArgs {
    /// Sweep output in CSV or JSON.
    file: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub nth: Option<f64>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Simulated time in units of 1/g; 20 photon lifetimes when omitted.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// L1 tolerance of the comparison.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// poisson or regular.
    #[arg(long)]
    pub arrival: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => SweepFileConfig::load(path)?,
        None => SweepFileConfig::default(),
    };
    let merged = file.merge(args);
    let (config, out, format) = merged.resolve()?;
    let rows = run_sweep(&config)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points failed", rows.len());
    }
    let text = render(
        &SweepFile {
            metadata: Metadata::for_config(&config),
            rows,
        },
        format,
    )?;
    write_output(out.as_deref(), &text)
}

fn peaks(args: PeaksArgs) -> Result<()> {
    let file = read_sweep(&args.file)?;
    let summary = find_peaks(&file.rows)?;
    write_output(args.out.as_deref(), &to_json(&summary)?)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => OracleFileConfig::load(path)?,
        None => OracleFileConfig::default(),
    };
    let merged = file.merge(args);
    let (params, run, tol, arrival, out) = merged.resolve()?;
    let pump = PumpModel {
        arrival,
        ..PumpModel::from_params(&params)
    };
    let report = compare_with_cf(&params, &pump, &run, &tol)?;
    write_output(out.as_deref(), &to_json(&report)?)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

/// One JSON object on standard error.
fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            report_error("usage", first);
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Peaks(a) => peaks(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::from(exit_code(&e))
        }
    }
}

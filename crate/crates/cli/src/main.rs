use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Usage errors exit with this code so they never read as a certify verdict.
const EXIT_USAGE: u8 = 64;
const EXIT_FAILURE: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "homcert", version, about = "HOM indistinguishability certification for time-bin BB84 transmitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the delay sweep and write one histogram file per group plus a manifest.
    Simulate(SimulateArgs),
    /// Fit every group, test for a common dip and write the certification report.
    Certify(CertifyArgs),
    /// Fit a single histogram file.
    Fit(FitArgs),
    /// Tabulate a model curve for plotting.
    Theory(TheoryArgs),
    /// Re-render a saved structured report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Args)]
struct Output {
    /// Output directory.
    #[arg(long, env = "HOMCERT_OUT_DIR", value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment configuration (TOML). Built-in defaults when omitted.
    #[arg(long, value_name = "FILE", conflicts_with = "replay")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0, conflicts_with = "replay")]
    seed: u64,
    /// Take configuration and seed from an earlier simulate manifest.
    #[arg(long, value_name = "MANIFEST")]
    replay: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CovarianceArg {
    Absolute,
    ResidualScaled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SidedArg {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightsArg {
    PerGroup,
    AcrossGroups,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Histogram files, or directories whose `*.csv` files are all read.
    #[arg(required = true, value_name = "PATH")]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Configuration supplying the source intensity variance for the report notes.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "residual-scaled")]
    covariance: CovarianceArg,
    /// Sidedness of the power statement.
    #[arg(long, value_enum, default_value = "one")]
    sided: SidedArg,
    /// Weights used by the likelihood-ratio fits.
    #[arg(long, value_enum, default_value = "across-groups")]
    weights: WeightsArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "residual-scaled")]
    covariance: CovarianceArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Query name; see `--list`.
    #[arg(required_unless_present = "list")]
    query: Option<String>,
    /// Query parameter as `name=value`; repeatable.
    #[arg(short, long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// List the available queries.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A `report.json` written by `certify`.
    #[arg(value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Certify(a) => commands::certify(a),
        Command::Fit(a) => commands::fit(a),
        Command::Theory(a) => commands::theory(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

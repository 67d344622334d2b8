use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmi_core::config::{load_config, Suite};
use qmi_core::exec::Exec;
use qmi_core::liealg::{bracket_table, ModeAlgebra};
use qmi_core::report::{Format, VerificationReport};
use qmi_core::suites::run_suite;

#[derive(Parser)]
#[command(name = "qmi", version, about = "Exact verification of quasi modules at infinity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites from a configuration file.
    Verify(VerifyArgs),
    /// Print the mode bracket table of the configured algebra.
    Brackets(BracketArgs),
    /// Reformat a saved machine report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Human,
    Machine,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Human => Format::Human,
            OutFormat::Machine => Format::Machine,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Suite to run; repeat to run several. Overrides the configured list.
    #[arg(long = "suite")]
    suites: Vec<Suite>,
    /// Highest degree for the round-trip comparison.
    #[arg(long)]
    degree: Option<usize>,
    /// Exponent window, used on both axes.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    window: Option<Vec<i64>>,
    #[arg(long, value_enum, default_value = "human")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every sweep on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BracketArgs {
    #[arg(long)]
    config: PathBuf,
    /// Mode range for both arguments.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    window: Option<Vec<i64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report written with `--format machine`.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit statuses: checks failed, or the input could not be used.
const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;

fn write_out(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn window(w: &Option<Vec<i64>>) -> Result<Option<(i64, i64)>, String> {
    match w.as_deref() {
        None => Ok(None),
        Some([lo, hi]) if lo <= hi => Ok(Some((*lo, *hi))),
        Some(_) => Err("--window: LO must not exceed HI".into()),
    }
}

fn verify(a: &VerifyArgs) -> Result<bool, String> {
    let mut cfg = load_config(&a.config).map_err(|e| e.to_string())?;
    if !a.suites.is_empty() {
        cfg.suites = a.suites.clone();
    }
    if let Some(d) = a.degree {
        cfg.degree = d;
    }
    if let Some(w) = window(&a.window)? {
        cfg.window = w;
    }
    let exec = if a.sequential { Exec::Sequential } else { Exec::default() };
    let report = run_suite(&cfg, exec);
    let out = a.out.as_deref().or(cfg.output.as_deref());
    write_out(out, &report.emit(a.format.into()))?;
    Ok(report.all_passed())
}

fn brackets(a: &BracketArgs) -> Result<bool, String> {
    let cfg = load_config(&a.config).map_err(|e| e.to_string())?;
    let (lo, hi) = window(&a.window)?.unwrap_or((-2, 2));
    let alg = ModeAlgebra::new(cfg.lie, cfg.gamma, cfg.level);
    let table = bracket_table(&alg, lo..=hi).map_err(|e| e.to_string())?;
    write_out(a.out.as_deref(), &table)?;
    Ok(true)
}

fn report(a: &ReportArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| format!("{}: {e}", a.input.display()))?;
    let r = VerificationReport::parse_machine(&text).map_err(|e| format!("{}: {e}", a.input.display()))?;
    write_out(a.out.as_deref(), &r.emit(a.format.into()))?;
    Ok(r.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Brackets(a) => brackets(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("qmi: {e}");
            ExitCode::from(USAGE)
        }
    }
}

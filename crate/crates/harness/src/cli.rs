//! Command line entry point.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::experiments::run_experiment;
use crate::output::{Check, Verdict};
use crate::verification;

#[derive(Debug, Parser)]
#[command(name = "aflow", version, about = "Periodic-box VCHE experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment configuration.
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single run with per-sample diagnostics.
    Simulate(RunArgs),
    /// Decay exponents against a heat baseline.
    Decay(RunArgs),
    /// Rescaled vortex family and its half-lives.
    Counterexample(RunArgs),
    /// Convergence to the NSE as alpha shrinks.
    AlphaSweep(RunArgs),
    /// Galerkin truncation study.
    Truncation(RunArgs),
    /// Machine-precision identity checks.
    Selftest {
        /// Also run the orthogonality, Taylor-Green and energy balance checks.
        #[arg(long)]
        full: bool,
    },
}

impl Command {
    fn expected_kind(&self) -> Option<ExperimentKind> {
        match self {
            Command::Simulate(_) => Some(ExperimentKind::Simulate),
            Command::Decay(_) => Some(ExperimentKind::Decay),
            Command::Counterexample(_) => Some(ExperimentKind::Counterexample),
            Command::AlphaSweep(_) => Some(ExperimentKind::AlphaSweep),
            Command::Truncation(_) => Some(ExperimentKind::TruncationStudy),
            Command::Selftest { .. } => None,
        }
    }
}

pub fn selftest(full: bool) -> Result<Verdict> {
    let mut checks: Vec<Check> = verification::identity_suite(verification::IDENTITY_FIELDS, 2024)?;
    if full {
        checks.extend(verification::orthogonality_suite(verification::ORTHOGONALITY_FIELDS, 99)?);
        checks.extend(verification::taylor_green_regression()?);
        checks.extend(verification::energy_balance()?);
    }
    Ok(Verdict::new("selftest", checks, vec![]))
}

fn run_from_config(args: &RunArgs, kind: ExperimentKind) -> Result<Verdict> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(HarnessError::Config(format!(
            "config declares experiment `{}` but the subcommand runs `{}`",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(cfg.output_dir()));
    let verdict = run_experiment(&cfg, &out)?;
    println!("wrote {}", Path::new(&out).display());
    Ok(verdict)
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match (&cli.command, cli.command.expected_kind()) {
        (Command::Selftest { full }, _) => selftest(*full),
        (Command::Simulate(a), Some(k))
        | (Command::Decay(a), Some(k))
        | (Command::Counterexample(a), Some(k))
        | (Command::AlphaSweep(a), Some(k))
        | (Command::Truncation(a), Some(k)) => run_from_config(a, k),
        _ => unreachable!("every run subcommand has a kind"),
    };
    match result {
        Ok(v) => {
            for line in v.lines() {
                println!("{line}");
            }
            for note in &v.notes {
                println!("note: {note}");
            }
            println!("{}: {}", v.experiment, if v.pass { "PASS" } else { "FAIL" });
            if v.pass { 0 } else { 1 }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `argv`; usage errors exit with 2, help and version with 0.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

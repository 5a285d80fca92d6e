//! Command-line front end: `poles`, `survival`, `transition` and `verify`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::model::{Fault, Setup};

pub use commands::{
    cmd_poles, cmd_survival, cmd_sweep, cmd_transition, fmt_f64, Discrepancy, PolesReport, Sweep, Table,
};
pub use config::{parse_config, GridSpec, GridUnits, RunConfig, Spacing, Tolerances};
pub use verify::{cmd_verify, Check, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pfrad", version, about = "Resonances, survival and emission amplitudes of a radiating oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (default: output.path from the config, else stdout)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Compare every row against the quadrature oracle
    #[arg(long, global = true)]
    verify: bool,
    /// Line-shape sweep for `transition`
    #[arg(long, global = true, value_name = "nu:START:STOP:POINTS")]
    sweep: Option<Sweep>,
    /// Suppress the summary on stderr
    #[arg(long, global = true)]
    quiet: bool,
    #[arg(long, global = true, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Runaway rate, resonance poles and normalization constants (JSON)
    Poles,
    /// Survival amplitude of the oscillator level over the grid (CSV)
    Survival,
    /// Emission amplitude over the grid, or the line shape with --sweep (CSV)
    Transition,
    /// Full oracle suite (JSON report)
    Verify,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipQ,
    DropJ2,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::FlipQ => Fault::FlipQDamping,
            FaultArg::DropJ2 => Fault::DropJ2Subtraction,
        }
    }
}

struct Outcome {
    text: String,
    code: i32,
    summary: String,
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn table_outcome(table: Table, what: &str) -> Outcome {
    let failed = table.numerical_failures();
    let gaps = table.oracle_failures();
    let code = if failed > 0 {
        EXIT_NUMERIC
    } else if gaps > 0 {
        EXIT_VERIFY
    } else {
        EXIT_OK
    };
    Outcome {
        summary: format!("{what}: {} rows, {failed} failed, {gaps} over the oracle tolerance", table.rows.len()),
        text: table.to_csv(),
        code,
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Outcome, Error> {
    let fault = cli.inject_fault.map(Fault::from);
    match cli.command {
        Command::Poles => {
            let r = cmd_poles(cfg)?;
            Ok(Outcome {
                summary: format!("lambda_e = {:?}, gamma_e = {}", r.lambda_e, r.gamma_e),
                text: json(&r),
                code: EXIT_OK,
            })
        }
        Command::Survival => {
            let setup = Setup::new(cfg.physical)?.with_fault(fault);
            Ok(table_outcome(cmd_survival(cfg, &setup, cli.verify), "survival"))
        }
        Command::Transition => {
            let setup = Setup::new(cfg.physical)?.with_fault(fault);
            let table = match &cli.sweep {
                Some(s) => cmd_sweep(&setup, s),
                None => cmd_transition(cfg, &setup, cli.verify)?,
            };
            Ok(table_outcome(table, "transition"))
        }
        Command::Verify => {
            let r = cmd_verify(cfg, fault)?;
            let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            let summary = if failed.is_empty() {
                format!("verify: all {} checks passed", r.checks.len())
            } else {
                format!("verify: {} of {} checks failed: {}", failed.len(), r.checks.len(), failed.join(", "))
            };
            Ok(Outcome { text: json(&r), code: if r.passed { EXIT_OK } else { EXIT_VERIFY }, summary })
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pfrad: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match execute(&cli, &cfg) {
        Ok(o) => o,
        Err(e @ Error::Config(_)) => {
            eprintln!("pfrad: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("pfrad: numerical failure: {e}");
            return EXIT_NUMERIC;
        }
    };
    let path = cli.out.as_deref().or(cfg.output.as_deref());
    if let Err(e) = write_output(path, &outcome.text) {
        eprintln!("pfrad: cannot write output: {e}");
        return EXIT_NUMERIC;
    }
    if !cli.quiet {
        eprintln!("{}", outcome.summary);
    }
    outcome.code
}

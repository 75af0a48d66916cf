//! `epsflow <simulate|verify|study|sweep> <config.json> [--out DIR] [--quiet]`

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::{execute, Outcome, Reporter};
use crate::config::{Command, Experiment};

#[derive(Debug, Parser)]
#[command(name = "epsflow", version, about = "Run and audit singularly perturbed curve shortening flows")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let reporter = Reporter { quiet: args.quiet };
    let outcome = Experiment::load(&args.config, args.command, args.out.as_deref())
        .and_then(|exp| execute(&exp, &reporter));
    match outcome {
        Ok(o) => {
            match &o {
                Outcome::Success => {}
                Outcome::Stopped(status) => eprintln!("stopped before t_max: {status}"),
                Outcome::AuditFailed(names) => eprintln!("audit failed: {}", names.join(", ")),
            }
            ExitCode::from(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

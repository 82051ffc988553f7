#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod tasks;

use std::path::PathBuf;

use clap::{CommandFactory, Parser};

use config::{ExperimentConfig, TASKS};
use error::CliError;

/// Batch runner for degenerate Bessel operator experiments.
///
/// Reads a JSON experiment config, runs its task, and writes `report.json`
/// plus any CSV tables to the output directory. Exit status: 0 when every
/// check passes, 2 when a check fails, 1 on usage or config errors.
#[derive(Debug, Parser)]
#[command(name = "besselop", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Overrides the seed in the task block.
    #[arg(long)]
    seed: Option<u64>,

    /// Print every report line to stderr.
    #[arg(long)]
    verbose: bool,

    /// Print the task registry and exit.
    #[arg(long)]
    list: bool,
}

fn list_tasks() -> String {
    let mut s = String::from("tasks:\n");
    for t in TASKS {
        s.push_str("  ");
        s.push_str(t);
        s.push('\n');
    }
    s
}

fn run(args: &Args) -> Result<bool, CliError> {
    let Some(path) = &args.config else {
        return Err(CliError::Usage(format!("{}\n{}", Args::command().render_help(), list_tasks())));
    };
    let cfg = ExperimentConfig::load(path)?;
    let seed = cfg.seed(args.seed);
    let outcome = tasks::run(&cfg, seed)?;
    let report =
        output::RunReport::new(&cfg, seed, outcome.reports, outcome.results, outcome.warnings, &outcome.tables);
    if args.verbose {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        for r in &report.reports {
            eprintln!("{:<28} {}  worst_ratio={}", r.name, if r.pass { "pass" } else { "FAIL" }, r.worst_ratio);
        }
    }
    output::write_all(&args.out, &report, &outcome.tables)?;
    println!("{}: {}", report.task, if report.pass { "pass" } else { "fail" });
    Ok(report.pass)
}

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let _ = e.print();
            std::process::exit(1);
        }
    };
    if args.list {
        print!("{}", list_tasks());
        return;
    }
    match run(&args) {
        Ok(true) => {}
        Ok(false) => std::process::exit(2),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

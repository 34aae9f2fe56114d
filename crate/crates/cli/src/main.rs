use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use qpot_cli::{run, Command, Options};

/// Numerical laboratory for quaternionic pluripotential theory.
///
/// Prints a JSON report on stdout. Exit status is 0 when every verdict
/// passes, 1 when some verdict fails and 2 on usage or input errors.
#[derive(Parser, Debug)]
#[command(name = "qpot", version)]
struct Cli {
    command: Command,
    /// Experiment config (`[section]` headers, `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and grid/CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice points per axis (odd, 5..=257).
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))
        .and_then(|text| {
            let opts = Options {
                out: cli.out,
                seed: cli.seed,
                grid_n: cli.grid_n,
            };
            run(cli.command, &text, &opts)
        });
    match result {
        Ok(report) => {
            // A closed stdout (e.g. piped into `head`) is not a failed run.
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json());
            for v in report.verdicts.iter().filter(|v| !v.pass) {
                eprintln!("FAIL {}: lhs {} rhs {} tol {}", v.name, v.lhs, v.rhs, v.tol);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

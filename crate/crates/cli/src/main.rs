//! `diffgeo-lab <subcommand> --scenario file.json --out dir/ [--jobs N]`
//!
//! A scenario is a JSON object; unknown keys are rejected at every level:
//!
//! ```json
//! {
//!   "system": "pendulum" | "overdamped",
//!   "k": 0.5,
//!   "input": {"kind": "constant", "u0": 1.5},
//!   "integrator": {"method": {"kind": "adaptive-rk45", ...}, "max_time": 1e4, "sample_dt": null},
//!   "options": { ...subcommand specific... }
//! }
//! ```
//!
//! `--print-config` writes the scenario with every default filled in and exits.
//!
//! Exit codes: 0 success, 2 the analysis ran but did not certify the property, 1 runtime
//! failure, 64 usage error, 65 invalid scenario.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use diffgeo_core::Error;

use commands::{Command, Outcome};
use scenario::Scenario;

const EXIT_NEGATIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Debug, Parser)]
#[command(name = "diffgeo-lab", version, about = "Differential analysis of the pendulum family")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory, created if missing.
    #[arg(long, required_unless_present = "print_config")]
    out: Option<PathBuf>,

    /// Worker threads for grid scans.
    #[arg(long, env = "DIFFGEO_LAB_JOBS")]
    jobs: Option<usize>,

    /// Print the fully defaulted scenario and exit.
    #[arg(long)]
    print_config: bool,
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Domain(_) => EXIT_DATA,
        Error::NoCycle(_) | Error::NoSignChange { .. } | Error::LeftRegion { .. } | Error::Inconclusive(_) => {
            EXIT_NEGATIVE
        }
        _ => 1,
    }
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

    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let text = match std::fs::read_to_string(&cli.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.scenario.display());
            return ExitCode::from(1);
        }
    };
    let scenario = match Scenario::parse(&text).and_then(|s| commands::resolve(cli.command, &s)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    };

    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&scenario).expect("scenario serializes"));
        return ExitCode::SUCCESS;
    }

    let (artifacts, outcome) = match commands::run(cli.command, &scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_code(&e));
        }
    };
    let out = cli.out.expect("clap enforces --out");
    if let Err(e) = artifacts.write_to(&out) {
        eprintln!("error: cannot write to {}: {e}", out.display());
        return ExitCode::from(1);
    }
    for name in artifacts.names() {
        println!("{}", out.join(name).display());
    }
    match outcome {
        Outcome::Done => ExitCode::SUCCESS,
        Outcome::Negative(why) => {
            eprintln!("not certified: {why}");
            ExitCode::from(EXIT_NEGATIVE)
        }
    }
}

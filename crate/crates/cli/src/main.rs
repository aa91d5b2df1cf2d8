use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mrn_core::experiment::{load_config, run_experiment, ExperimentKind, RunOptions};
use mrn_core::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "mrn", version, about = "Experiments on multitype sparse random networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Exit with status 1 when the experiment's acceptance check fails.
        #[arg(long)]
        check: bool,
        /// Output directory [default: out/<config file stem>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// List the available experiment kinds.
    ListExperiments,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn report(err: &Error) -> ExitCode {
    match err {
        Error::Config(violations) => {
            for v in violations {
                eprintln!("error: {v}");
            }
        }
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(exit_code(err))
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    Path::new("out").join(stem)
}

fn run(config: &Path, check: bool, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let (cfg, hash) = match load_config(config) {
        Ok(x) => x,
        Err(e) => return report(&e),
    };
    let out = out.unwrap_or_else(|| default_out(config));
    match run_experiment(&cfg, &hash, &out, &RunOptions { seed, workers: None }) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}: {}", cfg.experiment, if outcome.pass { "pass" } else { "FAIL" });
            if check && !outcome.pass {
                ExitCode::from(EXIT_CHECK_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => report(&e),
    }
}

fn validate(config: &Path) -> ExitCode {
    let (cfg, _) = match load_config(config) {
        Ok(x) => x,
        Err(e) => return report(&e),
    };
    let rep = cfg.validate();
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    if rep.is_ok() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        report(&Error::Config(rep.violations))
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, check, out, seed } => run(&config, check, out, seed),
        Command::Validate { config } => validate(&config),
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{:<16}{}", kind.name(), kind.description());
            }
            ExitCode::SUCCESS
        }
    }
}

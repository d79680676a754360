use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavedecay_cli::experiment::{format_checks, OUT_ENV};
use wavedecay_cli::{report, run_experiment, verify_suite, CliError, RunOptions};

#[derive(Parser)]
#[command(
    name = "wavedecay",
    version,
    about = "Local energy decay lab for u_tt = c(x)^2 Lap u"
)]
struct Cli {
    /// Output root (falls back to $WAVEDECAY_OUT, then ./runs).
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Scenarios run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    /// Divides every grid spacing (2 = twice as fine).
    #[arg(long, global = true, default_value_t = 1.0)]
    resolution_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Simulate { config: PathBuf },
    /// Run a verification battery: identities, spectral, gronwall, convergence, decay.
    Verify { suite: String },
    /// Summarize a finished run directory and write plot data.
    Report { dir: PathBuf },
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let out = cli.out.unwrap_or_else(|| PathBuf::from("runs"));
    match cli.command {
        Command::Simulate { config } => {
            let opts = RunOptions {
                out_root: out,
                parallel: cli.parallel,
                resolution_scale: cli.resolution_scale,
            };
            let outcome = run_experiment(&config, &opts)?;
            for s in &outcome.summaries {
                println!("{} (eta = {:.6})", s.scenario.id, s.eta);
                print!("{}", format_checks(s));
            }
            println!("wrote {}", outcome.dir.display());
            Ok(outcome.all_passed())
        }
        Command::Verify { suite } => {
            let rep = verify_suite(&suite, &out)?;
            for item in &rep.items {
                let tag = if item.passed { "pass" } else { "fail" };
                println!(
                    "  [{tag}] {} {:.4e}  {}",
                    item.name, item.value, item.detail
                );
            }
            Ok(rep.passed)
        }
        Command::Report { dir } => {
            print!("{}", report(&dir)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

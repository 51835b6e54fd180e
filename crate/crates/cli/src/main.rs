use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftrack::{run, sweep, RunConfig, RunError, RunManifest, DEFAULT_OUT};

#[derive(Parser)]
#[command(name = "ftrack", version, about = "Front tracking for u_t + f(x,u)_x = 0")]
struct Cli {
    /// Artifact root; each run writes to <out>/<name>/.
    #[arg(long, global = true, env = "FTRACK_OUT", default_value = DEFAULT_OUT)]
    out: PathBuf,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config file.
    Run { config: PathBuf },
    /// Run every config matching a glob, concurrently.
    Sweep { pattern: String },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn summarize(m: &RunManifest) {
    println!(
        "{}: {} events, {} fronts at t = {}, {}",
        m.config.name,
        m.event_count,
        m.final_front_count,
        m.final_time,
        if m.passed { "all checks passed" } else { "CHECKS FAILED" }
    );
    for c in m.checks.checks.iter().filter(|c| !c.passed) {
        println!("  FAIL {}: measured {} > bound {}", c.name, c.measured, c.bound);
    }
}

fn status(result: &Result<RunManifest, RunError>) -> u8 {
    match result {
        Ok(m) if m.passed => 0,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(_) => EXIT_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let code = match cli.command {
        Command::Run { config } => {
            let result = RunConfig::load(&config).map_err(RunError::from).and_then(|c| run(&c, &cli.out).map(|r| r.0));
            match &result {
                Ok(m) => summarize(m),
                Err(e) => eprintln!("error: {}: {e}", config.display()),
            }
            status(&result)
        }
        Command::Sweep { pattern } => match sweep(&pattern, &cli.out) {
            Ok(entries) if entries.is_empty() => {
                eprintln!("error: no config matches {pattern}");
                EXIT_ERROR
            }
            Ok(entries) => {
                let mut worst = 0;
                for e in &entries {
                    match &e.result {
                        Ok(m) => summarize(m),
                        Err(err) => eprintln!("error: {}: {err}", e.path.display()),
                    }
                    worst = worst.max(status(&e.result));
                }
                worst
            }
            Err(e) => {
                eprintln!("error: bad pattern {pattern}: {e}");
                EXIT_ERROR
            }
        },
    };
    ExitCode::from(code)
}

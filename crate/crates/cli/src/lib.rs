//! Config-driven runner: reads an experiment description, solves it with the
//! front tracker, runs the requested checks and writes CSV/JSON artifacts.

pub mod checks;
pub mod config;
pub mod emit;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{CheckName, ConfigError, FluxConfig, InitialConfig, InitialData, RunConfig, Tolerances};
pub use emit::{emit_events, emit_profile, read_profile, sample_profile, write_events, write_profile, ProfileSample};
pub use run::{run, solve, RunError, RunManifest, Solved};

/// Output directory used when neither `--out` nor `FTRACK_OUT` is given.
pub const DEFAULT_OUT: &str = "ftrack-out";

/// Outcome of one config in a sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub path: PathBuf,
    pub result: Result<RunManifest, RunError>,
}

/// Runs every config matching `pattern`, one thread per config.
pub fn sweep(pattern: &str, out_root: &Path) -> Result<Vec<SweepEntry>, glob::PatternError> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)?.filter_map(Result::ok).collect();
    paths.sort();
    Ok(std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| {
                s.spawn(move || {
                    let result = RunConfig::load(p).map_err(RunError::from).and_then(|c| run(&c, out_root).map(|r| r.0));
                    SweepEntry { path: p.clone(), result }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    }))
}

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use ftrack_core::flux::{audit_assumptions, make_builtin_flux, AssumptionReport, AuditBox, Flux, FluxError};
use ftrack_core::tracker::{
    initial_fronts, quantize_with_boundary, EventLog, ForensicDump, FrontField, FrontKind, QuantizeDiagnostics,
    QuantizeError, SolutionHistory, Tracker, TrackerConfig, TrackerError,
};
use ftrack_core::validation::{ValidationError, ValidationReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{run_check, CheckInputs};
use crate::config::{ConfigError, InitialData, RunConfig};
use crate::emit::{emit_events, emit_profile, EmitError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EVENTS_FILE: &str = "events.csv";
pub const BREACH_FILE: &str = "breach.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error("flux audit failed with {} violation(s); first: {:?}", .0.violation_count, .0.violations.first())]
    Audit(Box<AssumptionReport>),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// A front as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub id: u64,
    pub position: f64,
    pub g_left: f64,
    pub g_right: f64,
    pub kind: FrontKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub code_version: String,
    pub flux: String,
    pub audit: AssumptionReport,
    pub quantization: QuantizeDiagnostics,
    pub initial_front_count: usize,
    pub event_count: usize,
    pub grazing_event_count: usize,
    pub final_front_count: usize,
    pub final_time: f64,
    pub final_fronts: Vec<FrontSummary>,
    pub artifacts: Vec<String>,
    pub checks: ValidationReport,
    pub passed: bool,
    /// The only field that differs between repeated runs.
    pub wall_time_s: f64,
}

/// Output of the solver stage, before any checks.
pub struct Solved {
    pub flux: Arc<dyn Flux>,
    pub u0: InitialData,
    pub audit: AssumptionReport,
    pub quantization: QuantizeDiagnostics,
    pub tracker: TrackerConfig,
    pub initial: FrontField,
    /// Fields at `output_times` (or `t_end` when none are given).
    pub snapshots: Vec<(f64, FrontField)>,
    pub final_field: FrontField,
    pub log: EventLog,
    pub history: SolutionHistory,
}

impl Solved {
    /// Bound on `|u|` for the quantized data, with room for one level.
    pub fn u_bound(&self, delta: f64) -> f64 {
        self.quantization.max_abs_u + (delta / self.flux.alpha()).sqrt()
    }
}

pub fn tracker_config(config: &RunConfig) -> TrackerConfig {
    let tol = &config.tolerances;
    TrackerConfig {
        h_user: tol.h_user,
        min_step_fraction: tol.min_step_fraction,
        tol_event: tol.tol_event,
        tol_pos: tol.tol_pos,
        domain: config.window,
    }
}

pub fn output_times(config: &RunConfig) -> Vec<f64> {
    if config.output_times.is_empty() {
        vec![config.t_end]
    } else {
        config.output_times.clone()
    }
}

/// Audit, quantize and track. Audit failure stops before any tracking.
pub fn solve(config: &RunConfig) -> Result<Solved, RunError> {
    config.validate()?;
    let u0 = config.u0.build()?;
    let (a, b) = config.window;
    let dx = (b - a) / config.cells as f64;
    let u_max = (0..config.cells).map(|i| u0.eval(a + (i as f64 + 0.5) * dx).abs()).fold(0.0f64, f64::max);
    let audit_box = AuditBox::new(config.window, (-u_max - 0.5, u_max + 0.5));
    let grid = config.tolerances.audit_grid;
    let flux = make_builtin_flux(&config.flux.spec(audit_box, grid))?;
    let audit = audit_assumptions(flux.as_ref(), &audit_box, grid);
    if !audit.passed {
        return Err(RunError::Audit(Box::new(audit)));
    }
    log::info!("{}: audit passed, alpha = {}", config.name, audit.certified_alpha);

    let sampler = |x: f64| u0.eval(x);
    let (levels, quantization) =
        quantize_with_boundary(flux.as_ref(), &sampler, config.delta, config.window, config.cells, config.boundary)?;
    let initial = initial_fronts(&levels, 0.0);
    log::info!("{}: {} initial fronts", config.name, initial.fronts().len());

    let tracker_cfg = tracker_config(config);
    let tracker = Tracker::new(flux.as_ref(), tracker_cfg);
    let mut field = initial.clone();
    let mut log = EventLog::default();
    let mut history = SolutionHistory::new();
    let mut snapshots = Vec::new();
    for t in output_times(config) {
        tracker.advance_in_place(&mut field, t, &mut log, Some(&mut history))?;
        snapshots.push((t, field.clone()));
    }
    tracker.advance_in_place(&mut field, config.t_end, &mut log, Some(&mut history))?;
    log::info!("{}: {} events, {} fronts at t = {}", config.name, log.len(), field.fronts().len(), field.time());
    Ok(Solved {
        flux,
        u0,
        audit,
        quantization,
        tracker: tracker_cfg,
        initial,
        snapshots,
        final_field: field,
        log,
        history,
    })
}

pub fn run_checks(config: &RunConfig, solved: &Solved) -> ValidationReport {
    let snapshots: Vec<FrontField> = solved.snapshots.iter().map(|(_, f)| f.clone()).collect();
    let inputs = CheckInputs {
        config,
        flux: solved.flux.as_ref(),
        u0: &solved.u0,
        initial: &solved.initial,
        final_field: &solved.final_field,
        snapshots: &snapshots,
        log: &solved.log,
        history: &solved.history,
        u_bound: solved.u_bound(config.delta),
        tracker: solved.tracker,
    };
    let mut checks = config.checks.clone();
    checks.sort();
    checks.dedup();
    let mut report = ValidationReport::default();
    for c in checks {
        for r in run_check(c, &inputs) {
            log::info!("{}: {} measured {} bound {} -> {}", config.name, r.name, r.measured, r.bound, r.passed);
            report.push(r);
        }
    }
    report
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Runs one experiment and writes its artifacts under `out_root/<name>/`.
pub fn run(config: &RunConfig, out_root: &Path) -> Result<(RunManifest, PathBuf), RunError> {
    let start = Instant::now();
    let dir = out_root.join(&config.name);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let solved = match solve(config) {
        Ok(s) => s,
        Err(RunError::Tracker(TrackerError::InvariantBreach(dump))) => {
            write_json::<ForensicDump>(&dump, &dir.join(BREACH_FILE))?;
            return Err(RunError::Tracker(TrackerError::InvariantBreach(dump)));
        }
        Err(e) => return Err(e),
    };

    let mut artifacts = Vec::new();
    for (i, (t, field)) in solved.snapshots.iter().enumerate() {
        let name = format!("profile_{i:03}.csv");
        emit_profile(solved.flux.as_ref(), field, config.window, config.resolution, &dir.join(&name))?;
        log::debug!("{}: wrote {name} at t = {t}", config.name);
        artifacts.push(name);
    }
    emit_events(&solved.log, &dir.join(EVENTS_FILE))?;
    artifacts.push(EVENTS_FILE.to_string());

    let checks = run_checks(config, &solved);
    let delta = config.delta;
    let manifest = RunManifest {
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        flux: solved.flux.name(),
        audit: solved.audit.clone(),
        quantization: solved.quantization.clone(),
        initial_front_count: solved.initial.fronts().len(),
        event_count: solved.log.len(),
        grazing_event_count: solved.log.events.iter().filter(|e| e.grazing).count(),
        final_front_count: solved.final_field.fronts().len(),
        final_time: solved.final_field.time(),
        final_fronts: solved
            .final_field
            .fronts()
            .iter()
            .map(|f| FrontSummary {
                id: f.id,
                position: f.position,
                g_left: f.g_left(delta),
                g_right: f.g_right(delta),
                kind: f.kind,
            })
            .collect(),
        artifacts,
        passed: checks.all_passed(),
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&manifest, &dir.join(MANIFEST_FILE))?;
    Ok((manifest, dir))
}

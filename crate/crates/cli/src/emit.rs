use std::io::{Read, Write};
use std::path::Path;

use ftrack_core::flux::Flux;
use ftrack_core::stationary::StationaryError;
use ftrack_core::tracker::{EventLog, FrontField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("profile sample at x = {x}: {source}")]
    Sample { x: f64, source: StationaryError },
    #[error("profile needs at least two samples and a window, got {0}")]
    BadResolution(usize),
    #[error("malformed value `{0}`")]
    Parse(String),
}

/// One row of a sampled profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub x: f64,
    pub u: f64,
    pub g: f64,
}

/// `resolution` uniform points on the closed window.
pub fn sample_profile(
    flux: &dyn Flux,
    field: &FrontField,
    window: (f64, f64),
    resolution: usize,
) -> Result<Vec<ProfileSample>, EmitError> {
    if resolution < 2 || !(window.0 < window.1) {
        return Err(EmitError::BadResolution(resolution));
    }
    let (a, b) = window;
    (0..resolution)
        .map(|i| {
            let x = if i + 1 == resolution { b } else { a + (b - a) * i as f64 / (resolution - 1) as f64 };
            let u = field.sample_u(flux, x).map_err(|source| EmitError::Sample { x, source })?;
            Ok(ProfileSample { x, u, g: field.sample_g(x) })
        })
        .collect()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes `x,u,g` rows; `f64` Display is the shortest round-trip form.
pub fn write_profile<W: Write>(samples: &[ProfileSample], w: W) -> Result<(), EmitError> {
    let mut out = writer(w);
    out.write_record(["x", "u", "g"])?;
    for s in samples {
        out.write_record([s.x.to_string(), s.u.to_string(), s.g.to_string()])?;
    }
    out.flush().map_err(|source| EmitError::Io { path: "<profile>".into(), source })?;
    Ok(())
}

pub fn read_profile<R: Read>(r: R) -> Result<Vec<ProfileSample>, EmitError> {
    let parse = |s: &str| s.parse::<f64>().map_err(|_| EmitError::Parse(s.to_string()));
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(r).records() {
        let rec = rec?;
        rows.push(ProfileSample { x: parse(&rec[0])?, u: parse(&rec[1])?, g: parse(&rec[2])? });
    }
    Ok(rows)
}

pub fn write_events<W: Write>(log: &EventLog, w: W) -> Result<(), EmitError> {
    let mut out = writer(w);
    out.write_record(["t", "x", "consumed_ids", "produced_id", "tv_before", "tv_after"])?;
    for e in &log.events {
        let consumed = e.consumed.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        let produced = e.produced.map(|id| id.to_string()).unwrap_or_default();
        out.write_record([
            e.t.to_string(),
            e.x.to_string(),
            consumed,
            produced,
            e.tv_before.to_string(),
            e.tv_after.to_string(),
        ])?;
    }
    out.flush().map_err(|source| EmitError::Io { path: "<events>".into(), source })?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, EmitError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| EmitError::Io { path: path.display().to_string(), source })
}

pub fn emit_profile(
    flux: &dyn Flux,
    field: &FrontField,
    window: (f64, f64),
    resolution: usize,
    path: &Path,
) -> Result<Vec<ProfileSample>, EmitError> {
    let samples = sample_profile(flux, field, window, resolution)?;
    write_profile(&samples, create(path)?)?;
    Ok(samples)
}

pub fn emit_events(log: &EventLog, path: &Path) -> Result<(), EmitError> {
    write_events(log, create(path)?)
}

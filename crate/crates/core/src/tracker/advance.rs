use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::{Front, FrontField, FrontKind};
use super::history::SolutionHistory;
use crate::flux::Flux;
use crate::riemann::{front_speed, RiemannError};

/// Time tolerance for locating a collision.
pub const TOL_EVENT: f64 = 1e-11;
/// Fronts closer than this at an event are one interaction point.
pub const TOL_POS: f64 = 1e-10;
pub const DEFAULT_STEP: f64 = 5e-3;
pub const DEFAULT_MIN_STEP_FRACTION: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Nominal RK4 step.
    pub h_user: f64,
    /// The gap-based step cap never goes below `h_user * min_step_fraction`.
    pub min_step_fraction: f64,
    pub tol_event: f64,
    pub tol_pos: f64,
    /// Working window; a front leaving it aborts the run.
    pub domain: (f64, f64),
}

impl TrackerConfig {
    pub fn new(domain: (f64, f64)) -> Self {
        TrackerConfig {
            h_user: DEFAULT_STEP,
            min_step_fraction: DEFAULT_MIN_STEP_FRACTION,
            tol_event: TOL_EVENT,
            tol_pos: TOL_POS,
            domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub consumed: Vec<u64>,
    pub produced: Option<u64>,
    pub tv_before: f64,
    pub tv_after: f64,
    /// Same totals in units of `delta`, exact.
    pub tv_before_z: i64,
    pub tv_after_z: i64,
    /// Merged on proximity rather than on a detected crossing.
    pub grazing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_tv_monotone(&self) -> bool {
        self.events.iter().all(|e| e.tv_after_z <= e.tv_before_z)
            && self.events.windows(2).all(|w| w[1].tv_after_z <= w[0].tv_after_z)
    }
}

/// State captured when a collision would produce an inadmissible front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForensicDump {
    pub time: f64,
    pub position: f64,
    pub delta: f64,
    pub consumed: Vec<Front>,
    pub z_left: i64,
    pub z_right: i64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("target time {target} is before field time {current}")]
    BadTarget { current: f64, target: f64 },
    #[error("front {id} left the working window at x = {position}, t = {time}")]
    WindowExit { id: u64, position: f64, time: f64 },
    #[error("speed of front {id} failed at x = {position}, t = {time}: {source}")]
    Speed { id: u64, position: f64, time: f64, source: RiemannError },
    #[error("non-finite position for front {id} at t = {time}")]
    StepFailure { id: u64, time: f64 },
    #[error("collision ids {ids:?} are not adjacent fronts of the field")]
    BadCollision { ids: Vec<u64> },
    #[error("invariant breach at t = {}, x = {}: jump {} -> {} exceeds one level; dump: {:?}",
        .0.time, .0.position, .0.z_left, .0.z_right, .0)]
    InvariantBreach(Box<ForensicDump>),
}

/// Replaces the adjacent fronts `ids` by the solution of the Riemann problem
/// between their outer levels: one front, or none if the levels agree.
pub fn resolve_collision(field: &mut FrontField, ids: &[u64], rho: f64, tau: f64) -> Result<Option<Front>, TrackerError> {
    let bad = || TrackerError::BadCollision { ids: ids.to_vec() };
    if ids.len() < 2 {
        return Err(bad());
    }
    let start = field.fronts.iter().position(|f| f.id == ids[0]).ok_or_else(bad)?;
    let end = start + ids.len();
    if end > field.fronts.len() || field.fronts[start..end].iter().zip(ids).any(|(f, id)| f.id != *id) {
        return Err(bad());
    }
    let z_left = field.fronts[start].z_left;
    let z_right = field.fronts[end - 1].z_right;
    if z_right - z_left > 1 {
        return Err(TrackerError::InvariantBreach(Box::new(ForensicDump {
            time: tau,
            position: rho,
            delta: field.delta,
            consumed: field.fronts[start..end].to_vec(),
            z_left,
            z_right,
        })));
    }
    let produced = if z_left == z_right {
        None
    } else {
        let kind = if z_right > z_left { FrontKind::FanFront } else { FrontKind::Shock };
        Some(Front { id: field.fresh_id(), position: rho, z_left, z_right, kind, birth_time: tau })
    };
    field.fronts.splice(start..end, produced.clone());
    Ok(produced)
}

pub struct Tracker<'a> {
    flux: &'a dyn Flux,
    config: TrackerConfig,
}

impl<'a> Tracker<'a> {
    pub fn new(flux: &'a dyn Flux, config: TrackerConfig) -> Self {
        Tracker { flux, config }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn speed(&self, front: &Front, delta: f64, y: f64, time: f64) -> Result<f64, TrackerError> {
        front_speed(self.flux, front.g_left(delta), front.g_right(delta), y).map_err(|source| TrackerError::Speed {
            id: front.id,
            position: y,
            time,
            source,
        })
    }

    fn rk4(&self, front: &Front, delta: f64, time: f64, h: f64, k1: f64) -> Result<f64, TrackerError> {
        let y = front.position;
        let k2 = self.speed(front, delta, y + 0.5 * h * k1, time)?;
        let k3 = self.speed(front, delta, y + 0.5 * h * k2, time)?;
        let k4 = self.speed(front, delta, y + h * k3, time)?;
        let out = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !out.is_finite() {
            return Err(TrackerError::StepFailure { id: front.id, time });
        }
        Ok(out)
    }

    /// Largest `s` in `[0, h]`, up to `tol_event`, at which fronts `i` and
    /// `i + 1` are still ordered.
    fn bisect(&self, field: &FrontField, i: usize, h: f64, v0: &[f64]) -> Result<f64, TrackerError> {
        let (a, b) = (&field.fronts[i], &field.fronts[i + 1]);
        let gap = |s: f64| -> Result<f64, TrackerError> {
            Ok(self.rk4(b, field.delta, field.time, s, v0[i + 1])? - self.rk4(a, field.delta, field.time, s, v0[i])?)
        };
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > self.config.tol_event {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    pub fn advance(&self, field: &FrontField, t_target: f64) -> Result<(FrontField, EventLog), TrackerError> {
        let mut out = field.clone();
        let mut log = EventLog::default();
        self.advance_in_place(&mut out, t_target, &mut log, None)?;
        Ok((out, log))
    }

    pub fn advance_in_place(
        &self,
        field: &mut FrontField,
        t_target: f64,
        log: &mut EventLog,
        mut history: Option<&mut SolutionHistory>,
    ) -> Result<(), TrackerError> {
        if !(t_target >= field.time) {
            return Err(TrackerError::BadTarget { current: field.time, target: t_target });
        }
        if let Some(h) = history.as_deref_mut() {
            h.start(field);
        }
        let cfg = self.config;
        loop {
            let n = field.fronts.len();
            let v0 = field
                .fronts
                .iter()
                .map(|f| self.speed(f, field.delta, f.position, field.time))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(h) = history.as_deref_mut() {
                h.record(field.time, &field.fronts, &v0);
            }

            let contacts: Vec<usize> = (0..n.saturating_sub(1))
                .filter(|&i| {
                    field.fronts[i + 1].position - field.fronts[i].position <= cfg.tol_pos && v0[i] > v0[i + 1]
                })
                .collect();
            if !contacts.is_empty() {
                self.interact(field, &contacts, true, log, history.as_deref_mut())?;
                continue;
            }
            if field.time >= t_target {
                return Ok(());
            }
            if n == 0 {
                field.time = t_target;
                continue;
            }

            let v_max = v0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gap_min = (0..n - 1)
                .filter(|&i| v0[i] > v0[i + 1])
                .map(|i| field.fronts[i + 1].position - field.fronts[i].position)
                .fold(f64::INFINITY, f64::min);
            let mut h = cfg.h_user;
            if gap_min.is_finite() && v_max > 0.0 {
                h = h.min((gap_min / (4.0 * v_max)).max(cfg.h_user * cfg.min_step_fraction));
            }
            let remaining = t_target - field.time;
            let full = h >= remaining;
            if full {
                h = remaining;
            }

            let y_new = field
                .fronts
                .iter()
                .zip(&v0)
                .map(|(f, &k1)| self.rk4(f, field.delta, field.time, h, k1))
                .collect::<Result<Vec<_>, _>>()?;
            let mut hit: Option<(f64, usize)> = None;
            for i in 0..n - 1 {
                let before = field.fronts[i + 1].position - field.fronts[i].position;
                if before > 0.0 && y_new[i + 1] - y_new[i] <= 0.0 {
                    let s = self.bisect(field, i, h, &v0)?;
                    if hit.map_or(true, |(best, _)| s < best) {
                        hit = Some((s, i));
                    }
                }
            }

            match hit {
                None => {
                    for (f, y) in field.fronts.iter_mut().zip(y_new) {
                        f.position = y;
                    }
                    field.time = if full { t_target } else { field.time + h };
                    self.check_window(field)?;
                }
                Some((s, trigger)) => {
                    let moved = field
                        .fronts
                        .iter()
                        .zip(&v0)
                        .map(|(f, &k1)| self.rk4(f, field.delta, field.time, s, k1))
                        .collect::<Result<Vec<_>, _>>()?;
                    for (f, y) in field.fronts.iter_mut().zip(moved) {
                        f.position = y;
                    }
                    field.time += s;
                    self.check_window(field)?;
                    let mut pairs: Vec<usize> = (0..n - 1)
                        .filter(|&i| {
                            i == trigger
                                || (field.fronts[i + 1].position - field.fronts[i].position <= cfg.tol_pos
                                    && v0[i] > v0[i + 1])
                        })
                        .collect();
                    pairs.dedup();
                    self.interact(field, &pairs, false, log, history.as_deref_mut())?;
                }
            }
        }
    }

    fn check_window(&self, field: &FrontField) -> Result<(), TrackerError> {
        let (lo, hi) = self.config.domain;
        match field.fronts.iter().find(|f| !(f.position >= lo && f.position <= hi)) {
            Some(f) => Err(TrackerError::WindowExit { id: f.id, position: f.position, time: field.time }),
            None => Ok(()),
        }
    }

    /// Resolves every cluster of touching pairs, left to right.
    fn interact(
        &self,
        field: &mut FrontField,
        pairs: &[usize],
        grazing: bool,
        log: &mut EventLog,
        mut history: Option<&mut SolutionHistory>,
    ) -> Result<(), TrackerError> {
        let mut clusters: Vec<Vec<u64>> = Vec::new();
        let mut last: Option<usize> = None;
        for &i in pairs {
            let (a, b) = (field.fronts[i].id, field.fronts[i + 1].id);
            match (last, clusters.last_mut()) {
                (Some(prev), Some(c)) if prev + 1 == i => c.push(b),
                _ => clusters.push(vec![a, b]),
            }
            last = Some(i);
        }
        let tau = field.time;
        for ids in clusters {
            let members: Vec<Front> = ids.iter().filter_map(|id| field.front(*id).cloned()).collect();
            let rho = members.iter().map(|f| f.position).sum::<f64>() / members.len() as f64;
            let tv_before_z = field.tv_z();
            let produced = resolve_collision(field, &ids, rho, tau)?;
            let tv_after_z = field.tv_z();
            if let Some(h) = history.as_deref_mut() {
                for f in &members {
                    let v = self.speed(f, field.delta, f.position, tau)?;
                    h.kill(f.id, tau, f.position, v);
                }
            }
            log.events.push(Event {
                t: tau,
                x: rho,
                consumed: ids,
                produced: produced.map(|f| f.id),
                tv_before: tv_before_z as f64 * field.delta,
                tv_after: tv_after_z as f64 * field.delta,
                tv_before_z,
                tv_after_z,
                grazing,
            });
        }
        Ok(())
    }
}

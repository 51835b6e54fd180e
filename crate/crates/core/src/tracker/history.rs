use std::collections::HashMap;

use super::field::{Front, FrontField};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Knot {
    t: f64,
    y: f64,
    v: f64,
}

/// Trajectory of one front over its lifetime `[birth, death)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub z_left: i64,
    pub z_right: i64,
    pub birth: f64,
    pub death: f64,
    knots: Vec<Knot>,
}

impl Track {
    /// Cubic Hermite interpolation through the recorded `(t, y, y')` knots.
    pub fn position(&self, t: f64) -> f64 {
        let ks = &self.knots;
        let first = ks[0];
        if t <= first.t {
            return first.y;
        }
        let last = ks[ks.len() - 1];
        if t >= last.t {
            return last.y;
        }
        let k = ks.partition_point(|kn| kn.t <= t);
        let (a, b) = (ks[k - 1], ks[k]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * a.y
            + (s3 - 2.0 * s2 + s) * h * a.v
            + (-2.0 * s3 + 3.0 * s2) * b.y
            + (s3 - s2) * h * b.v
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }

    pub fn knot_count(&self) -> usize {
        self.knots.len()
    }
}

/// Space-time record of a tracking run, filled in by `Tracker::advance_in_place`.
#[derive(Debug, Clone, Default)]
pub struct SolutionHistory {
    initial: Option<FrontField>,
    tracks: Vec<Track>,
    index: HashMap<u64, usize>,
    t_end: f64,
}

impl SolutionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_started(&self) -> bool {
        self.initial.is_some()
    }

    pub(crate) fn start(&mut self, field: &FrontField) {
        if self.initial.is_none() {
            self.initial = Some(field.clone());
            self.t_end = field.time();
        }
    }

    /// Field at the first recorded instant.
    pub fn initial(&self) -> Option<&FrontField> {
        self.initial.as_ref()
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn time_range(&self) -> Option<(f64, f64)> {
        self.initial.as_ref().map(|f| (f.time(), self.t_end))
    }

    fn push_knot(track: &mut Track, knot: Knot) {
        match track.knots.last_mut() {
            Some(last) if last.t == knot.t => *last = knot,
            _ => track.knots.push(knot),
        }
    }

    pub(crate) fn record(&mut self, t: f64, fronts: &[Front], speeds: &[f64]) {
        for (f, &v) in fronts.iter().zip(speeds) {
            let idx = *self.index.entry(f.id).or_insert_with(|| {
                self.tracks.push(Track {
                    id: f.id,
                    z_left: f.z_left,
                    z_right: f.z_right,
                    birth: t,
                    death: f64::INFINITY,
                    knots: Vec::new(),
                });
                self.tracks.len() - 1
            });
            Self::push_knot(&mut self.tracks[idx], Knot { t, y: f.position, v });
        }
        self.t_end = self.t_end.max(t);
    }

    pub(crate) fn kill(&mut self, id: u64, t: f64, y: f64, v: f64) {
        if let Some(&idx) = self.index.get(&id) {
            let track = &mut self.tracks[idx];
            Self::push_knot(track, Knot { t, y, v });
            track.death = t;
        }
    }

    /// Level index of `g` at time `t` for each (ascending) `x`, right-continuous.
    pub fn z_row(&self, t: f64, xs: &[f64], out: &mut [i64]) {
        let z0 = self.initial.as_ref().map_or(0, |f| f.z_leftmost());
        let mut jumps: Vec<(f64, i64)> = self
            .tracks
            .iter()
            .filter(|tr| tr.alive_at(t))
            .map(|tr| (tr.position(t), tr.z_right - tr.z_left))
            .collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut k = 0;
        let mut z = z0;
        for (x, o) in xs.iter().zip(out.iter_mut()) {
            while k < jumps.len() && jumps[k].0 <= *x {
                z += jumps[k].1;
                k += 1;
            }
            *o = z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_is_exact_for_cubics() {
        let y = |t: f64| 0.3 + t - 0.5 * t * t + 0.2 * t * t * t;
        let v = |t: f64| 1.0 - t + 0.6 * t * t;
        let knots = [0.0, 0.4, 1.0].iter().map(|&t| Knot { t, y: y(t), v: v(t) }).collect();
        let tr = Track { id: 0, z_left: 0, z_right: 1, birth: 0.0, death: 1.0, knots };
        for t in [0.05, 0.2, 0.39, 0.55, 0.9] {
            assert!((tr.position(t) - y(t)).abs() < 1e-14);
        }
        assert!(tr.alive_at(0.0) && !tr.alive_at(1.0));
    }
}

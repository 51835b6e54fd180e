use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::Flux;
use crate::stationary::{invert, StationaryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontKind {
    Shock,
    FanFront,
}

/// A discontinuity between the stationary profiles `U[z_left * delta]` and
/// `U[z_right * delta]`. Levels are stored as integers so that closure under
/// interactions is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub id: u64,
    pub position: f64,
    pub z_left: i64,
    pub z_right: i64,
    pub kind: FrontKind,
    pub birth_time: f64,
}

impl Front {
    pub fn jump(&self) -> i64 {
        self.z_right - self.z_left
    }

    pub fn g_left(&self, delta: f64) -> f64 {
        self.z_left as f64 * delta
    }

    pub fn g_right(&self, delta: f64) -> f64 {
        self.z_right as f64 * delta
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("delta must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("front {id} has equal levels on both sides")]
    NullFront { id: u64 },
    #[error("front {id} has kind {kind:?} but jump {jump}")]
    KindMismatch { id: u64, kind: FrontKind, jump: i64 },
    #[error("front {id} has an upward jump of {jump} levels (at most 1 allowed)")]
    Inadmissible { id: u64, jump: i64 },
    #[error("front {id} at {position} is left of its predecessor at {previous}")]
    Unordered { id: u64, position: f64, previous: f64 },
    #[error("front {id} starts at level {z_left} but the piece to its left has level {expected}")]
    BrokenChain { id: u64, z_left: i64, expected: i64 },
    #[error("front {id} has a non-finite position")]
    NonFinite { id: u64 },
    #[error("duplicate front id {id}")]
    DuplicateId { id: u64 },
}

/// Piecewise stationary state at one instant.
///
/// Positions are non-decreasing; equal positions only occur for the fronts of
/// a fan at the instant it is emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontField {
    pub(crate) time: f64,
    pub(crate) fronts: Vec<Front>,
    pub(crate) z_leftmost: i64,
    pub(crate) delta: f64,
    pub(crate) next_id: u64,
}

impl FrontField {
    pub fn empty(delta: f64, time: f64) -> Self {
        FrontField { time, fronts: Vec::new(), z_leftmost: 0, delta, next_id: 0 }
    }

    /// Builds a field from explicit fronts and checks every invariant.
    pub fn from_fronts(time: f64, delta: f64, z_leftmost: i64, fronts: Vec<Front>) -> Result<Self, FieldError> {
        let next_id = fronts.iter().map(|f| f.id + 1).max().unwrap_or(0);
        let field = FrontField { time, fronts, z_leftmost, delta, next_id };
        field.validate()?;
        Ok(field)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn fronts(&self) -> &[Front] {
        &self.fronts
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn z_leftmost(&self) -> i64 {
        self.z_leftmost
    }

    pub fn z_rightmost(&self) -> i64 {
        self.fronts.last().map_or(self.z_leftmost, |f| f.z_right)
    }

    pub fn front(&self, id: u64) -> Option<&Front> {
        self.fronts.iter().find(|f| f.id == id)
    }

    pub(crate) fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(FieldError::BadDelta(self.delta));
        }
        let mut expected = self.z_leftmost;
        let mut previous = f64::NEG_INFINITY;
        let mut ids: Vec<u64> = self.fronts.iter().map(|f| f.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(FieldError::DuplicateId { id: w[0] });
        }
        for f in &self.fronts {
            if !f.position.is_finite() {
                return Err(FieldError::NonFinite { id: f.id });
            }
            if f.position < previous {
                return Err(FieldError::Unordered { id: f.id, position: f.position, previous });
            }
            if f.z_left != expected {
                return Err(FieldError::BrokenChain { id: f.id, z_left: f.z_left, expected });
            }
            let jump = f.jump();
            if jump == 0 {
                return Err(FieldError::NullFront { id: f.id });
            }
            if jump > 1 {
                return Err(FieldError::Inadmissible { id: f.id, jump });
            }
            let kind_ok = matches!((f.kind, jump > 0), (FrontKind::FanFront, true) | (FrontKind::Shock, false));
            if !kind_ok {
                return Err(FieldError::KindMismatch { id: f.id, kind: f.kind, jump });
            }
            previous = f.position;
            expected = f.z_right;
        }
        Ok(())
    }

    /// Level index of the piece containing `x`; right-continuous at fronts.
    pub fn sample_z(&self, x: f64) -> i64 {
        let k = self.fronts.partition_point(|f| f.position <= x);
        if k == 0 {
            self.z_leftmost
        } else {
            self.fronts[k - 1].z_right
        }
    }

    pub fn sample_g(&self, x: f64) -> f64 {
        self.sample_z(x) as f64 * self.delta
    }

    pub fn sample_u(&self, flux: &dyn Flux, x: f64) -> Result<f64, StationaryError> {
        invert(flux, self.sample_g(x), x)
    }

    /// Total variation of `g` in units of `delta`.
    pub fn tv_z(&self) -> i64 {
        self.fronts.iter().map(|f| f.jump().abs()).sum()
    }

    pub fn tv_g(&self) -> f64 {
        self.tv_z() as f64 * self.delta
    }

    /// Largest `|g|` over all pieces.
    pub fn max_abs_g(&self) -> f64 {
        let z = self.fronts.iter().map(|f| f.z_right.abs()).fold(self.z_leftmost.abs(), i64::max);
        z as f64 * self.delta
    }

    /// Breakpoints and piece levels: `z[i]` holds on `[breaks[i-1], breaks[i])`.
    pub fn pieces(&self) -> (Vec<f64>, Vec<i64>) {
        let mut breaks = Vec::with_capacity(self.fronts.len());
        let mut z = Vec::with_capacity(self.fronts.len() + 1);
        z.push(self.z_leftmost);
        for f in &self.fronts {
            breaks.push(f.position);
            z.push(f.z_right);
        }
        (breaks, z)
    }
}

/// Exact `int_a^b |g_a - g_b| dx` between two fields with the same `delta`.
pub fn g_l1_distance(a: &FrontField, b: &FrontField, interval: (f64, f64)) -> f64 {
    let (lo, hi) = interval;
    if !(hi > lo) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = a
        .fronts
        .iter()
        .chain(b.fronts.iter())
        .map(|f| f.position)
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let dz = (a.sample_z(mid) as f64 * a.delta - b.sample_z(mid) as f64 * b.delta).abs();
        total += dz * (w[1] - w[0]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::Burgers;

    fn front(id: u64, position: f64, z_left: i64, z_right: i64) -> Front {
        let kind = if z_right > z_left { FrontKind::FanFront } else { FrontKind::Shock };
        Front { id, position, z_left, z_right, kind, birth_time: 0.0 }
    }

    fn two_level() -> FrontField {
        // Burgers, delta = 0.1: g = 0.5 on [-2, 0).
        let mut fronts: Vec<Front> = (0..5).map(|i| front(i, -2.0, i as i64, i as i64 + 1)).collect();
        fronts.push(front(5, 0.0, 5, 0));
        FrontField::from_fronts(0.0, 0.1, 0, fronts).unwrap()
    }

    #[test]
    fn empty_field_samples_zero() {
        let f = FrontField::empty(0.1, 0.0);
        assert_eq!(f.sample_u(&Burgers, 3.0).unwrap(), 0.0);
        assert_eq!(f.tv_g(), 0.0);
    }

    #[test]
    fn sampling_is_right_continuous() {
        let f = two_level();
        assert!((f.sample_u(&Burgers, -1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f.sample_z(-2.0), 5);
        assert_eq!(f.sample_z(-2.0 - 1e-12), 0);
        assert_eq!(f.sample_z(0.0), 0);
        assert_eq!(f.sample_z(-1e-12), 5);
        assert!((f.tv_g() - 1.0).abs() < 1e-15);
        assert_eq!(f.tv_z(), 10);
    }

    #[test]
    fn invariants_are_enforced() {
        let up2 = vec![Front { kind: FrontKind::FanFront, ..front(0, 0.0, 0, 2) }];
        assert!(matches!(FrontField::from_fronts(0.0, 0.1, 0, up2), Err(FieldError::Inadmissible { .. })));
        let chain = vec![front(0, 0.0, 0, 1), front(1, 1.0, 2, 0)];
        assert!(matches!(FrontField::from_fronts(0.0, 0.1, 0, chain), Err(FieldError::BrokenChain { .. })));
        let order = vec![front(0, 1.0, 0, 1), front(1, 0.0, 1, 0)];
        assert!(matches!(FrontField::from_fronts(0.0, 0.1, 0, order), Err(FieldError::Unordered { .. })));
        let null = vec![Front { kind: FrontKind::Shock, ..front(0, 0.0, 3, 3) }];
        assert!(matches!(FrontField::from_fronts(0.0, 0.1, 3, null), Err(FieldError::NullFront { .. })));
        let kind = vec![Front { kind: FrontKind::Shock, ..front(0, 0.0, 0, 1) }];
        assert!(matches!(FrontField::from_fronts(0.0, 0.1, 0, kind), Err(FieldError::KindMismatch { .. })));
    }

    #[test]
    fn l1_distance_between_fields() {
        let a = two_level();
        assert_eq!(g_l1_distance(&a, &a, (-5.0, 5.0)), 0.0);
        let mut b = a.clone();
        b.fronts[5].position = 0.25;
        assert!((g_l1_distance(&a, &b, (-5.0, 5.0)) - 0.125).abs() < 1e-15);
        assert!((g_l1_distance(&a, &b, (0.1, 5.0)) - 0.075).abs() < 1e-15);
    }
}

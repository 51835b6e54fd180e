//! Generalised Riemann problems between two stationary profiles.
//!
//! A jump from level `g_l` to `g_r` is an entropic shock when `g_l > g_r` and
//! a rarefaction otherwise; the rarefaction is approximated by a fan of fronts
//! whose levels are spaced by `delta`. Every front, shock or fan, moves with
//! the Rankine-Hugoniot speed of the two profiles it separates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::Flux;
use crate::stationary::{g_of, invert, profile_slope, StationaryError, TOL_INV};

/// Relative floor for `|U[g_l] - U[g_r]|` in the speed quotient.
pub const EPS_DEN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Shock,
    Fan,
    Null,
}

pub fn classify(g_l: f64, g_r: f64) -> WaveKind {
    if g_l > g_r {
        WaveKind::Shock
    } else if g_l < g_r {
        WaveKind::Fan
    } else {
        WaveKind::Null
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiemannError {
    #[error("levels {g_l} and {g_r} give nearly equal states at y = {y} (|du| = {gap}); merge them first")]
    Degenerate { y: f64, g_l: f64, g_r: f64, gap: f64 },
    #[error(transparent)]
    Stationary(#[from] StationaryError),
}

/// Rankine-Hugoniot quotient for known traces `u_l = U[g_l](y)`, `u_r = U[g_r](y)`.
pub fn speed_from_traces(g_l: f64, g_r: f64, u_l: f64, u_r: f64, y: f64) -> Result<f64, RiemannError> {
    let du = u_l - u_r;
    let scale = u_l.abs().max(u_r.abs()).max(1.0);
    if !(du.abs() >= EPS_DEN * scale) {
        return Err(RiemannError::Degenerate { y, g_l, g_r, gap: du.abs() });
    }
    Ok((g_l.abs() - g_r.abs()) / du)
}

/// Speed of a front separating `U[g_l]` (left) from `U[g_r]` (right) at `y`.
pub fn front_speed(flux: &dyn Flux, g_l: f64, g_r: f64, y: f64) -> Result<f64, RiemannError> {
    let u_l = invert(flux, g_l, y)?;
    let u_r = invert(flux, g_r, y)?;
    speed_from_traces(g_l, g_r, u_l, u_r, y)
}

/// Wave pattern solving one generalised Riemann problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannFan {
    /// `g_l` first, `g_r` last; one front between each consecutive pair.
    pub levels: Vec<f64>,
    pub kind: WaveKind,
}

impl RiemannFan {
    pub fn front_count(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// Levels `g_l, g_l + delta, ..., g_r` with only the last gap allowed to be
/// shorter than `delta`.
pub fn build_fan(g_l: f64, g_r: f64, delta: f64) -> RiemannFan {
    assert!(g_l < g_r && delta > 0.0, "build_fan needs g_l < g_r and delta > 0");
    let fronts = ((g_r - g_l) / delta - 1e-9).ceil().max(1.0) as usize;
    let mut levels: Vec<f64> = (0..fronts).map(|i| g_l + i as f64 * delta).collect();
    levels.push(g_r);
    RiemannFan { levels, kind: WaveKind::Fan }
}

pub fn solve_riemann(g_l: f64, g_r: f64, delta: f64) -> RiemannFan {
    match classify(g_l, g_r) {
        WaveKind::Shock => RiemannFan { levels: vec![g_l, g_r], kind: WaveKind::Shock },
        WaveKind::Fan => build_fan(g_l, g_r, delta),
        WaveKind::Null => RiemannFan { levels: vec![g_l], kind: WaveKind::Null },
    }
}

/// Piecewise-linear interpolation of `f(x, .)` between the stationary profiles
/// on the levels `delta * Z`.
#[derive(Debug, Clone, Copy)]
pub struct ApproxFlux<'a> {
    base: &'a dyn Flux,
    delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    /// `g(x, u) = delta * z`.
    Grid(i64),
    /// `g(x, u)` strictly inside `(delta * z, delta * (z + 1))`.
    Interior(i64),
}

fn branch_sign(z: i64) -> f64 {
    if z >= 0 {
        1.0
    } else {
        -1.0
    }
}

impl<'a> ApproxFlux<'a> {
    pub fn new(base: &'a dyn Flux, delta: f64) -> Self {
        assert!(delta > 0.0, "approximate flux needs delta > 0");
        ApproxFlux { base, delta }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &'a dyn Flux {
        self.base
    }

    fn level(&self, z: i64) -> f64 {
        z as f64 * self.delta
    }

    fn locate(&self, x: f64, u: f64) -> Cell {
        let g = g_of(self.base, x, u);
        let q = g / self.delta;
        let nearest = q.round();
        // Traces of stationary profiles carry inversion round-off; snap them.
        if (g - nearest * self.delta).abs() <= 2.0 * TOL_INV * g.abs().max(1.0) {
            Cell::Grid(nearest as i64)
        } else {
            Cell::Interior(q.floor() as i64)
        }
    }

    /// `f^delta(x, u)`, anchored at the lower level of the cell.
    pub fn eval(&self, x: f64, u: f64) -> Result<f64, StationaryError> {
        match self.locate(x, u) {
            Cell::Grid(z) => Ok(self.level(z).abs()),
            Cell::Interior(z) => {
                let lo = invert(self.base, self.level(z), x)?;
                let hi = invert(self.base, self.level(z + 1), x)?;
                Ok(self.level(z).abs() + self.delta * branch_sign(z) * (u - lo) / (hi - lo))
            }
        }
    }

    /// Same interpolation anchored at the upper level; agrees with `eval`.
    pub fn eval_upper_anchor(&self, x: f64, u: f64) -> Result<f64, StationaryError> {
        match self.locate(x, u) {
            Cell::Grid(z) => Ok(self.level(z).abs()),
            Cell::Interior(z) => {
                let lo = invert(self.base, self.level(z), x)?;
                let hi = invert(self.base, self.level(z + 1), x)?;
                Ok(self.level(z + 1).abs() + self.delta * branch_sign(z) * (u - hi) / (hi - lo))
            }
        }
    }

    /// `d/dx f^delta(x, u)`.
    ///
    /// Inside a cell this is the exact derivative of the interpolation formula.
    /// On a grid level the map has a kink in `x`; the value returned is the
    /// derivative from the side that `g(., u)` enters as `x` increases.
    pub fn dx(&self, x: f64, u: f64) -> Result<f64, StationaryError> {
        let flux = self.base;
        match self.locate(x, u) {
            Cell::Grid(0) => Ok(0.0),
            Cell::Grid(z) => {
                let g = self.level(z);
                let slope = profile_slope(flux, g, x, u);
                let g_x = u.signum() * flux.f_x(x, u);
                let side = if g_x > 0.0 { 1 } else { -1 };
                let neighbour = invert(flux, self.level(z + side), x)?;
                Ok(-branch_sign(z) * slope * self.delta / (neighbour - u).abs())
            }
            Cell::Interior(z) => {
                let (g_lo, g_hi) = (self.level(z), self.level(z + 1));
                let lo = invert(flux, g_lo, x)?;
                let hi = invert(flux, g_hi, x)?;
                let d_lo = profile_slope(flux, g_lo, x, lo);
                let d_hi = profile_slope(flux, g_hi, x, hi);
                let width = hi - lo;
                let num = -d_lo * width - (u - lo) * (d_hi - d_lo);
                Ok(self.delta * branch_sign(z) * num / (width * width))
            }
        }
    }
}

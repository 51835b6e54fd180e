//! The sign-flux map `g(x, u) = sgn(u) f(x, u)` and its inverse.
//!
//! For a fixed level `g`, the stationary profile `U[g]` is the unique function
//! with `g(x, U[g](x)) = g` for every `x`. The whole front-tracking state is
//! piecewise constant in `g`, so these profiles are the scheme's coordinate
//! system.

use std::cell::RefCell;

use thiserror::Error;

use crate::flux::Flux;

/// Inversion residual tolerance, relative to `max(1, |level|)`.
pub const TOL_INV: f64 = 1e-12;

const MAX_NEWTON: usize = 100;
const BRACKET_SLACK: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationaryError {
    #[error("level {level} is outside the flux range at x = {x} (no bracket)")]
    BracketFailure { x: f64, level: f64 },
    #[error("inversion of level {level} at x = {x} stalled with residual {residual}")]
    NoConvergence { x: f64, level: f64, residual: f64 },
}

/// `sgn(u) f(x, u)`; strictly increasing in `u` for an audited flux.
pub fn g_of(flux: &dyn Flux, x: f64, u: f64) -> f64 {
    if u > 0.0 {
        flux.f(x, u)
    } else if u < 0.0 {
        -flux.f(x, u)
    } else {
        0.0
    }
}

/// Solves `g(x, u) = level` for `u`.
///
/// The root is bracketed by `[0, sqrt(2|level|/alpha) * 1.01]` on the branch
/// `sgn(u) = sgn(level)` and refined with bisection-safeguarded Newton.
pub fn invert(flux: &dyn Flux, level: f64, x: f64) -> Result<f64, StationaryError> {
    if level == 0.0 {
        return Ok(0.0);
    }
    let target = level.abs();
    let sign = level.signum();
    let alpha = flux.alpha();
    let hi0 = (2.0 * target / alpha).sqrt() * BRACKET_SLACK;
    // Work with v = |u| so the residual is increasing on [lo, hi].
    let residual = |v: f64| flux.f(x, sign * v) - target;
    let slope = |v: f64| sign * flux.f_u(x, sign * v);

    let (mut lo, mut hi) = (0.0, hi0);
    if !(hi.is_finite() && residual(hi) > 0.0) {
        return Err(StationaryError::BracketFailure { x, level });
    }
    let curvature = flux.f_uu(x, 0.0);
    let mut v = if curvature.is_finite() && curvature > 0.0 {
        (2.0 * target / curvature).sqrt().clamp(0.0, hi)
    } else {
        hi
    };
    if v <= lo {
        v = 0.5 * (lo + hi);
    }

    let stop = 4.0 * f64::EPSILON * target;
    let mut r = residual(v);
    for _ in 0..MAX_NEWTON {
        if r.abs() <= stop {
            break;
        }
        if r > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let d = slope(v);
        let mut next = v - r / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let moved = (next - v).abs();
        v = next;
        r = residual(v);
        if moved <= 2.0 * f64::EPSILON * v.abs() {
            break;
        }
    }
    if !(r.abs() <= TOL_INV * target.max(1.0)) {
        return Err(StationaryError::NoConvergence { x, level, residual: r });
    }
    Ok(sign * v)
}

/// `dU/dx = -f_x / f_u` along a stationary profile (zero on the zero level).
pub fn profile_slope(flux: &dyn Flux, level: f64, x: f64, u: f64) -> f64 {
    if level == 0.0 {
        return 0.0;
    }
    -flux.f_x(x, u) / flux.f_u(x, u)
}

const CACHE_SLOTS: usize = 4;

/// `x -> U[level](x)` for one level, with a small exact-key memo.
///
/// The memo only returns values previously computed for the identical `x`, so
/// results are the same with or without it. Profiles are not `Sync`; build one
/// per thread.
#[derive(Debug)]
pub struct StationaryProfile<'a> {
    flux: &'a dyn Flux,
    level: f64,
    cache: RefCell<([(u64, f64); CACHE_SLOTS], usize)>,
}

impl<'a> StationaryProfile<'a> {
    pub fn new(flux: &'a dyn Flux, level: f64) -> Self {
        StationaryProfile { flux, level, cache: RefCell::new(([(u64::MAX, 0.0); CACHE_SLOTS], 0)) }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn eval_u(&self, x: f64) -> Result<f64, StationaryError> {
        let key = x.to_bits();
        {
            let cache = self.cache.borrow();
            if let Some(&(_, u)) = cache.0.iter().find(|(k, _)| *k == key) {
                return Ok(u);
            }
        }
        let u = invert(self.flux, self.level, x)?;
        let mut cache = self.cache.borrow_mut();
        let slot = cache.1;
        cache.0[slot] = (key, u);
        cache.1 = (slot + 1) % CACHE_SLOTS;
        Ok(u)
    }

    pub fn eval_dx(&self, x: f64) -> Result<f64, StationaryError> {
        if self.level == 0.0 {
            return Ok(0.0);
        }
        let u = self.eval_u(x)?;
        Ok(profile_slope(self.flux, self.level, x, u))
    }

    /// Smallest `|U|` over the given nodes; diagnostic for how far the profile
    /// stays from zero.
    pub fn min_abs_over(&self, xs: &[f64]) -> Result<f64, StationaryError> {
        let mut m = f64::INFINITY;
        for &x in xs {
            m = m.min(self.eval_u(x)?.abs());
        }
        Ok(m)
    }
}

/// Upper bound on `sup_x |U[g1](x) - U[g2](x)|` from uniform convexity.
pub fn inversion_gap_bound(g1: f64, g2: f64, alpha: f64) -> f64 {
    if g1 * g2 >= 0.0 {
        (2.0 * (g1 - g2).abs() / alpha).sqrt()
    } else {
        (2.0 / alpha).sqrt() * (g1.abs().sqrt() + g2.abs().sqrt())
    }
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::{Front, FrontField, FrontKind};
use crate::flux::Flux;
use crate::stationary::g_of;

/// Piecewise constant level data: `z[i] * delta` on `[breaks[i-1], breaks[i])`,
/// with `z[0]` to the left of every break and `z[n]` to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLevels {
    pub delta: f64,
    pub breaks: Vec<f64>,
    pub z: Vec<i64>,
}

impl PiecewiseLevels {
    /// Merges equal neighbours and checks the shape of the data.
    pub fn new(delta: f64, breaks: Vec<f64>, z: Vec<i64>) -> Result<Self, QuantizeError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(QuantizeError::BadInput(format!("delta must be positive, got {delta}")));
        }
        if z.len() != breaks.len() + 1 {
            return Err(QuantizeError::BadInput("need exactly one more level than breaks".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(QuantizeError::BadInput("breaks must be finite and strictly increasing".into()));
        }
        let mut out_b = Vec::with_capacity(breaks.len());
        let mut out_z = vec![z[0]];
        for (b, &level) in breaks.into_iter().zip(&z[1..]) {
            if level != *out_z.last().unwrap() {
                out_b.push(b);
                out_z.push(level);
            }
        }
        Ok(PiecewiseLevels { delta, breaks: out_b, z: out_z })
    }

    pub fn level_at(&self, x: f64) -> i64 {
        self.z[self.breaks.partition_point(|&b| b <= x)]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("initial data is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("{0}")]
    BadInput(String),
}

/// How the quantized data continues outside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Level 0 outside the window (compact support).
    #[default]
    Compact,
    /// The edge cells' levels continue to infinity.
    Extend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizeDiagnostics {
    pub cells: usize,
    /// Midpoint estimate of `||G_delta - G0||_L1` over the window.
    pub l1_midpoint: f64,
    /// `delta / 2 * |window|`.
    pub rounding_term: f64,
    /// Sum over cells of the sampled oscillation of `G0` times the cell width.
    pub modulus_term: f64,
    pub bound: f64,
    pub max_abs_u: f64,
    pub max_abs_g: f64,
}

/// Rounds to the nearest integer, ties toward zero.
pub fn round_ties_to_zero(q: f64) -> i64 {
    let t = q.trunc();
    if (q - t).abs() == 0.5 {
        t as i64
    } else {
        q.round() as i64
    }
}

pub fn quantize_initial(
    flux: &dyn Flux,
    u0: &dyn Fn(f64) -> f64,
    delta: f64,
    window: (f64, f64),
    cells: usize,
) -> Result<(PiecewiseLevels, QuantizeDiagnostics), QuantizeError> {
    quantize_with_boundary(flux, u0, delta, window, cells, Boundary::Compact)
}

pub fn quantize_with_boundary(
    flux: &dyn Flux,
    u0: &dyn Fn(f64) -> f64,
    delta: f64,
    window: (f64, f64),
    cells: usize,
    boundary: Boundary,
) -> Result<(PiecewiseLevels, QuantizeDiagnostics), QuantizeError> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a < b) || cells == 0 {
        return Err(QuantizeError::BadInput(format!("bad window [{a}, {b}] or cell count {cells}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(QuantizeError::BadInput(format!("delta must be positive, got {delta}")));
    }
    let dx = (b - a) / cells as f64;
    let edge = |i: usize| if i == cells { b } else { a + i as f64 * dx };
    let g0 = |x: f64| -> Result<(f64, f64), QuantizeError> {
        let u = u0(x);
        let g = g_of(flux, x, u);
        if !u.is_finite() || !g.is_finite() {
            return Err(QuantizeError::NonFinite { x });
        }
        Ok((u, g))
    };

    let mut z = Vec::with_capacity(cells);
    let mut l1 = 0.0;
    let mut modulus = 0.0;
    let mut max_u = 0.0f64;
    let mut max_g = 0.0f64;
    let mut g_edge = g0(edge(0))?.1;
    for i in 0..cells {
        let mid = 0.5 * (edge(i) + edge(i + 1));
        let (u, g) = g0(mid)?;
        let g_next = g0(edge(i + 1))?.1;
        let zi = round_ties_to_zero(g / delta);
        l1 += (zi as f64 * delta - g).abs() * dx;
        modulus += (g_edge - g).abs().max((g_next - g).abs()) * dx;
        max_u = max_u.max(u.abs());
        max_g = max_g.max(g.abs());
        z.push(zi);
        g_edge = g_next;
    }

    let (left, right) = match boundary {
        Boundary::Compact => (0, 0),
        Boundary::Extend => (z[0], z[cells - 1]),
    };
    let mut breaks = Vec::with_capacity(cells + 1);
    let mut levels = Vec::with_capacity(cells + 2);
    levels.push(left);
    for (i, &zi) in z.iter().enumerate() {
        breaks.push(edge(i));
        levels.push(zi);
    }
    breaks.push(b);
    levels.push(right);
    let pieces = PiecewiseLevels::new(delta, breaks, levels)?;

    let rounding = 0.5 * delta * (b - a);
    let diag = QuantizeDiagnostics {
        cells,
        l1_midpoint: l1,
        rounding_term: rounding,
        modulus_term: modulus,
        bound: rounding + modulus,
        max_abs_u: max_u,
        max_abs_g: max_g,
    };
    Ok((pieces, diag))
}

/// Solves the Riemann problem at every break: a downward jump becomes one
/// shock, an upward jump becomes a fan of unit-level fronts, all emitted from
/// the break itself.
pub fn initial_fronts(levels: &PiecewiseLevels, time: f64) -> FrontField {
    let mut field = FrontField::empty(levels.delta, time);
    field.z_leftmost = levels.z[0];
    for (i, &x) in levels.breaks.iter().enumerate() {
        let (zl, zr) = (levels.z[i], levels.z[i + 1]);
        if zl > zr {
            let id = field.fresh_id();
            field.fronts.push(Front { id, position: x, z_left: zl, z_right: zr, kind: FrontKind::Shock, birth_time: time });
        } else {
            for z in zl..zr {
                let id = field.fresh_id();
                field.fronts.push(Front {
                    id,
                    position: x,
                    z_left: z,
                    z_right: z + 1,
                    kind: FrontKind::FanFront,
                    birth_time: time,
                });
            }
        }
    }
    field
}

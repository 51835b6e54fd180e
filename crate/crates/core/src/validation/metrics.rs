use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::flux::{speed_envelope, Flux};
use crate::riemann::ApproxFlux;
use crate::stationary::{invert, inversion_gap_bound};
use crate::tracker::{initial_fronts, quantize_initial, FrontField, Tracker, TrackerConfig};

/// Midpoint-rule `int |a - b|` over `window` with `resolution` points.
pub fn l1_distance(a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64, window: (f64, f64), resolution: usize) -> f64 {
    let h = (window.1 - window.0) / resolution as f64;
    (0..resolution)
        .map(|i| {
            let x = window.0 + (i as f64 + 0.5) * h;
            (a(x) - b(x)).abs()
        })
        .sum::<f64>()
        * h
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `int |u_a - u_b|` over `interval`, split at every front so that each piece
/// compares two smooth stationary profiles.
pub fn u_l1_between_fields(
    flux: &dyn Flux,
    a: &FrontField,
    b: &FrontField,
    interval: (f64, f64),
) -> Result<f64, ValidationError> {
    let (lo, hi) = interval;
    let mut cuts: Vec<f64> = a
        .fronts()
        .iter()
        .chain(b.fronts())
        .map(|f| f.position)
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.extend([lo, hi]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (ga, gb) = (a.sample_g(mid), b.sample_g(mid));
        if ga == gb {
            continue;
        }
        let half = 0.5 * (w[1] - w[0]);
        for (node, weight) in GAUSS5 {
            let x = mid + half * node;
            total += weight * half * (invert(flux, ga, x)? - invert(flux, gb, x)?).abs();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxConvergenceRow {
    pub delta: f64,
    pub sup_f_error: f64,
    pub sup_fx_error: f64,
    pub bound_f: f64,
    pub bound_fx: f64,
}

impl FluxConvergenceRow {
    pub fn holds(&self) -> bool {
        self.sup_f_error <= self.bound_f && self.sup_fx_error <= self.bound_fx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxConvergence {
    pub rows: Vec<FluxConvergenceRow>,
    /// `sup |f^delta - f|` strictly decreases as `delta` decreases.
    pub monotone_decay: bool,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// Sup errors of `f^delta` and `f^delta_x` on `x_range x [-m, m]` against
/// the two a-priori bounds of the approximate-flux convergence lemma.
pub fn flux_convergence_check(
    flux: &dyn Flux,
    deltas: &[f64],
    x_range: (f64, f64),
    m: f64,
    grid: usize,
) -> Result<FluxConvergence, ValidationError> {
    let alpha = flux.alpha();
    if !(alpha > 0.0) || grid < 2 || !(m > 0.0) {
        return Err(ValidationError::BadInput("flux convergence needs alpha > 0, m > 0 and a grid".into()));
    }
    let xs = linspace(x_range.0, x_range.1, grid);
    let us = linspace(-m, m, grid);
    let env = speed_envelope(flux, &linspace(-m - 1.0, m + 1.0, 2 * grid + 1), &xs)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let af = ApproxFlux::new(flux, delta);
        let (mut ef, mut efx) = (0.0f64, 0.0f64);
        for &x in &xs {
            for &u in &us {
                ef = ef.max((af.eval(x, u)? - flux.f(x, u)).abs());
                efx = efx.max((af.dx(x, u)? - flux.f_x(x, u)).abs());
            }
        }
        let root = (2.0 * delta / alpha).sqrt();
        let bound_f = root * (1.0 + env.lipschitz_l(m + delta)) + delta;

        let reach = m + root;
        let (mut sup_fxu, mut sup_fuu, mut sup_dxu) = (0.0f64, 0.0f64, 0.0f64);
        for &x in &xs {
            for u in linspace(-reach, reach, 2 * grid) {
                sup_fxu = sup_fxu.max(flux.f_xu(x, u).abs());
                sup_fuu = sup_fuu.max(flux.f_uu(x, u).abs());
                if u != 0.0 {
                    sup_dxu = sup_dxu.max((flux.f_x(x, u) / flux.f_u(x, u)).abs());
                }
            }
        }
        let bound_fx = root * (sup_fxu + 3.0 * sup_fuu * sup_dxu);
        rows.push(FluxConvergenceRow { delta, sup_f_error: ef, sup_fx_error: efx, bound_f, bound_fx });
    }
    let mut by_delta: Vec<&FluxConvergenceRow> = rows.iter().collect();
    by_delta.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let monotone_decay = by_delta.windows(2).all(|w| w[1].sup_f_error < w[0].sup_f_error);
    Ok(FluxConvergence { rows, monotone_decay })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionCheck {
    pub delta: f64,
    pub pairs: usize,
    /// Smallest `bound - measured` over all checked level pairs.
    pub min_slack: f64,
}

/// Checks the uniform inversion bound on consecutive grid levels up to
/// `g_max` and on a few opposite-sign pairs.
pub fn inversion_bound_check(flux: &dyn Flux, delta: f64, xs: &[f64], g_max: f64) -> Result<InversionCheck, ValidationError> {
    let alpha = flux.alpha();
    let top = (g_max / delta).ceil() as i64;
    let mut pairs: Vec<(i64, i64)> = (-top..top).map(|z| (z, z + 1)).collect();
    pairs.extend([(-1, 1), (-top, top), (-1, top), (-top, 1)]);
    let mut min_slack = f64::INFINITY;
    for &(z1, z2) in &pairs {
        let (g1, g2) = (z1 as f64 * delta, z2 as f64 * delta);
        let mut sup = 0.0f64;
        for &x in xs {
            sup = sup.max((invert(flux, g1, x)? - invert(flux, g2, x)?).abs());
        }
        min_slack = min_slack.min(inversion_gap_bound(g1, g2, alpha) - sup);
    }
    Ok(InversionCheck { delta, pairs: pairs.len(), min_slack })
}

/// Quantization and tracking parameters shared by paired runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingSetup {
    pub delta: f64,
    pub window: (f64, f64),
    pub cells: usize,
    pub t_end: f64,
    pub tracker: TrackerConfig,
}

impl TrackingSetup {
    pub fn solve(&self, flux: &dyn Flux, u0: &dyn Fn(f64) -> f64) -> Result<FrontField, ValidationError> {
        let (levels, _) = quantize_initial(flux, u0, self.delta, self.window, self.cells)?;
        let field = initial_fronts(&levels, 0.0);
        let (out, _) = Tracker::new(flux, self.tracker).advance(&field, self.t_end)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceResult {
    pub l1_difference: f64,
    pub lipschitz_l: f64,
    pub cone: (f64, f64),
    pub radius: f64,
    /// The quantized data agree on every cell meeting the cone.
    pub disjoint_from_cone: bool,
}

/// Solves from `u0` and `v0` and measures `int_{-r}^{r} |u - v|` at `t_end`.
/// The difference is expected to vanish when the quantized data agree on
/// every cell meeting the cone `[-r - L t_end, r + L t_end]`.
pub fn domain_of_dependence_check(
    flux: &dyn Flux,
    u0: &dyn Fn(f64) -> f64,
    v0: &dyn Fn(f64) -> f64,
    setup: &TrackingSetup,
    r: f64,
) -> Result<DependenceResult, ValidationError> {
    let (qu, du) = quantize_initial(flux, u0, setup.delta, setup.window, setup.cells)?;
    let (qv, dv) = quantize_initial(flux, v0, setup.delta, setup.window, setup.cells)?;
    let alpha = flux.alpha();
    let m = du.max_abs_u.max(dv.max_abs_u) + (setup.delta / alpha).sqrt();
    let xs = linspace(setup.tracker.domain.0, setup.tracker.domain.1, 4001);
    let env = speed_envelope(flux, &linspace(-m - 1.0, m + 1.0, 401), &xs)?;
    let l = env.lipschitz_l(m);
    let cone = (-r - l * setup.t_end, r + l * setup.t_end);

    let dx = (setup.window.1 - setup.window.0) / setup.cells as f64;
    let disjoint_from_cone = (0..setup.cells).all(|i| {
        let (a, b) = (setup.window.0 + i as f64 * dx, setup.window.0 + (i + 1) as f64 * dx);
        let mid = 0.5 * (a + b);
        b < cone.0 || a > cone.1 || qu.level_at(mid) == qv.level_at(mid)
    });
    let tracker = Tracker::new(flux, setup.tracker);
    let (fu, _) = tracker.advance(&initial_fronts(&qu, 0.0), setup.t_end)?;
    let (fv, _) = tracker.advance(&initial_fronts(&qv, 0.0), setup.t_end)?;
    let l1 = u_l1_between_fields(flux, &fu, &fv, (-r, r))?;
    Ok(DependenceResult { l1_difference: l1, lipschitz_l: l, cone, radius: r, disjoint_from_cone })
}

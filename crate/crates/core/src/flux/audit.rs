use serde::{Deserialize, Serialize};

use super::Flux;

/// Rectangle `[x0, x1] x [u0, u1]` on which a flux is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditBox {
    pub x: (f64, f64),
    pub u: (f64, f64),
}

impl AuditBox {
    pub fn new(x: (f64, f64), u: (f64, f64)) -> Self {
        AuditBox { x, u }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        ok(self.x) && ok(self.u)
    }

    /// `n` equispaced samples (endpoints included) along each axis.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let xs = linspace(self.x.0, self.x.1, n);
        let us = linspace(self.u.0, self.u.1, n);
        xs.into_iter().flat_map(move |x| us.clone().into_iter().map(move |u| (x, u)))
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    /// `f(x,0) = f_u(x,0) = 0`.
    S0,
    /// Derivative consistency with finite differences.
    C2,
    /// `f_uu >= alpha > 0`.
    UC,
    /// Finite speed envelope.
    FSP,
    /// Audit inputs were unusable.
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub x: f64,
    pub u: f64,
    pub observed: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub passed: bool,
    /// At most `MAX_WITNESSES` per assumption; `violation_count` has the total.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub certified_alpha: f64,
    /// Sampled maximum of `f_uu`, used where an upper bound is needed.
    pub max_fuu: f64,
    pub x_samples: usize,
    pub u_samples: usize,
}

const MAX_WITNESSES: usize = 16;
const FD_STEP: f64 = 1e-4;
const FD_REL_TOL: f64 = 1e-6;
pub const MIN_AUDIT_GRID: usize = 16;

struct Collector {
    violations: Vec<Violation>,
    count: usize,
}

impl Collector {
    fn push(&mut self, assumption: Assumption, x: f64, u: f64, observed: f64, detail: impl Into<String>) {
        self.count += 1;
        let kept = self.violations.iter().filter(|v| v.assumption == assumption).count();
        if kept < MAX_WITNESSES {
            self.violations.push(Violation { assumption, x, u, observed, detail: detail.into() });
        }
    }
}

/// Samples `flux` on `bx` with `grid` points per axis and reports every
/// structural assumption that fails. Failures are data, never errors.
pub fn audit_assumptions(flux: &dyn Flux, bx: &AuditBox, grid: usize) -> AssumptionReport {
    let mut out = Collector { violations: Vec::new(), count: 0 };
    if !bx.is_valid() || grid < MIN_AUDIT_GRID {
        out.push(
            Assumption::Input,
            f64::NAN,
            f64::NAN,
            grid as f64,
            format!("audit needs a non-degenerate box and at least {MIN_AUDIT_GRID} points per axis"),
        );
        return AssumptionReport {
            passed: false,
            violations: out.violations,
            violation_count: out.count,
            certified_alpha: f64::NAN,
            max_fuu: f64::NAN,
            x_samples: 0,
            u_samples: 0,
        };
    }

    let xs = linspace(bx.x.0, bx.x.1, grid);
    let mut us = linspace(bx.u.0, bx.u.1, grid);
    if bx.u.0 < 0.0 && bx.u.1 > 0.0 && !us.contains(&0.0) {
        us.push(0.0);
        us.sort_by(f64::total_cmp);
    }

    let tol = flux.audit_tolerance();
    for &x in &xs {
        let f0 = flux.f(x, 0.0);
        let fu0 = flux.f_u(x, 0.0);
        if !(f0.abs() <= tol) {
            out.push(Assumption::S0, x, 0.0, f0, "f(x,0) != 0");
        }
        if !(fu0.abs() <= tol) {
            out.push(Assumption::S0, x, 0.0, fu0, "f_u(x,0) != 0");
        }
    }

    let alpha = flux.alpha();
    if !(alpha > 0.0) {
        out.push(Assumption::UC, f64::NAN, f64::NAN, alpha, "declared alpha is not positive");
    }
    let mut min_fuu = f64::INFINITY;
    let mut max_fuu = f64::NEG_INFINITY;
    for &x in &xs {
        for &u in &us {
            let fuu = flux.f_uu(x, u);
            if fuu.is_nan() {
                out.push(Assumption::UC, x, u, fuu, "f_uu undefined");
                continue;
            }
            min_fuu = min_fuu.min(fuu);
            max_fuu = max_fuu.max(fuu);
            if fuu <= 0.0 {
                out.push(Assumption::UC, x, u, fuu, "f_uu <= 0");
            } else if alpha > 0.0 && fuu < alpha * (1.0 - 1e-12) {
                out.push(Assumption::UC, x, u, fuu, "f_uu below declared alpha");
            }

            let h = FD_STEP;
            let checks = [
                ("f_u", flux.f_u(x, u), (flux.f(x, u + h) - flux.f(x, u - h)) / (2.0 * h)),
                ("f_x", flux.f_x(x, u), (flux.f(x + h, u) - flux.f(x - h, u)) / (2.0 * h)),
                ("f_uu", fuu, (flux.f_u(x, u + h) - flux.f_u(x, u - h)) / (2.0 * h)),
                ("f_xu", flux.f_xu(x, u), (flux.f_u(x + h, u) - flux.f_u(x - h, u)) / (2.0 * h)),
            ];
            for (name, exact, fd) in checks {
                let err = (exact - fd).abs();
                if !(err <= FD_REL_TOL * (1.0 + exact.abs())) {
                    out.push(Assumption::C2, x, u, err, format!("{name} disagrees with finite difference"));
                }
            }
        }
    }

    for &v in &us {
        let theta = xs.iter().map(|&x| flux.f_u(x, v).abs()).fold(0.0, f64::max);
        if !theta.is_finite() || xs.iter().any(|&x| flux.f_u(x, v).is_nan()) {
            out.push(Assumption::FSP, f64::NAN, v, theta, "speed envelope not finite");
        }
    }

    AssumptionReport {
        passed: out.count == 0,
        violations: out.violations,
        violation_count: out.count,
        certified_alpha: min_fuu,
        max_fuu,
        x_samples: xs.len(),
        u_samples: us.len(),
    }
}

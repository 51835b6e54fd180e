//! Heterogeneous fluxes `f(x, u)` and the checks that certify them.
//!
//! The solver relies on four structural properties of the flux:
//!
//! * `S0`: `f(x, 0) = f_u(x, 0) = 0` for every `x`,
//! * `C2`: `f` is twice continuously differentiable,
//! * `UC`: `f_uu >= alpha > 0`,
//! * `FSP`: the speed envelope `theta(v) = sup_x |f_u(x, v)|` is finite and
//!   continuous.
//!
//! Together `S0` and `UC` give `f(x, u) >= alpha * u^2 / 2`, which is what
//! makes the stationary profiles globally defined.

mod audit;
mod envelope;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, FluxExpr, Var};

pub use audit::{audit_assumptions, Assumption, AssumptionReport, AuditBox, Violation};
pub use envelope::{speed_envelope, EnvelopeError, SpeedEnvelope};

/// S0 tolerance for closed-form fluxes.
pub const TOL_AUDIT_EXACT: f64 = 1e-10;
/// S0 tolerance for fluxes evaluated through the expression tree.
pub const TOL_AUDIT_DSL: f64 = 1e-7;
/// Safety factor applied to the sampled minimum of `f_uu` for DSL fluxes.
pub const DSL_ALPHA_SAFETY: f64 = 0.99;

/// A flux `f(x, u)` with the partial derivatives the scheme needs.
///
/// Implementations are immutable and may be shared between threads.
pub trait Flux: Send + Sync + fmt::Debug {
    fn f(&self, x: f64, u: f64) -> f64;
    fn f_u(&self, x: f64, u: f64) -> f64;
    fn f_x(&self, x: f64, u: f64) -> f64;
    fn f_uu(&self, x: f64, u: f64) -> f64;
    fn f_xu(&self, x: f64, u: f64) -> f64;

    /// Lower bound on `f_uu` used for brackets and error bounds.
    fn alpha(&self) -> f64;

    /// Absolute tolerance for the `S0` audit.
    fn audit_tolerance(&self) -> f64 {
        TOL_AUDIT_EXACT
    }

    fn name(&self) -> String;
}

/// `f(x, u) = u^2 / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Burgers;

impl Flux for Burgers {
    fn f(&self, _x: f64, u: f64) -> f64 {
        0.5 * u * u
    }
    fn f_u(&self, _x: f64, u: f64) -> f64 {
        u
    }
    fn f_x(&self, _x: f64, _u: f64) -> f64 {
        0.0
    }
    fn f_uu(&self, _x: f64, _u: f64) -> f64 {
        1.0
    }
    fn f_xu(&self, _x: f64, _u: f64) -> f64 {
        0.0
    }
    fn alpha(&self) -> f64 {
        1.0
    }
    fn name(&self) -> String {
        "homogeneous_burgers".into()
    }
}

/// Sinusoidal coefficient `a(x) = mean + amplitude * sin(wavenumber * x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub mean: f64,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

impl Modulation {
    pub fn constant(value: f64) -> Self {
        Modulation { mean: value, amplitude: 0.0, wavenumber: 1.0, phase: 0.0 }
    }

    pub fn a(&self, x: f64) -> f64 {
        self.mean + self.amplitude * (self.wavenumber * x + self.phase).sin()
    }

    pub fn a_prime(&self, x: f64) -> f64 {
        self.amplitude * self.wavenumber * (self.wavenumber * x + self.phase).cos()
    }

    pub fn a_min(&self) -> f64 {
        self.mean - self.amplitude.abs()
    }

    pub fn a_max(&self) -> f64 {
        self.mean + self.amplitude.abs()
    }
}

/// `f(x, u) = a(x) u^2 / 2` with a strictly positive sinusoidal `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedBurgers {
    modulation: Modulation,
}

impl ModulatedBurgers {
    pub fn new(modulation: Modulation) -> Result<Self, FluxError> {
        let m = modulation;
        if ![m.mean, m.amplitude, m.wavenumber, m.phase].iter().all(|v| v.is_finite()) {
            return Err(FluxError::InvalidParams("modulation parameters must be finite".into()));
        }
        if m.a_min() <= 0.0 {
            return Err(FluxError::InvalidParams(format!(
                "modulated Burgers needs a_min = mean - |amplitude| > 0, got {}",
                m.a_min()
            )));
        }
        Ok(ModulatedBurgers { modulation })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }
}

impl Flux for ModulatedBurgers {
    fn f(&self, x: f64, u: f64) -> f64 {
        0.5 * self.modulation.a(x) * u * u
    }
    fn f_u(&self, x: f64, u: f64) -> f64 {
        self.modulation.a(x) * u
    }
    fn f_x(&self, x: f64, u: f64) -> f64 {
        0.5 * self.modulation.a_prime(x) * u * u
    }
    fn f_uu(&self, x: f64, _u: f64) -> f64 {
        self.modulation.a(x)
    }
    fn f_xu(&self, x: f64, u: f64) -> f64 {
        self.modulation.a_prime(x) * u
    }
    fn alpha(&self) -> f64 {
        self.modulation.a_min()
    }
    fn name(&self) -> String {
        let m = self.modulation;
        format!(
            "modulated_burgers(a = {} + {}*sin({}*x + {}))",
            m.mean, m.amplitude, m.wavenumber, m.phase
        )
    }
}

/// Flux given by a user expression, with symbolic derivatives.
#[derive(Debug, Clone)]
pub struct ExprFlux {
    source: String,
    f: FluxExpr,
    f_u: FluxExpr,
    f_x: FluxExpr,
    f_uu: FluxExpr,
    f_xu: FluxExpr,
    alpha: f64,
}

impl ExprFlux {
    /// Parses `src` and sets `alpha` to `DSL_ALPHA_SAFETY` times the smallest
    /// `f_uu` sampled on `alpha_box` (`grid` points per axis). A non-positive
    /// result is kept; the audit reports it.
    pub fn new(src: &str, alpha_box: AuditBox, grid: usize) -> Result<Self, FluxError> {
        let f = dsl::parse(src)?;
        let f_u = f.differentiate(Var::U);
        let f_x = f.differentiate(Var::X);
        let f_uu = f_u.differentiate(Var::U);
        let f_xu = f_u.differentiate(Var::X);
        let mut flux = ExprFlux { source: src.to_string(), f, f_u, f_x, f_uu, f_xu, alpha: 0.0 };
        let min_fuu = alpha_box
            .grid(grid.max(2))
            .map(|(x, u)| flux.f_uu.eval(x, u))
            .fold(f64::INFINITY, |m, v| if v.is_nan() { f64::NEG_INFINITY } else { m.min(v) });
        flux.alpha = DSL_ALPHA_SAFETY * min_fuu;
        Ok(flux)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &FluxExpr {
        &self.f
    }
}

impl Flux for ExprFlux {
    fn f(&self, x: f64, u: f64) -> f64 {
        self.f.eval(x, u)
    }
    fn f_u(&self, x: f64, u: f64) -> f64 {
        self.f_u.eval(x, u)
    }
    fn f_x(&self, x: f64, u: f64) -> f64 {
        self.f_x.eval(x, u)
    }
    fn f_uu(&self, x: f64, u: f64) -> f64 {
        self.f_uu.eval(x, u)
    }
    fn f_xu(&self, x: f64, u: f64) -> f64 {
        self.f_xu.eval(x, u)
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn audit_tolerance(&self) -> f64 {
        TOL_AUDIT_DSL
    }
    fn name(&self) -> String {
        format!("custom_expr({})", self.source)
    }
}

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("invalid flux parameters: {0}")]
    InvalidParams(String),
    #[error("flux expression: {0}")]
    Parse(#[from] dsl::ParseError),
}

/// Selects one of the built-in flux families.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxSpec {
    HomogeneousBurgers,
    ModulatedBurgers(Modulation),
    CustomExpr { expr: String, alpha_box: AuditBox, grid: usize },
}

pub fn make_builtin_flux(spec: &FluxSpec) -> Result<Arc<dyn Flux>, FluxError> {
    Ok(match spec {
        FluxSpec::HomogeneousBurgers => Arc::new(Burgers),
        FluxSpec::ModulatedBurgers(m) => Arc::new(ModulatedBurgers::new(*m)?),
        FluxSpec::CustomExpr { expr, alpha_box, grid } => {
            if !alpha_box.is_valid() {
                return Err(FluxError::InvalidParams("degenerate alpha box".into()));
            }
            Arc::new(ExprFlux::new(expr, *alpha_box, *grid)?)
        }
    })
}

use std::path::Path;

use ftrack_core::dsl::{self, FluxExpr, Var};
use ftrack_core::flux::{AuditBox, FluxSpec, Modulation};
use ftrack_core::tracker::{Boundary, DEFAULT_MIN_STEP_FRACTION, DEFAULT_STEP, TOL_EVENT, TOL_POS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Flux family selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxConfig {
    Burgers,
    ModulatedBurgers {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `f(x, u)` in the expression language. `alpha` is sampled over the audit box.
    Expr { expr: String },
}

fn one() -> f64 {
    1.0
}

impl FluxConfig {
    pub fn spec(&self, audit_box: AuditBox, grid: usize) -> FluxSpec {
        match self {
            FluxConfig::Burgers => FluxSpec::HomogeneousBurgers,
            FluxConfig::ModulatedBurgers { mean, amplitude, wavenumber, phase } => FluxSpec::ModulatedBurgers(
                Modulation { mean: *mean, amplitude: *amplitude, wavenumber: *wavenumber, phase: *phase },
            ),
            FluxConfig::Expr { expr } => FluxSpec::CustomExpr { expr: expr.clone(), alpha_box: audit_box, grid },
        }
    }
}

/// Initial data selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    /// `left` for `x < at`, `right` otherwise.
    Step {
        left: f64,
        right: f64,
        #[serde(default)]
        at: f64,
    },
    /// `amplitude * exp(1 - 1 / (1 - s^2))` with `s = (x - center) / radius`.
    Bump {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `values[i]` on `[breaks[i-1], breaks[i])`; one more value than breaks.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// Expression in `x` only.
    Expr { expr: String },
}

/// Initial data ready for sampling.
#[derive(Debug, Clone)]
pub enum InitialData {
    Zero,
    Step { left: f64, right: f64, at: f64 },
    Bump { amplitude: f64, center: f64, radius: f64 },
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Expr(FluxExpr),
}

impl InitialData {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialData::Zero => 0.0,
            InitialData::Step { left, right, at } => {
                if x < *at {
                    *left
                } else {
                    *right
                }
            }
            InitialData::Bump { amplitude, center, radius } => {
                let s = (x - center) / radius;
                if s.abs() < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            InitialData::Piecewise { breaks, values } => values[breaks.partition_point(|&b| b <= x)],
            InitialData::Expr(e) => e.eval(x, 0.0),
        }
    }
}

impl InitialConfig {
    pub fn build(&self) -> Result<InitialData, ConfigError> {
        Ok(match self {
            InitialConfig::Zero => InitialData::Zero,
            InitialConfig::Step { left, right, at } => InitialData::Step { left: *left, right: *right, at: *at },
            InitialConfig::Bump { amplitude, center, radius } => {
                if !(*radius > 0.0) {
                    return Err(invalid("u0.radius", "must be positive"));
                }
                InitialData::Bump { amplitude: *amplitude, center: *center, radius: *radius }
            }
            InitialConfig::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(invalid("u0.values", "needs exactly one more entry than u0.breaks"));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(invalid("u0.breaks", "must be strictly increasing"));
                }
                InitialData::Piecewise { breaks: breaks.clone(), values: values.clone() }
            }
            InitialConfig::Expr { expr } => {
                let e = dsl::parse(expr).map_err(|e| invalid("u0.expr", e.to_string()))?;
                if e.uses(Var::U) {
                    return Err(invalid("u0.expr", "initial data may depend on x only"));
                }
                InitialData::Expr(e)
            }
        })
    }
}

/// Validation checks that a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Tvd,
    Admissibility,
    EventCount,
    Entropy,
    Lipschitz,
    FvCompare,
    FluxConvergence,
    InversionBound,
    Characteristic,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Tvd,
        CheckName::Admissibility,
        CheckName::EventCount,
        CheckName::Entropy,
        CheckName::Lipschitz,
        CheckName::FvCompare,
        CheckName::FluxConvergence,
        CheckName::InversionBound,
        CheckName::Characteristic,
    ];
}

/// Overrides for solver and check tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub h_user: f64,
    pub min_step_fraction: f64,
    pub tol_event: f64,
    pub tol_pos: f64,
    pub audit_grid: usize,
    pub entropy_pairs: usize,
    pub quad_nx: usize,
    pub quad_nt: usize,
    pub lipschitz_samples: usize,
    pub lipschitz_slack: f64,
    /// 0 means the run's own cell count.
    pub fv_cells: usize,
    pub fv_cfl: f64,
    /// Cross-validation bound as a fraction of `||u0||_1`.
    pub fv_fraction: f64,
    pub flux_deltas: Vec<f64>,
    pub characteristic_steps: usize,
    pub characteristic_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            h_user: DEFAULT_STEP,
            min_step_fraction: DEFAULT_MIN_STEP_FRACTION,
            tol_event: TOL_EVENT,
            tol_pos: TOL_POS,
            audit_grid: 64,
            entropy_pairs: 20,
            quad_nx: 512,
            quad_nt: 512,
            lipschitz_samples: 20,
            lipschitz_slack: 1e-8,
            fv_cells: 0,
            fv_cfl: 0.45,
            fv_fraction: 0.02,
            flux_deltas: vec![0.1, 0.05, 0.02, 0.01],
            characteristic_steps: 10_000,
            characteristic_drift: 1e-10,
        }
    }
}

fn default_resolution() -> usize {
    1000
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub delta: f64,
    pub window: (f64, f64),
    pub cells: usize,
    pub t_end: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub seed: u64,
    /// Sample points per emitted profile.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub boundary: Boundary,
    pub flux: FluxConfig,
    pub u0: InitialConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(invalid("name", "must be a plain, non-empty file name"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive and finite"));
        }
        let (a, b) = self.window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(invalid("window", "must be a finite interval with window[0] < window[1]"));
        }
        if self.cells == 0 {
            return Err(invalid("cells", "must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", "must be non-negative and finite"));
        }
        if self.output_times.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(invalid("output_times", "must be sorted"));
        }
        if self.output_times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(invalid("output_times", "must lie in [0, t_end]"));
        }
        if self.resolution < 2 {
            return Err(invalid("resolution", "needs at least two samples"));
        }
        let tol = &self.tolerances;
        if !(tol.h_user > 0.0) || !(tol.min_step_fraction > 0.0 && tol.min_step_fraction <= 1.0) {
            return Err(invalid("tolerances.h_user", "step and step fraction must be positive"));
        }
        if !(tol.tol_event > 0.0 && tol.tol_pos > 0.0) {
            return Err(invalid("tolerances.tol_event", "event tolerances must be positive"));
        }
        if tol.quad_nx < 2 || tol.quad_nt < 2 {
            return Err(invalid("tolerances.quad_nx", "quadrature needs at least two points per axis"));
        }
        if tol.flux_deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(invalid("tolerances.flux_deltas", "must be positive"));
        }
        if let FluxConfig::Expr { expr } = &self.flux {
            dsl::parse(expr).map_err(|e| invalid("flux.expr", e.to_string()))?;
        }
        self.u0.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: &str = r#"
name = "step"
delta = 0.1
window = [-1.0, 3.0]
cells = 400
t_end = 2.0
boundary = "extend"

[flux]
kind = "burgers"

[u0]
kind = "step"
left = 1.0
right = 0.0
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_toml(STEP).unwrap();
        assert_eq!(c.window, (-1.0, 3.0));
        assert_eq!(c.boundary, Boundary::Extend);
        assert_eq!(c.flux, FluxConfig::Burgers);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.resolution, 1000);
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::from_toml(STEP).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = RunConfig::from_toml("name = \"a\"\ndelta = = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::from_toml(&STEP.replace("cells = 400", "cells = -4")).unwrap_err();
        assert!(err.to_string().contains("cells"), "{err}");
        let err = RunConfig::from_toml(&STEP.replace("t_end = 2.0", "t_end = 2.0\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let bad = |from: &str, to: &str, field: &str| {
            let err = RunConfig::from_toml(&STEP.replace(from, to)).unwrap_err();
            assert!(err.to_string().contains(field), "{err}");
        };
        bad("delta = 0.1", "delta = 0.0", "delta");
        bad("window = [-1.0, 3.0]", "window = [3.0, 3.0]", "window");
        bad("t_end = 2.0", "t_end = 2.0\noutput_times = [1.0, 0.5]", "output_times");
        bad("t_end = 2.0", "t_end = 2.0\noutput_times = [2.5]", "output_times");
        bad("kind = \"burgers\"", "kind = \"expr\"\nexpr = \"u^2 +\"", "flux.expr");
    }

    #[test]
    fn initial_data_builders() {
        let pw = InitialConfig::Piecewise { breaks: vec![-1.0, 0.0], values: vec![2.0, 1.0, 0.0] }.build().unwrap();
        assert_eq!([pw.eval(-2.0), pw.eval(-1.0), pw.eval(-0.5), pw.eval(0.0)], [2.0, 1.0, 1.0, 0.0]);
        assert!(InitialConfig::Piecewise { breaks: vec![0.0], values: vec![1.0] }.build().is_err());
        let b = InitialConfig::Bump { amplitude: 0.8, center: 0.0, radius: 1.0 }.build().unwrap();
        assert_eq!(b.eval(0.0), 0.8);
        assert_eq!(b.eval(1.0), 0.0);
        let e = InitialConfig::Expr { expr: "sin(x)".into() }.build().unwrap();
        assert_eq!(e.eval(0.5), 0.5f64.sin());
        assert!(InitialConfig::Expr { expr: "x*u".into() }.build().is_err());
    }
}

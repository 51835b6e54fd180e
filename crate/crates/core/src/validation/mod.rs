//! Checks of the a-priori estimates and an independent finite-volume oracle.

mod characteristic;
mod entropy;
mod fv;
mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use characteristic::{characteristic_check, characteristic_trajectory, rarefaction_oracle, RarefactionOracle};
pub use entropy::{
    approx_kruzkov_estimate, approx_kruzkov_residual, kruzkov_estimate, kruzkov_residual, FnSolution, QuadSpec,
    ResidualEstimate, SpaceTimeSolution, TestFunction, TrackedSolution, TOL_QUAD_FLOOR, TOL_QUAD_SAFETY,
};
pub use fv::{fv_reference, godunov_flux, FVGrid, MAX_CFL};
pub use metrics::{
    domain_of_dependence_check, flux_convergence_check, inversion_bound_check, l1_distance, u_l1_between_fields,
    DependenceResult, FluxConvergence, FluxConvergenceRow, InversionCheck, TrackingSetup,
};

use crate::flux::EnvelopeError;
use crate::stationary::StationaryError;
use crate::tracker::{QuantizeError, TrackerError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("test function support {support:?} escapes the sampled box {domain:?}")]
    SupportEscapes { support: ((f64, f64), (f64, f64)), domain: ((f64, f64), (f64, f64)) },
    #[error("trajectory left the window at x = {x}, t = {t}")]
    WindowExit { x: f64, t: f64 },
    #[error("CFL number {cfl} exceeds the limit {MAX_CFL}")]
    Cfl { cfl: f64 },
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// One measured quantity against its bound; passes iff `measured <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
    pub parameters: BTreeMap<String, f64>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        CheckResult { name: name.into(), measured, bound, passed: measured <= bound, parameters: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_owned(), value);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

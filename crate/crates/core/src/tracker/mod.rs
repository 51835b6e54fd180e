//! Front tracking: quantization of initial data, front emission, time
//! stepping with collision detection, and sampling.

mod advance;
mod field;
mod history;
mod quantize;

pub use advance::{
    resolve_collision, Event, EventLog, ForensicDump, Tracker, TrackerConfig, TrackerError, DEFAULT_MIN_STEP_FRACTION,
    DEFAULT_STEP, TOL_EVENT, TOL_POS,
};
pub use field::{g_l1_distance, FieldError, Front, FrontField, FrontKind};
pub use history::{SolutionHistory, Track};
pub use quantize::{
    initial_fronts, quantize_initial, quantize_with_boundary, round_ties_to_zero, Boundary, PiecewiseLevels,
    QuantizeDiagnostics, QuantizeError,
};

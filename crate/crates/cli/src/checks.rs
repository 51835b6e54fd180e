use ftrack_core::flux::{speed_envelope, Flux};
use ftrack_core::riemann::ApproxFlux;
use ftrack_core::tracker::{g_l1_distance, EventLog, FrontField, SolutionHistory, Tracker, TrackerConfig};
use ftrack_core::validation::{
    approx_kruzkov_estimate, characteristic_check, flux_convergence_check, fv_reference, inversion_bound_check,
    l1_distance, CheckResult, QuadSpec, TestFunction, TrackedSolution, ValidationError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CheckName, InitialData, RunConfig};

/// Everything a check may look at after a solve.
pub struct CheckInputs<'a> {
    pub config: &'a RunConfig,
    pub flux: &'a dyn Flux,
    pub u0: &'a InitialData,
    pub initial: &'a FrontField,
    pub final_field: &'a FrontField,
    pub snapshots: &'a [FrontField],
    pub log: &'a EventLog,
    pub history: &'a SolutionHistory,
    /// Bound on `|u|` for the quantized data.
    pub u_bound: f64,
    pub tracker: TrackerConfig,
}

/// Generator for one randomized battery. Each check owns a ChaCha stream so
/// the draws do not depend on which other checks run, or in what order.
pub fn battery_rng(seed: u64, check: CheckName) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(check as u64 + 1);
    rng
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// `L = max(theta(M), theta(-M))` sampled over the window.
pub fn lipschitz_l(flux: &dyn Flux, window: (f64, f64), u_bound: f64) -> Result<f64, ValidationError> {
    let env = speed_envelope(flux, &linspace(-u_bound - 1.0, u_bound + 1.0, 401), &linspace(window.0, window.1, 4001))?;
    Ok(env.lipschitz_l(u_bound))
}

fn failed(name: &str, err: ValidationError) -> CheckResult {
    log::warn!("check {name} could not run: {err}");
    CheckResult::new(name, f64::NAN, 0.0)
}

pub fn run_check(check: CheckName, inp: &CheckInputs<'_>) -> Vec<CheckResult> {
    let res = match check {
        CheckName::Tvd => Ok(vec![tvd(inp)]),
        CheckName::Admissibility => Ok(vec![admissibility(inp)]),
        CheckName::EventCount => Ok(vec![event_count(inp)]),
        CheckName::Entropy => entropy(inp).map(|c| vec![c]),
        CheckName::Lipschitz => lipschitz(inp).map(|c| vec![c]),
        CheckName::FvCompare => fv_compare(inp).map(|c| vec![c]),
        CheckName::FluxConvergence => flux_convergence(inp),
        CheckName::InversionBound => inversion_bound(inp).map(|c| vec![c]),
        CheckName::Characteristic => characteristic(inp).map(|c| vec![c]),
    };
    res.unwrap_or_else(|e| vec![failed(check_label(check), e)])
}

pub fn check_label(check: CheckName) -> &'static str {
    match check {
        CheckName::Tvd => "tvd",
        CheckName::Admissibility => "admissibility",
        CheckName::EventCount => "event_count",
        CheckName::Entropy => "entropy",
        CheckName::Lipschitz => "lipschitz",
        CheckName::FvCompare => "fv_compare",
        CheckName::FluxConvergence => "flux_convergence",
        CheckName::InversionBound => "inversion_bound",
        CheckName::Characteristic => "characteristic",
    }
}

/// Largest increase of the integer TV across any event or the whole run.
fn tvd(inp: &CheckInputs<'_>) -> CheckResult {
    let worst = inp
        .log
        .events
        .iter()
        .map(|e| e.tv_after_z - e.tv_before_z)
        .chain([inp.final_field.tv_z() - inp.initial.tv_z()])
        .max()
        .unwrap_or(0);
    CheckResult::new("tvd", worst as f64, 0.0)
        .with("events", inp.log.len() as f64)
        .with("tv_initial", inp.initial.tv_g())
        .with("tv_final", inp.final_field.tv_g())
}

/// Largest upward jump, in levels, over every sampled field.
fn admissibility(inp: &CheckInputs<'_>) -> CheckResult {
    let worst = [inp.initial, inp.final_field]
        .into_iter()
        .chain(inp.snapshots)
        .flat_map(|f| f.fronts().iter().map(|fr| fr.z_right - fr.z_left))
        .max()
        .unwrap_or(0);
    CheckResult::new("admissibility", worst as f64, 1.0).with("delta", inp.config.delta)
}

fn event_count(inp: &CheckInputs<'_>) -> CheckResult {
    let n0 = inp.initial.fronts().len();
    CheckResult::new("event_count", inp.log.len() as f64, n0.saturating_sub(1) as f64).with("initial_fronts", n0 as f64)
}

/// Random tensor bump inside the window and `[.., t_end]`.
pub fn random_test_function(rng: &mut ChaCha8Rng, window: (f64, f64), t_end: f64) -> TestFunction {
    let w = window.1 - window.0;
    let xr = w * rng.gen_range(0.05..0.25);
    let xc = rng.gen_range(window.0 + xr..window.1 - xr);
    let tr = t_end * rng.gen_range(0.1..0.5);
    let tc = rng.gen_range(0.0..t_end - tr);
    TestFunction::tensor_bump(xc, xr, tc, tr)
}

/// `min_pairs (R + tol_quad)` must be non-negative; reported as its negation.
fn entropy(inp: &CheckInputs<'_>) -> Result<CheckResult, ValidationError> {
    let tol = &inp.config.tolerances;
    let t_end = inp.config.t_end;
    if t_end <= 0.0 || tol.entropy_pairs == 0 {
        return Ok(CheckResult::new("entropy", 0.0, 0.0).with("pairs", 0.0));
    }
    let mut rng = battery_rng(inp.config.seed, CheckName::Entropy);
    let sol = TrackedSolution::new(inp.flux, inp.history, inp.config.window);
    let af = ApproxFlux::new(inp.flux, inp.config.delta);
    let quad = QuadSpec { nx: tol.quad_nx, nt: tol.quad_nt };
    let (mut worst, mut min_r, mut max_tol) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    let k_range = 1.1 * inp.u_bound.max(inp.config.delta);
    for _ in 0..tol.entropy_pairs {
        let phi = random_test_function(&mut rng, inp.config.window, t_end);
        let k = rng.gen_range(-k_range..k_range);
        let e = approx_kruzkov_estimate(&sol, &af, k, &phi, quad)?;
        worst = worst.max(-e.value - e.tol_quad);
        min_r = min_r.min(e.value);
        max_tol = max_tol.max(e.tol_quad);
    }
    Ok(CheckResult::new("entropy", worst, 0.0)
        .with("pairs", tol.entropy_pairs as f64)
        .with("min_residual", min_r)
        .with("max_tol_quad", max_tol)
        .with("quad_nx", quad.nx as f64)
        .with("quad_nt", quad.nt as f64))
}

/// `int |g(t+h) - g(t)| - L TV(G0) h` over random `(t, h)`, against the slack.
fn lipschitz(inp: &CheckInputs<'_>) -> Result<CheckResult, ValidationError> {
    let tol = &inp.config.tolerances;
    let t_end = inp.config.t_end;
    if t_end <= 0.0 || tol.lipschitz_samples == 0 {
        return Ok(CheckResult::new("lipschitz", 0.0, tol.lipschitz_slack));
    }
    let mut rng = battery_rng(inp.config.seed, CheckName::Lipschitz);
    let pairs: Vec<(f64, f64)> = (0..tol.lipschitz_samples)
        .map(|_| {
            let t = rng.gen_range(0.0..t_end);
            (t, rng.gen_range(0.0..=t_end - t))
        })
        .collect();
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(t, h)| [t, t + h]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let tracker = Tracker::new(inp.flux, inp.tracker);
    let mut field = inp.initial.clone();
    let mut log = EventLog::default();
    let mut fields = Vec::with_capacity(times.len());
    for &t in &times {
        tracker.advance_in_place(&mut field, t, &mut log, None)?;
        fields.push(field.clone());
    }
    let at = |t: f64| &fields[times.partition_point(|&s| s < t)];
    let l = lipschitz_l(inp.flux, inp.config.window, inp.u_bound)?;
    let tv0 = inp.initial.tv_g();
    let mut worst = f64::NEG_INFINITY;
    for &(t, h) in &pairs {
        let d = g_l1_distance(at(t), at(t + h), inp.config.window);
        worst = worst.max(d - l * tv0 * h);
    }
    Ok(CheckResult::new("lipschitz", worst, tol.lipschitz_slack)
        .with("samples", pairs.len() as f64)
        .with("lipschitz_l", l)
        .with("tv_initial", tv0))
}

/// L1 distance to the finite-volume oracle against a fraction of `||u0||_1`.
fn fv_compare(inp: &CheckInputs<'_>) -> Result<CheckResult, ValidationError> {
    let cfg = inp.config;
    let tol = &cfg.tolerances;
    let cells = if tol.fv_cells == 0 { cfg.cells } else { tol.fv_cells };
    let u0 = |x: f64| inp.u0.eval(x);
    let fv = fv_reference(inp.flux, &u0, cfg.window, cells, cfg.t_end, tol.fv_cfl)?;
    let resolution = 4 * cells.max(cfg.cells);
    let mut err = None;
    let ft = |x: f64| match inp.final_field.sample_u(inp.flux, x) {
        Ok(u) => u,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let ft = std::cell::RefCell::new(ft);
    let d = l1_distance(&|x| (ft.borrow_mut())(x), &|x| fv.sample(x), cfg.window, resolution);
    drop(ft);
    if let Some(e) = err {
        return Err(e.into());
    }
    let norm = l1_distance(&u0, &|_| 0.0, cfg.window, resolution);
    Ok(CheckResult::new("fv_compare", d, tol.fv_fraction * norm)
        .with("fv_cells", cells as f64)
        .with("fv_steps", fv.steps as f64)
        .with("u0_l1", norm))
}

fn flux_convergence(inp: &CheckInputs<'_>) -> Result<Vec<CheckResult>, ValidationError> {
    let deltas = &inp.config.tolerances.flux_deltas;
    let c = flux_convergence_check(inp.flux, deltas, inp.config.window, inp.u_bound.max(1e-3), 61)?;
    let worst = c
        .rows
        .iter()
        .map(|r| (r.sup_f_error - r.bound_f).max(r.sup_fx_error - r.bound_fx))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut bound = CheckResult::new("flux_convergence", worst, 0.0).with("deltas", deltas.len() as f64);
    if let Some(r) = c.rows.iter().min_by(|a, b| a.delta.total_cmp(&b.delta)) {
        bound = bound.with("finest_sup_f_error", r.sup_f_error).with("finest_bound_f", r.bound_f);
    }
    let monotone = CheckResult::new("flux_convergence_monotone", if c.monotone_decay { 0.0 } else { 1.0 }, 0.0);
    Ok(vec![bound, monotone])
}

fn inversion_bound(inp: &CheckInputs<'_>) -> Result<CheckResult, ValidationError> {
    let xs = linspace(inp.config.window.0, inp.config.window.1, 101);
    let g_max = inp.initial.max_abs_g().max(inp.config.delta);
    let mut slack = f64::INFINITY;
    for &d in &inp.config.tolerances.flux_deltas {
        slack = slack.min(inversion_bound_check(inp.flux, d, &xs, g_max)?.min_slack);
    }
    Ok(CheckResult::new("inversion_bound", -slack, 0.0).with("g_max", g_max))
}

/// Flux drift along the characteristic from the window centre with the
/// largest state, integrated to `t_end`.
fn characteristic(inp: &CheckInputs<'_>) -> Result<CheckResult, ValidationError> {
    let cfg = inp.config;
    let tol = &cfg.tolerances;
    let x0 = 0.5 * (cfg.window.0 + cfg.window.1);
    let drift =
        characteristic_check(inp.flux, x0, inp.u_bound, cfg.t_end, tol.characteristic_steps.max(1), cfg.window)?;
    Ok(CheckResult::new("characteristic", drift, tol.characteristic_drift)
        .with("x0", x0)
        .with("u0", inp.u_bound)
        .with("steps", tol.characteristic_steps as f64))
}

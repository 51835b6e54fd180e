use super::ValidationError;
use crate::flux::Flux;
use crate::stationary::invert;

fn rhs(flux: &dyn Flux, y: f64, z: f64) -> (f64, f64) {
    (flux.f_u(y, z), -flux.f_x(y, z))
}

/// RK4 for `y' = f_u(y, z)`, `z' = -f_x(y, z)`; returns `steps + 1` states.
pub fn characteristic_trajectory(flux: &dyn Flux, x0: f64, u0: f64, t_end: f64, steps: usize) -> Vec<(f64, f64)> {
    let h = t_end / steps.max(1) as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut y, mut z) = (x0, u0);
    out.push((y, z));
    for _ in 0..steps {
        let k1 = rhs(flux, y, z);
        let k2 = rhs(flux, y + 0.5 * h * k1.0, z + 0.5 * h * k1.1);
        let k3 = rhs(flux, y + 0.5 * h * k2.0, z + 0.5 * h * k2.1);
        let k4 = rhs(flux, y + h * k3.0, z + h * k3.1);
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        z += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((y, z));
    }
    out
}

/// Largest `|f(y, z) - f(x0, u0)|` along the RK4 trajectory.
pub fn characteristic_check(
    flux: &dyn Flux,
    x0: f64,
    u0: f64,
    t_end: f64,
    steps: usize,
    window: (f64, f64),
) -> Result<f64, ValidationError> {
    let f0 = flux.f(x0, u0);
    let h = t_end / steps.max(1) as f64;
    let mut drift = 0.0f64;
    for (n, (y, z)) in characteristic_trajectory(flux, x0, u0, t_end, steps).into_iter().enumerate() {
        if !(y >= window.0 && y <= window.1) {
            return Err(ValidationError::WindowExit { x: y, t: n as f64 * h });
        }
        drift = drift.max((flux.f(y, z) - f0).abs());
    }
    Ok(drift)
}

/// Exact rarefaction from a generalised Riemann problem at `x_bar`, built from
/// characteristics with `z(0)` spread over `[U[g_l](x_bar), U[g_r](x_bar)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RarefactionOracle {
    pub g_l: f64,
    pub g_r: f64,
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
}

pub fn rarefaction_oracle(
    flux: &dyn Flux,
    g_l: f64,
    g_r: f64,
    x_bar: f64,
    t: f64,
    rays: usize,
    steps: usize,
) -> Result<RarefactionOracle, ValidationError> {
    if !(g_l < g_r) || rays < 2 {
        return Err(ValidationError::BadInput("rarefaction needs g_l < g_r and at least two rays".into()));
    }
    let u_l = invert(flux, g_l, x_bar)?;
    let u_r = invert(flux, g_r, x_bar)?;
    let mut ys = Vec::with_capacity(rays);
    let mut zs = Vec::with_capacity(rays);
    for j in 0..rays {
        let z0 = u_l + (u_r - u_l) * j as f64 / (rays - 1) as f64;
        let (y, z) = *characteristic_trajectory(flux, x_bar, z0, t, steps).last().unwrap();
        ys.push(y);
        zs.push(z);
    }
    Ok(RarefactionOracle { g_l, g_r, ys, zs })
}

impl RarefactionOracle {
    pub fn eval(&self, flux: &dyn Flux, x: f64) -> Result<f64, ValidationError> {
        let n = self.ys.len();
        if x < self.ys[0] {
            return Ok(invert(flux, self.g_l, x)?);
        }
        if x >= self.ys[n - 1] {
            return Ok(invert(flux, self.g_r, x)?);
        }
        let i = self.ys.partition_point(|&y| y <= x);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        let w = if y1 > y0 { (x - y0) / (y1 - y0) } else { 0.0 };
        Ok((1.0 - w) * self.zs[i - 1] + w * self.zs[i])
    }
}

use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::flux::Flux;

pub const MAX_CFL: f64 = 0.45;

/// First-order finite-volume state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FVGrid {
    pub window: (f64, f64),
    pub cells: usize,
    pub dx: f64,
    pub u: Vec<f64>,
    pub t: f64,
    pub cfl: f64,
    pub steps: usize,
}

impl FVGrid {
    pub fn center(&self, i: usize) -> f64 {
        self.window.0 + (i as f64 + 0.5) * self.dx
    }

    /// Piecewise constant reconstruction; zero outside the window.
    pub fn sample(&self, x: f64) -> f64 {
        if !(x >= self.window.0 && x < self.window.1) {
            return 0.0;
        }
        let i = ((x - self.window.0) / self.dx) as usize;
        self.u[i.min(self.cells - 1)]
    }

    pub fn total_variation(&self) -> f64 {
        self.u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }
}

/// Godunov flux for a flux convex in `u` with its minimum at `u = 0`.
pub fn godunov_flux(flux: &dyn Flux, x: f64, u_l: f64, u_r: f64) -> f64 {
    if u_l <= u_r {
        flux.f(x, 0.0f64.clamp(u_l, u_r))
    } else {
        flux.f(x, u_l).max(flux.f(x, u_r))
    }
}

/// Godunov scheme with the flux frozen at each interface, zero-gradient
/// boundaries and `dt = cfl * dx / v_max` recomputed every step.
pub fn fv_reference(
    flux: &dyn Flux,
    u0: &dyn Fn(f64) -> f64,
    window: (f64, f64),
    cells: usize,
    t_end: f64,
    cfl: f64,
) -> Result<FVGrid, ValidationError> {
    if !(cfl > 0.0 && cfl <= MAX_CFL) {
        return Err(ValidationError::Cfl { cfl });
    }
    if cells < 2 || !(window.1 > window.0) || !(t_end >= 0.0) {
        return Err(ValidationError::BadInput("finite volumes need a window, two cells and t_end >= 0".into()));
    }
    let dx = (window.1 - window.0) / cells as f64;
    let mut grid = FVGrid {
        window,
        cells,
        dx,
        u: (0..cells).map(|i| u0(window.0 + (i as f64 + 0.5) * dx)).collect(),
        t: 0.0,
        cfl,
        steps: 0,
    };
    if let Some(i) = grid.u.iter().position(|u| !u.is_finite()) {
        return Err(ValidationError::BadInput(format!("initial data not finite at x = {}", grid.center(i))));
    }
    let faces: Vec<f64> = (0..=cells).map(|i| window.0 + i as f64 * dx).collect();
    let mut fluxes = vec![0.0; cells + 1];
    while grid.t < t_end {
        let u = &grid.u;
        let state = |i: isize| u[i.clamp(0, cells as isize - 1) as usize];
        let mut v_max = 0.0f64;
        for (j, &x) in faces.iter().enumerate() {
            let (ul, ur) = (state(j as isize - 1), state(j as isize));
            v_max = v_max.max(flux.f_u(x, ul).abs()).max(flux.f_u(x, ur).abs());
            fluxes[j] = godunov_flux(flux, x, ul, ur);
        }
        let remaining = t_end - grid.t;
        let dt = if v_max > 0.0 { (cfl * dx / v_max).min(remaining) } else { remaining };
        if v_max * dt > cfl * dx * (1.0 + 1e-12) {
            return Err(ValidationError::Cfl { cfl: v_max * dt / dx });
        }
        let r = dt / dx;
        for (i, ui) in grid.u.iter_mut().enumerate() {
            *ui -= r * (fluxes[i + 1] - fluxes[i]);
        }
        grid.t = if dt == remaining { t_end } else { grid.t + dt };
        grid.steps += 1;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{Burgers, Modulation, ModulatedBurgers};

    #[test]
    fn zero_data_stays_zero() {
        let m = ModulatedBurgers::new(Modulation { mean: 1.0, amplitude: 0.5, wavenumber: 1.0, phase: 0.0 }).unwrap();
        let g = fv_reference(&m, &|_| 0.0, (-1.0, 1.0), 100, 1.0, 0.45).unwrap();
        assert!(g.u.iter().all(|&u| u == 0.0));
        assert_eq!(g.t, 1.0);
    }

    #[test]
    fn burgers_shock_position() {
        let g = fv_reference(&Burgers, &|x| if x < 0.0 { 1.0 } else { 0.0 }, (-1.0, 2.0), 1000, 1.0, 0.45).unwrap();
        // Oracle: analytic shock at x = 0.5; locate the u = 1/2 crossing.
        let i = g.u.iter().position(|&u| u < 0.5).unwrap();
        assert!((g.center(i) - 0.5).abs() <= 5.0 * g.dx);
    }

    #[test]
    fn burgers_rarefaction_converges() {
        let err = |cells: usize| {
            let g = fv_reference(&Burgers, &|x| if x < 0.0 { 0.0 } else { 1.0 }, (-1.0, 3.0), cells, 1.0, 0.45).unwrap();
            (0..cells)
                .filter(|&i| g.center(i) > -0.5 && g.center(i) < 1.5)
                .map(|i| (g.u[i] - g.center(i).clamp(0.0, 1.0)).abs() * g.dx)
                .sum::<f64>()
        };
        let (e1, e2, e3) = (err(200), err(400), err(800));
        assert!(e2 < e1 && e3 < e2, "{e1} {e2} {e3}");
        let dx = 4.0 / 800.0;
        assert!(e3 <= 2.0 * dx * (1.0f64 / dx).ln());
    }

    #[test]
    fn monotone_data_is_tvd() {
        let g0 = |x: f64| (1.0 - x).clamp(0.0, 1.0);
        let start = fv_reference(&Burgers, &g0, (-1.0, 3.0), 400, 0.0, 0.45).unwrap();
        let end = fv_reference(&Burgers, &g0, (-1.0, 3.0), 400, 1.5, 0.45).unwrap();
        assert!(end.total_variation() <= start.total_variation() + 1e-12);
    }

    #[test]
    fn cfl_limit_enforced() {
        assert!(matches!(fv_reference(&Burgers, &|_| 0.0, (0.0, 1.0), 10, 1.0, 0.5), Err(ValidationError::Cfl { .. })));
    }
}

use thiserror::Error;

use super::Flux;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("speed envelope needs non-empty v and x grids")]
    EmptyGrid,
    #[error("speed envelope is not finite at v = {0}")]
    NotFinite(f64),
}

/// Sampled `theta(v) = max_x |f_u(x, v)|` over a working window.
///
/// `theta` is exact at the grid nodes and piecewise linear in between. Beyond
/// the sampled `v` range it grows linearly with the largest sampled `f_uu`.
#[derive(Debug, Clone)]
pub struct SpeedEnvelope {
    vs: Vec<f64>,
    thetas: Vec<f64>,
    max_fuu: f64,
}

impl SpeedEnvelope {
    pub fn theta(&self, v: f64) -> f64 {
        let n = self.vs.len();
        let (lo, hi) = (self.vs[0], self.vs[n - 1]);
        if v < lo {
            return self.thetas[0] + self.max_fuu * (lo - v);
        }
        if v > hi {
            return self.thetas[n - 1] + self.max_fuu * (v - hi);
        }
        let i = self.vs.partition_point(|&s| s < v);
        if self.vs[i] == v {
            return self.thetas[i];
        }
        let (v0, v1) = (self.vs[i - 1], self.vs[i]);
        let w = (v - v0) / (v1 - v0);
        (1.0 - w) * self.thetas[i - 1] + w * self.thetas[i]
    }

    /// Propagation speed bound `max(theta(M), theta(-M))` for `|u| <= M`.
    pub fn lipschitz_l(&self, u_bound: f64) -> f64 {
        let m = u_bound.abs();
        self.theta(m).max(self.theta(-m))
    }

    pub fn v_range(&self) -> (f64, f64) {
        (self.vs[0], self.vs[self.vs.len() - 1])
    }
}

pub fn speed_envelope(flux: &dyn Flux, v_grid: &[f64], x_grid: &[f64]) -> Result<SpeedEnvelope, EnvelopeError> {
    if v_grid.is_empty() || x_grid.is_empty() {
        return Err(EnvelopeError::EmptyGrid);
    }
    let mut vs = v_grid.to_vec();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    let mut thetas = Vec::with_capacity(vs.len());
    let mut max_fuu = 0.0f64;
    for &v in &vs {
        let mut t = 0.0f64;
        for &x in x_grid {
            let s = flux.f_u(x, v).abs();
            let c = flux.f_uu(x, v).abs();
            if !s.is_finite() || !c.is_finite() {
                return Err(EnvelopeError::NotFinite(v));
            }
            t = t.max(s);
            max_fuu = max_fuu.max(c);
        }
        thetas.push(t);
    }
    Ok(SpeedEnvelope { vs, thetas, max_fuu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::audit::linspace;
    use crate::flux::{Burgers, Modulation, ModulatedBurgers};

    #[test]
    fn burgers_envelope_is_abs_v() {
        let env = speed_envelope(&Burgers, &linspace(-3.0, 3.0, 61), &linspace(-5.0, 5.0, 11)).unwrap();
        assert_eq!(env.theta(2.0), 2.0);
        assert_eq!(env.theta(0.0), 0.0);
        assert!((env.theta(1.234) - 1.234).abs() < 1e-12);
        assert_eq!(env.lipschitz_l(1.5), 1.5);
        assert_eq!(env.theta(4.0), 4.0);
    }

    #[test]
    fn modulated_envelope_uses_max_coefficient() {
        let m = ModulatedBurgers::new(Modulation { mean: 1.0, amplitude: 0.5, wavenumber: 1.0, phase: 0.0 })
            .unwrap();
        let mut xs = linspace(-6.0, 6.0, 1201);
        xs.push(std::f64::consts::FRAC_PI_2);
        let env = speed_envelope(&m, &linspace(-2.0, 2.0, 41), &xs).unwrap();
        assert_eq!(env.theta(2.0), 3.0);
        assert_eq!(env.theta(0.0), 0.0);
        assert_eq!(env.lipschitz_l(2.0), 3.0);
    }

    #[test]
    fn empty_grids_rejected() {
        assert_eq!(speed_envelope(&Burgers, &[], &[0.0]).unwrap_err(), EnvelopeError::EmptyGrid);
        assert_eq!(speed_envelope(&Burgers, &[0.0], &[]).unwrap_err(), EnvelopeError::EmptyGrid);
    }

    #[test]
    fn envelope_dominates_samples() {
        let m = ModulatedBurgers::new(Modulation { mean: 2.0, amplitude: 1.2, wavenumber: 2.0, phase: 0.3 })
            .unwrap();
        let xs = linspace(-3.0, 3.0, 97);
        let vs = linspace(-2.0, 2.0, 33);
        let env = speed_envelope(&m, &vs, &xs).unwrap();
        for &v in &vs {
            for &x in &xs {
                assert!(env.theta(v) >= m.f_u(x, v).abs());
            }
            assert!(env.theta(v).is_finite());
        }
    }
}

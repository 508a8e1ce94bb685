//! Discrete stability of the force loop.
//!
//! Linearized about equilibrium with `δ` the normal tip displacement
//! (positive = retreat, so `f_n - f* = k δ`), one force tick is
//!
//! ```text
//! v' = a v - c δ           a = 1 - dt B/M,  c = dt K_f k / M
//! δ' = δ + dt v'
//! ```
//!
//! The plant integrates the freshly commanded velocity over the next
//! period, hence `δ'` uses `v'`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::control::{schedule_gains, AdmittanceSpec};
use crate::error::{invalid, Result};

/// Update matrix on `[v_n, δ]`.
pub fn closed_loop_matrix(spec: &AdmittanceSpec, k_eq: f64, dt: f64) -> Result<Matrix2<f64>> {
    let g = schedule_gains(spec, k_eq)?;
    let a = 1.0 - dt * g.b / g.mass;
    let c = dt * g.k_f * k_eq / g.mass;
    Ok(Matrix2::new(a, -c, dt * a, 1.0 - dt * c))
}

pub fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Uniform grid of candidate force periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtScan {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for DtScan {
    fn default() -> Self {
        Self {
            min: 1e-4,
            max: 0.2,
            steps: 2000,
        }
    }
}

impl DtScan {
    pub fn resolution(&self) -> f64 {
        (self.max - self.min) / (self.steps.max(2) - 1) as f64
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.resolution();
        (0..self.steps.max(2)).map(move |i| self.min + i as f64 * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    /// Largest stable period on the grid, or the scan minimum when none is.
    pub dt_max: f64,
    pub resolution: f64,
    pub all_unstable: bool,
}

pub fn stability_bound(spec: &AdmittanceSpec, k_eq: f64, scan: DtScan) -> Result<StabilityBound> {
    if !(scan.min > 0.0 && scan.max > scan.min && scan.max.is_finite()) {
        return Err(invalid("scan", "need 0 < min < max"));
    }
    let mut best = None;
    for dt in scan.points() {
        if spectral_radius(&closed_loop_matrix(spec, k_eq, dt)?) < 1.0 {
            best = Some(dt);
        }
    }
    Ok(StabilityBound {
        dt_max: best.unwrap_or(scan.min),
        resolution: scan.resolution(),
        all_unstable: best.is_none(),
    })
}

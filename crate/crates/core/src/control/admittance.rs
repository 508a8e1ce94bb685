//! Velocity admittance on the surface normal with stiffness-scheduled gains.
//!
//! The law `M v̇ + B v = K_f (F_d - F_n)` against a contact of stiffness
//! `k_eq` gives force-error dynamics `M ë + B ė + K_f k_eq e = 0`. Choosing
//! `K_f = ωn² M / k_eq` and `B = 2 η ωn M` pins the error to the requested
//! natural frequency and damping whatever the stiffness.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};

/// Closed-loop design targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmittanceSpec {
    /// Natural frequency (rad/s).
    pub omega_n: f64,
    /// Damping ratio.
    pub eta: f64,
    /// Virtual mass (kg).
    pub mass: f64,
}

impl Default for AdmittanceSpec {
    fn default() -> Self {
        Self {
            omega_n: 10.0,
            eta: 1.0,
            mass: 1.0,
        }
    }
}

impl AdmittanceSpec {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("spec.omega_n", self.omega_n),
            ("spec.eta", self.eta),
            ("spec.mass", self.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceGains {
    pub k_f: f64,
    pub b: f64,
    pub mass: f64,
}

impl AdmittanceGains {
    /// `dt * B / M`; the velocity decay factor `1 - ratio` must stay inside
    /// (-1, 1).
    pub fn decay_ratio(&self, dt: f64) -> f64 {
        dt * self.b / self.mass
    }
}

pub fn schedule_gains(spec: &AdmittanceSpec, k_eq: f64) -> Result<AdmittanceGains> {
    if !(k_eq > 0.0) {
        return Err(SimError::InvalidStiffness(k_eq));
    }
    Ok(AdmittanceGains {
        k_f: spec.omega_n * spec.omega_n * spec.mass / k_eq,
        b: 2.0 * spec.eta * spec.omega_n * spec.mass,
        mass: spec.mass,
    })
}

/// One explicit Euler step of the admittance law. Positive `v_n` retreats
/// from the surface; forces are negative in compression.
pub fn admittance_step(gains: &AdmittanceGains, v_n: f64, f_n: f64, f_des: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    let ratio = gains.decay_ratio(dt);
    if ratio >= 2.0 {
        return Err(SimError::UnstableTimestep { ratio });
    }
    Ok(dt * gains.k_f / gains.mass * (f_des - f_n) + (1.0 - ratio) * v_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(omega_n: f64, eta: f64, mass: f64) -> AdmittanceSpec {
        AdmittanceSpec { omega_n, eta, mass }
    }

    #[test]
    fn scheduling_cases() {
        let g = schedule_gains(&spec(10.0, 1.0, 1.0), 50.0).unwrap();
        assert_relative_eq!(g.k_f, 2.0, max_relative = 1e-12);
        assert_relative_eq!(g.b, 20.0, max_relative = 1e-12);
        let g = schedule_gains(&spec(5.0, 0.7, 2.0), 100.0).unwrap();
        assert_relative_eq!(g.k_f, 0.5, max_relative = 1e-12);
        assert_relative_eq!(g.b, 14.0, max_relative = 1e-12);
        for (w, m) in [(3.0, 2.0), (7.5, 0.4)] {
            let g = schedule_gains(&spec(w, 0.3, m), w * w * m).unwrap();
            assert_relative_eq!(g.k_f, 1.0, max_relative = 1e-12);
        }
        assert!(matches!(
            schedule_gains(&spec(10.0, 1.0, 1.0), 0.0),
            Err(SimError::InvalidStiffness(_))
        ));
    }

    #[test]
    fn single_step_moves_into_surface() {
        let g = AdmittanceGains {
            k_f: 2.0,
            b: 20.0,
            mass: 1.0,
        };
        let v = admittance_step(&g, 0.0, 0.0, -2.0, 0.002).unwrap();
        assert_relative_eq!(v, -0.008, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = AdmittanceGains {
            k_f: 2.0,
            b: 20.0,
            mass: 1.0,
        };
        assert_eq!(admittance_step(&g, 0.0, -2.0, -2.0, 0.002).unwrap(), 0.0);
    }

    #[test]
    fn rejects_unstable_timestep() {
        let g = AdmittanceGains {
            k_f: 2.0,
            b: 20.0,
            mass: 1.0,
        };
        assert!(matches!(
            admittance_step(&g, 0.0, 0.0, -2.0, 0.1),
            Err(SimError::UnstableTimestep { .. })
        ));
        assert!(admittance_step(&g, 0.0, 0.0, -2.0, 0.0999).is_ok());
    }

    #[test]
    fn closed_loop_tracks_critically_damped_response() {
        // Oracle: e(t) = e0 (1 + ωn t) exp(-ωn t) for a start at rest on the
        // contact surface (p = 0, v = 0).
        let (k_eq, wn, dt, f_des) = (50.0, 10.0, 0.002, -2.0);
        let g = schedule_gains(&spec(wn, 1.0, 1.0), k_eq).unwrap();
        let (mut v, mut p) = (0.0_f64, 0.0_f64);
        let e0 = f_des;
        let mut errors = Vec::new();
        for _ in 0..=300 {
            let f = k_eq * p.min(0.0);
            errors.push(f_des - f);
            v = admittance_step(&g, v, f, f_des, dt).unwrap();
            p += dt * v;
        }
        for t in [0.1_f64, 0.3, 0.6] {
            let i = (t / dt).round() as usize;
            let analytic = e0 * (1.0 + wn * t) * (-wn * t).exp();
            assert!(
                (errors[i] - analytic).abs() <= 0.02 * e0.abs(),
                "t={t}: sim {} vs analytic {analytic}",
                errors[i]
            );
        }
    }
}

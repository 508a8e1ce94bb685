//! Tangential reference and the feedforward-plus-proportional tracking law.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Piecewise-linear tangential displacement versus time. Both coordinates
/// are relative to the start of the sweep; the position holds at the end
/// points outside the waypoint span.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("setpoint.waypoints", "needs at least one point"));
        }
        if points.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
            return Err(invalid("setpoint.waypoints", "must be finite"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("setpoint.waypoints", "times must strictly increase"));
        }
        Ok(Self { points })
    }

    /// Constant-speed ramp over `distance` followed by a hold.
    pub fn ramp(speed: f64, distance: f64) -> Result<Self> {
        if distance == 0.0 {
            return Self::new(vec![(0.0, 0.0)]);
        }
        if !(speed > 0.0) {
            return Err(invalid("setpoint.v_sweep", "must be > 0 for a nonzero sweep"));
        }
        Self::new(vec![(0.0, 0.0), (distance.abs() / speed, distance)])
    }

    /// Time at which the reference stops moving.
    pub fn end_time(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }

    pub fn position(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        match self.segment(t) {
            Some(i) => {
                let (t0, y0) = pts[i];
                let (t1, y1) = pts[i + 1];
                y0 + (y1 - y0) * (t - t0) / (t1 - t0)
            }
            None => pts[pts.len() - 1].1,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self.segment(t) {
            Some(i) => {
                let (t0, y0) = self.points[i];
                let (t1, y1) = self.points[i + 1];
                (y1 - y0) / (t1 - t0)
            }
            None => 0.0,
        }
    }

    /// Index of the segment `[t_i, t_{i+1})` containing `t`.
    fn segment(&self, t: f64) -> Option<usize> {
        self.points.windows(2).position(|w| t >= w[0].0 && t < w[1].0)
    }
}

/// Sweep setpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSetpoint {
    /// Desired normal force (N), negative presses into the surface.
    pub f_des: f64,
    /// Sweep speed for the default ramp (m/s).
    pub v_sweep: f64,
    /// Sweep length for the default ramp (m), positive is up.
    pub sweep_distance: f64,
    /// Tangential position gain (1/s).
    pub k_p: f64,
    /// Explicit `[time, displacement]` reference replacing the ramp.
    pub waypoints: Option<Vec<[f64; 2]>>,
}

impl Default for ControlSetpoint {
    fn default() -> Self {
        Self {
            f_des: -2.0,
            v_sweep: 0.05,
            sweep_distance: 0.7289,
            k_p: 2.0,
            waypoints: None,
        }
    }
}

impl ControlSetpoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_des < 0.0 && self.f_des.is_finite()) {
            return Err(invalid("setpoint.f_des", "must be negative (compression)"));
        }
        if !(self.k_p >= 0.0) {
            return Err(invalid("setpoint.k_p", "must be >= 0"));
        }
        if !(self.v_sweep >= 0.0) {
            return Err(invalid("setpoint.v_sweep", "must be >= 0"));
        }
        self.trajectory().map(|_| ())
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        match &self.waypoints {
            Some(points) => Trajectory::new(points.iter().map(|p| (p[0], p[1])).collect()),
            None => Trajectory::ramp(self.v_sweep, self.sweep_distance),
        }
    }
}

/// `v_t = ẏ_ref(t) + K_p (y_ref(t_est) - y_est)`.
///
/// The position error compares the estimate against the reference at the
/// time the estimate was taken, so a late estimate does not bias tracking.
pub fn tangential_velocity(traj: &Trajectory, k_p: f64, y_est: f64, t_est: f64, t: f64) -> f64 {
    traj.rate(t) + k_p * (traj.position(t_est) - y_est)
}

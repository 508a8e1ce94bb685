//! Kinematics of the planar RP boom: a pitch joint `theta1` measured from the
//! +x axis (toward the wall) and a prismatic extension `d2` along the boom.
//!
//! Task velocities are resolved to joint rates through a damped
//! least-squares inverse of the Jacobian, followed by per-joint rate
//! clamping. Joint position limits are the plant's business, not ours.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};

/// Below this determinant magnitude an undamped inverse is refused.
pub const SINGULAR_DET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointState {
    /// Pitch angle (rad).
    pub theta1: f64,
    /// Boom extension (m).
    pub d2: f64,
}

impl JointState {
    pub const fn new(theta1: f64, d2: f64) -> Self {
        Self { theta1, d2 }
    }

    /// Joint state placing the tip at `(x, y)`.
    pub fn from_endpoint(x: f64, y: f64) -> Self {
        Self {
            theta1: y.atan2(x),
            d2: x.hypot(y),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.d2.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointVelocity {
    pub theta1_dot: f64,
    pub d2_dot: f64,
}

impl JointVelocity {
    pub const ZERO: Self = Self {
        theta1_dot: 0.0,
        d2_dot: 0.0,
    };

    pub const fn new(theta1_dot: f64, d2_dot: f64) -> Self {
        Self { theta1_dot, d2_dot }
    }

    fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.theta1_dot, self.d2_dot)
    }
}

/// Tip position in the base frame: `x` horizontal toward the wall, `y` up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointState {
    pub x: f64,
    pub y: f64,
}

/// Tip velocity in the base frame (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartesianVelocity {
    pub vx: f64,
    pub vy: f64,
}

impl CartesianVelocity {
    pub const fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub d2_min: f64,
    pub d2_max: f64,
    pub theta1_min: f64,
    pub theta1_max: f64,
    /// Pitch rate limit (rad/s).
    pub theta1_rate_max: f64,
    /// Extension rate limit (m/s).
    pub d2_rate_max: f64,
    /// Damped least-squares damping. Mixed units since J mixes m and m/rad.
    pub dls_lambda: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            d2_min: 0.05,
            d2_max: 1.2,
            theta1_min: 0.1,
            theta1_max: std::f64::consts::PI - 0.1,
            theta1_rate_max: 1.0,
            d2_rate_max: 0.5,
            dls_lambda: 0.01,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d2_min > 0.0) {
            return Err(invalid("robot.d2_min", "must be > 0"));
        }
        if !(self.d2_max > self.d2_min) {
            return Err(invalid("robot.d2_max", "must exceed d2_min"));
        }
        if !(self.theta1_min > 0.0 && self.theta1_max < std::f64::consts::PI && self.theta1_min < self.theta1_max) {
            return Err(invalid(
                "robot.theta1_min",
                "pitch limits must satisfy 0 < theta1_min < theta1_max < pi",
            ));
        }
        if !(self.theta1_rate_max > 0.0) {
            return Err(invalid("robot.theta1_rate_max", "must be > 0"));
        }
        if !(self.d2_rate_max > 0.0) {
            return Err(invalid("robot.d2_rate_max", "must be > 0"));
        }
        if !(self.dls_lambda >= 0.0) {
            return Err(invalid("robot.dls_lambda", "must be >= 0"));
        }
        Ok(())
    }

    /// Clamps `q` into the joint box. Returns the clamped state and whether
    /// any limit was active.
    pub fn clamp_joints(&self, q: JointState) -> (JointState, bool) {
        let theta1 = q.theta1.clamp(self.theta1_min, self.theta1_max);
        let d2 = q.d2.clamp(self.d2_min, self.d2_max);
        let hit = theta1 != q.theta1 || d2 != q.d2;
        (JointState { theta1, d2 }, hit)
    }
}

pub fn forward_kinematics(q: JointState) -> EndpointState {
    let (s, c) = q.theta1.sin_cos();
    EndpointState {
        x: q.d2 * c,
        y: q.d2 * s,
    }
}

/// Columns are d(x, y)/d(theta1) and d(x, y)/d(d2).
pub fn jacobian(q: JointState) -> Matrix2<f64> {
    let (s, c) = q.theta1.sin_cos();
    Matrix2::new(-q.d2 * s, c, q.d2 * c, s)
}

/// Damped least-squares inverse `Jᵀ (J Jᵀ + λ² I)⁻¹`.
///
/// With `lambda == 0` this is the plain inverse and fails on a singular `J`.
/// With `lambda > 0` the result is bounded by `1 / (2 λ)` in norm.
pub fn dls_inverse(j: &Matrix2<f64>, lambda: f64) -> Result<Matrix2<f64>> {
    if !(lambda >= 0.0) {
        return Err(invalid("dls_lambda", "must be >= 0"));
    }
    if lambda == 0.0 {
        let det = j.determinant();
        if det.abs() < SINGULAR_DET {
            return Err(SimError::SingularMatrix { det });
        }
        return j.try_inverse().ok_or(SimError::SingularMatrix { det });
    }
    let damped = j * j.transpose() + Matrix2::identity() * (lambda * lambda);
    let inv = damped.try_inverse().ok_or(SimError::SingularMatrix {
        det: damped.determinant(),
    })?;
    Ok(j.transpose() * inv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRate {
    pub qdot: JointVelocity,
    /// True when at least one joint rate was clipped to its limit.
    pub saturated: bool,
}

/// Maps a task-space velocity to joint rates, then clamps each rate.
pub fn resolved_rate(q: JointState, v_task: CartesianVelocity, params: &RobotParams) -> Result<ResolvedRate> {
    let pinv = dls_inverse(&jacobian(q), params.dls_lambda)?;
    let raw = pinv * Vector2::new(v_task.vx, v_task.vy);
    let theta1_dot = raw[0].clamp(-params.theta1_rate_max, params.theta1_rate_max);
    let d2_dot = raw[1].clamp(-params.d2_rate_max, params.d2_rate_max);
    Ok(ResolvedRate {
        qdot: JointVelocity { theta1_dot, d2_dot },
        saturated: theta1_dot != raw[0] || d2_dot != raw[1],
    })
}

/// Tip velocity produced by joint rates `qdot` at `q`.
pub fn endpoint_velocity(q: JointState, qdot: JointVelocity) -> CartesianVelocity {
    let v = jacobian(q) * qdot.as_vector();
    CartesianVelocity { vx: v[0], vy: v[1] }
}

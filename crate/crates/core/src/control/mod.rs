//! Force and trajectory control of the boom tip.
//!
//! Measured normal force feeds an admittance law that sets the normal tip
//! velocity; tangential velocity comes separately from the trajectory
//! tracker. The two are combined in the surface frame (normal `-x̂`,
//! tangent `+ŷ`) and resolved to joint rates.

mod admittance;
mod phase;
mod trajectory;

pub use admittance::{admittance_step, schedule_gains, AdmittanceGains, AdmittanceSpec};
pub use phase::{detect_contact, phase_update, ControlConfig, ControllerState, Phase, SweepOrigin};
pub use trajectory::{tangential_velocity, ControlSetpoint, Trajectory};

use crate::compliance::{equivalent_stiffness, StiffnessModel};
use crate::error::Result;
use crate::model::{forward_kinematics, resolved_rate, CartesianVelocity, JointState, JointVelocity, RobotParams};
use crate::plant::{PositionEstimate, SensorReading};

/// Outward surface normal in the base frame.
pub const SURFACE_NORMAL: [f64; 2] = [-1.0, 0.0];
/// Sweep direction in the base frame.
pub const SURFACE_TANGENT: [f64; 2] = [0.0, 1.0];

/// First-order low-pass on the force measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPass {
    alpha: f64,
    value: Option<f64>,
}

impl LowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        let tau = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
        Self {
            alpha: dt / (dt + tau),
            value: None,
        }
    }

    pub fn filter(&mut self, x: f64) -> f64 {
        let y = match self.value {
            Some(prev) => prev + self.alpha * (x - prev),
            None => x,
        };
        self.value = Some(y);
        y
    }
}

/// Everything the controller commanded on one force tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub qdot: JointVelocity,
    pub phase: Phase,
    pub v_n: f64,
    pub v_t: f64,
    pub k_eq: f64,
    pub gains: AdmittanceGains,
    /// A joint rate limit clipped the command.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct Controller {
    spec: AdmittanceSpec,
    setpoint: ControlSetpoint,
    trajectory: Trajectory,
    config: ControlConfig,
    stiffness: StiffnessModel,
    robot: RobotParams,
    dt: f64,
    gain_hold: bool,
    held_gains: Option<AdmittanceGains>,
    lowpass: Option<LowPass>,
    estimate: Option<PositionEstimate>,
    state: ControllerState,
    flip_sign: bool,
}

impl Controller {
    pub fn new(
        spec: AdmittanceSpec,
        setpoint: ControlSetpoint,
        config: ControlConfig,
        stiffness: StiffnessModel,
        robot: RobotParams,
        dt_force: f64,
    ) -> Result<Self> {
        spec.validate()?;
        setpoint.validate()?;
        config.validate()?;
        let trajectory = setpoint.trajectory()?;
        let state = ControllerState::new(config.initial_phase);
        Ok(Self {
            spec,
            setpoint,
            trajectory,
            config,
            stiffness,
            robot,
            dt: dt_force,
            gain_hold: false,
            held_gains: None,
            lowpass: None,
            estimate: None,
            state,
            flip_sign: false,
        })
    }

    /// Freeze the gains scheduled at contact instead of rescheduling every
    /// tick.
    pub fn with_gain_hold(mut self, hold: bool) -> Self {
        self.gain_hold = hold;
        self
    }

    pub fn with_lowpass(mut self, cutoff_hz: Option<f64>) -> Self {
        self.lowpass = cutoff_hz.map(|fc| LowPass::new(fc, self.dt));
        self
    }

    /// Inverts the admittance force error. Mutation hook for checking that
    /// the verification suite notices a broken sign convention.
    #[doc(hidden)]
    pub fn inject_sign_flip(mut self) -> Self {
        self.flip_sign = true;
        self
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn setpoint(&self) -> &ControlSetpoint {
        &self.setpoint
    }

    /// Latches the trajectory loop's position estimate.
    pub fn update_estimate(&mut self, estimate: PositionEstimate) {
        self.estimate = Some(estimate);
    }

    fn gains_for(&mut self, k_eq: f64) -> Result<AdmittanceGains> {
        if self.gain_hold && self.state.phase != Phase::Approach {
            if let Some(g) = self.held_gains {
                return Ok(g);
            }
            let g = schedule_gains(&self.spec, k_eq)?;
            self.held_gains = Some(g);
            return Ok(g);
        }
        schedule_gains(&self.spec, k_eq)
    }

    /// One force-loop tick: phase update, normal admittance, tangential
    /// tracking, then resolution to joint rates at the commanded pose `q`.
    pub fn tick(&mut self, reading: &SensorReading, q: JointState, t: f64) -> Result<ControlOutput> {
        let mut reading = *reading;
        if let Some(lp) = &mut self.lowpass {
            reading.f_n = lp.filter(reading.f_n);
        }

        let state = std::mem::replace(&mut self.state, ControllerState::new(Phase::Approach));
        self.state = phase_update(state, &reading, &self.setpoint, &self.config, self.dt);
        if self.state.phase == Phase::Sweep && self.state.sweep_origin.is_none() {
            self.state.sweep_origin = Some(SweepOrigin {
                t,
                y: forward_kinematics(q).y,
            });
        }

        let k_eq = equivalent_stiffness(&self.stiffness, q)?;
        let mut gains = self.gains_for(k_eq)?;

        let (v_n, v_t) = match self.state.phase {
            Phase::Approach => (-self.config.v_approach, 0.0),
            Phase::Stabilize => (self.admittance(&mut gains, reading.f_n)?, 0.0),
            Phase::Sweep => {
                let v_n = self.admittance(&mut gains, reading.f_n)?;
                (v_n, self.sweep_velocity(t))
            }
        };
        self.state.v_n = v_n;
        self.state.v_t = v_t;

        let task = CartesianVelocity::new(
            v_n * SURFACE_NORMAL[0] + v_t * SURFACE_TANGENT[0],
            v_n * SURFACE_NORMAL[1] + v_t * SURFACE_TANGENT[1],
        );
        let rr = resolved_rate(q, task, &self.robot)?;
        Ok(ControlOutput {
            qdot: rr.qdot,
            phase: self.state.phase,
            v_n,
            v_t,
            k_eq,
            gains,
            saturated: rr.saturated,
        })
    }

    fn admittance(&self, gains: &mut AdmittanceGains, f_n: f64) -> Result<f64> {
        let mut g = *gains;
        if self.flip_sign {
            g.k_f = -g.k_f;
        }
        admittance_step(&g, self.state.v_n, f_n, self.setpoint.f_des, self.dt)
    }

    fn sweep_velocity(&self, t: f64) -> f64 {
        let (Some(origin), Some(est)) = (self.state.sweep_origin, self.estimate) else {
            return 0.0;
        };
        tangential_velocity(
            &self.trajectory,
            self.setpoint.k_p,
            est.y - origin.y,
            est.t - origin.t,
            t - origin.t,
        )
    }
}

/// Free-function form of [`Controller::tick`] for callers that keep the
/// controller by value.
pub fn controller_tick(
    mut controller: Controller,
    reading: &SensorReading,
    q: JointState,
    t: f64,
) -> Result<(Controller, ControlOutput)> {
    let out = controller.tick(reading, q, t)?;
    Ok((controller, out))
}

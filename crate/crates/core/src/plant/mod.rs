//! Quasi-static simulated world.
//!
//! The arm has no inertia: joint rates are integrated directly and the
//! contact force is an algebraic function of how far the nominal (rigid)
//! tip has been driven past the wall, through the series stiffness of
//! [`crate::compliance`]. The wall is the plane `x = wall_x` with outward
//! normal `-x̂`; forces are reported negative in compression.

mod friction;
mod timeline;

pub use friction::{FrictionParams, PadFriction, RESTICK_SPEED};
pub use timeline::{run_timeline, ForceTick, LoopCallbacks, PositionEstimate, TickInfo, TimelineError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compliance::{equivalent_stiffness, StiffnessModel};
use crate::error::{invalid, Result};
use crate::model::{forward_kinematics, JointState, JointVelocity, RobotParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldModel {
    /// Wall plane position along x (m).
    pub wall_x: f64,
    pub mu_s: f64,
    pub mu_k: f64,
    /// Fraction of the stick-phase tangential load that leaks into the
    /// normal force reading.
    pub stiction_coupling: f64,
    /// Lateral wrist spring carrying the pad (N/m).
    pub wrist_lateral_stiffness: f64,
    /// Slip distance over which the stick transient decays by 1/e (m).
    pub slip_decay_length: f64,
    /// Force sensor noise standard deviation (N).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for WorldModel {
    fn default() -> Self {
        Self {
            wall_x: 0.15,
            mu_s: 0.4,
            mu_k: 0.3,
            stiction_coupling: 0.1,
            wrist_lateral_stiffness: 500.0,
            slip_decay_length: 0.005,
            noise_sigma: 0.02,
            seed: 42,
        }
    }
}

impl WorldModel {
    pub fn validate(&self) -> Result<()> {
        if !self.wall_x.is_finite() {
            return Err(invalid("world.wall_x", "must be finite"));
        }
        if !(self.mu_k >= 0.0 && self.mu_s >= self.mu_k) {
            return Err(invalid("world.mu_s", "requires mu_s >= mu_k >= 0"));
        }
        if !(0.0..=1.0).contains(&self.stiction_coupling) {
            return Err(invalid("world.stiction_coupling", "must lie in [0, 1]"));
        }
        if !(self.wrist_lateral_stiffness > 0.0) {
            return Err(invalid("world.wrist_lateral_stiffness", "must be > 0"));
        }
        if !(self.slip_decay_length >= 0.0) {
            return Err(invalid("world.slip_decay_length", "must be >= 0"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(invalid("world.noise_sigma", "must be >= 0"));
        }
        Ok(())
    }

    fn friction_params(&self) -> FrictionParams {
        FrictionParams {
            mu_s: self.mu_s,
            mu_k: self.mu_k,
            k_w: self.wrist_lateral_stiffness,
            decay_length: self.slip_decay_length,
        }
    }
}

/// Periods of the plant, force and trajectory loops (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopTiming {
    pub dt_plant: f64,
    pub dt_force: f64,
    pub dt_traj: f64,
}

impl Default for LoopTiming {
    fn default() -> Self {
        Self {
            dt_plant: 5e-4,
            dt_force: 2e-3,
            dt_traj: 0.1,
        }
    }
}

impl LoopTiming {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_plant > 0.0 && self.dt_plant.is_finite()) {
            return Err(invalid("timing.dt_plant", "must be > 0"));
        }
        if !(self.dt_plant <= self.dt_force && self.dt_force <= self.dt_traj) {
            return Err(invalid("timing.dt_force", "requires dt_plant <= dt_force <= dt_traj"));
        }
        ticks_per(self.dt_force, self.dt_plant)
            .ok_or_else(|| invalid("timing.dt_force", "must be an integer multiple of dt_plant"))?;
        ticks_per(self.dt_traj, self.dt_plant)
            .ok_or_else(|| invalid("timing.dt_traj", "must be an integer multiple of dt_plant"))?;
        Ok(())
    }

    /// Plant ticks per force-loop period.
    pub fn force_every(&self) -> usize {
        ticks_per(self.dt_force, self.dt_plant).unwrap_or(1)
    }

    /// Plant ticks per trajectory-loop period.
    pub fn traj_every(&self) -> usize {
        ticks_per(self.dt_traj, self.dt_plant).unwrap_or(1)
    }
}

fn ticks_per(period: f64, base: f64) -> Option<usize> {
    let ratio = period / base;
    let n = ratio.round();
    (n >= 1.0 && (ratio - n).abs() < 1e-6).then_some(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorReading {
    /// Normal force (N), negative in compression.
    pub f_n: f64,
    /// Tangential force (N).
    pub f_t: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub q_nominal: JointState,
    pub t: f64,
    pub sticking: bool,
    pub stick_anchor_y: f64,
    pub in_contact: bool,
}

/// Flags raised by a plant step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepFlags {
    pub joint_limit_hit: bool,
}

/// Ideal (noise-free) normal force for the nominal pose, negative in
/// compression. Zero when the nominal tip has not reached the wall.
pub fn contact_force(q_nominal: JointState, world: &WorldModel, stiffness: &StiffnessModel) -> Result<f64> {
    let clearance = world.wall_x - forward_kinematics(q_nominal).x;
    if clearance >= 0.0 {
        return Ok(0.0);
    }
    Ok(equivalent_stiffness(stiffness, q_nominal)? * clearance)
}

/// The simulated arm, wall, pad and force sensor.
#[derive(Debug, Clone)]
pub struct Plant {
    world: WorldModel,
    stiffness: StiffnessModel,
    robot: RobotParams,
    friction_enabled: bool,
    state: PlantState,
    pad: PadFriction,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    reading: SensorReading,
}

impl Plant {
    pub fn new(world: WorldModel, stiffness: StiffnessModel, robot: RobotParams, q0: JointState) -> Result<Self> {
        Self::with_friction(world, stiffness, robot, q0, true)
    }

    /// Like [`Plant::new`]; `friction = false` removes stick-slip and its
    /// coupling into the normal reading.
    pub fn with_friction(
        world: WorldModel,
        stiffness: StiffnessModel,
        robot: RobotParams,
        q0: JointState,
        friction: bool,
    ) -> Result<Self> {
        world.validate()?;
        stiffness.validate()?;
        robot.validate()?;
        let noise = (world.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, world.noise_sigma).expect("sigma checked finite and positive"));
        let rng = ChaCha8Rng::seed_from_u64(world.seed);
        let pad = PadFriction::new(world.friction_params());
        let (q0, _) = robot.clamp_joints(q0);
        let mut plant = Self {
            world,
            stiffness,
            robot,
            friction_enabled: friction,
            state: PlantState {
                q_nominal: q0,
                t: 0.0,
                sticking: false,
                stick_anchor_y: 0.0,
                in_contact: false,
            },
            pad,
            noise,
            rng,
            reading: SensorReading::default(),
        };
        plant.reading = plant.sense(0.0)?;
        Ok(plant)
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    /// Most recent sensor reading.
    pub fn reading(&self) -> SensorReading {
        self.reading
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    /// Integrates `qdot` over `dt`, clamps to joint limits and samples the
    /// force sensor at the new pose.
    pub fn step(&mut self, qdot: JointVelocity, dt: f64) -> Result<(SensorReading, StepFlags)> {
        let q = self.state.q_nominal;
        let y_before = forward_kinematics(q).y;
        let moved = JointState {
            theta1: q.theta1 + qdot.theta1_dot * dt,
            d2: q.d2 + qdot.d2_dot * dt,
        };
        let (q_next, joint_limit_hit) = self.robot.clamp_joints(moved);
        self.state.q_nominal = q_next;
        self.state.t += dt;
        let y_rate = (forward_kinematics(q_next).y - y_before) / dt;
        self.reading = self.sense(y_rate)?;
        Ok((self.reading, StepFlags { joint_limit_hit }))
    }

    fn sense(&mut self, y_rate: f64) -> Result<SensorReading> {
        let q = self.state.q_nominal;
        let ideal = contact_force(q, &self.world, &self.stiffness)?;
        let in_contact = ideal < 0.0;
        self.state.in_contact = in_contact;

        let mut f_n = ideal;
        let mut f_t = 0.0;
        if self.friction_enabled {
            let load = in_contact.then_some(-ideal);
            f_t = self.pad.update(load, forward_kinematics(q).y, y_rate);
            f_n += self.world.stiction_coupling * self.pad.transient();
            self.state.sticking = self.pad.sticking();
            self.state.stick_anchor_y = self.pad.anchor_y();
        }
        if let Some(noise) = &self.noise {
            f_n += noise.sample(&mut self.rng);
        }
        Ok(SensorReading {
            f_n,
            f_t,
            t: self.state.t,
        })
    }
}

/// Single plant step as a free function over an owned plant.
pub fn plant_step(mut plant: Plant, qdot: JointVelocity, dt: f64) -> Result<(Plant, SensorReading, StepFlags)> {
    let (reading, flags) = plant.step(qdot, dt)?;
    Ok((plant, reading, flags))
}

//! Fixed-order multi-rate loop.
//!
//! Every plant tick runs, in order: the trajectory callback (on trajectory
//! boundaries), the force callback (on force boundaries), then one plant
//! step with the latched joint command. Time is `tick * dt_plant`, never
//! accumulated, so two runs with the same inputs are bit-identical.

use std::fmt;

use super::{LoopTiming, Plant, SensorReading};
use crate::error::SimError;
use crate::model::{forward_kinematics, JointState, JointVelocity};

/// Tip position as reported to the trajectory loop, with the time it was
/// sampled. Arrives one trajectory period late.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// Inputs handed to the force callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickInfo {
    pub t: f64,
    pub reading: SensorReading,
    pub q: JointState,
    /// Whether the last plant step hit a joint limit.
    pub joint_limit_hit: bool,
}

/// Output of the force callback.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTick<R> {
    pub qdot: JointVelocity,
    pub record: R,
    /// Ends the run after this tick's record is stored.
    pub stop: bool,
}

pub trait LoopCallbacks {
    type Record;

    fn on_trajectory_tick(&mut self, estimate: PositionEstimate);

    fn on_force_tick(&mut self, tick: &TickInfo) -> Result<ForceTick<Self::Record>, SimError>;
}

/// A run that ended on an error, with everything recorded up to it.
#[derive(Debug, Clone)]
pub struct TimelineError<R> {
    pub source: SimError,
    pub records: Vec<R>,
}

impl<R> fmt::Display for TimelineError<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} samples)", self.source, self.records.len())
    }
}

impl<R: fmt::Debug> std::error::Error for TimelineError<R> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Runs `plant` for `duration` seconds under `callbacks`. Returns one record
/// per force-loop tick.
pub fn run_timeline<C: LoopCallbacks>(
    duration: f64,
    timing: &LoopTiming,
    callbacks: &mut C,
    plant: &mut Plant,
) -> Result<Vec<C::Record>, TimelineError<C::Record>> {
    let mut records = Vec::new();
    if let Err(source) = timing.validate() {
        return Err(TimelineError { source, records });
    }
    let force_every = timing.force_every();
    let traj_every = timing.traj_every();
    let total = (duration / timing.dt_plant).round().max(0.0) as usize;

    let mut cmd = JointVelocity::ZERO;
    let mut limit_hit = false;
    let mut pending: Option<PositionEstimate> = None;

    for tick in 0..total {
        let t = tick as f64 * timing.dt_plant;
        let q = plant.state().q_nominal;

        if tick % traj_every == 0 {
            let p = forward_kinematics(q);
            let fresh = PositionEstimate { x: p.x, y: p.y, t };
            callbacks.on_trajectory_tick(pending.unwrap_or(fresh));
            pending = Some(fresh);
        }

        if tick % force_every == 0 {
            let info = TickInfo {
                t,
                reading: plant.reading(),
                q,
                joint_limit_hit: limit_hit,
            };
            match callbacks.on_force_tick(&info) {
                Ok(out) => {
                    cmd = out.qdot;
                    records.push(out.record);
                    if out.stop {
                        break;
                    }
                }
                Err(source) => return Err(TimelineError { source, records }),
            }
        }

        match plant.step(cmd, timing.dt_plant) {
            Ok((_, flags)) => limit_hit = flags.joint_limit_hit,
            Err(source) => return Err(TimelineError { source, records }),
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compliance::StiffnessModel;
    use crate::model::RobotParams;
    use crate::plant::WorldModel;

    struct Probe {
        estimates: Vec<PositionEstimate>,
        qdot: JointVelocity,
        stop_after: Option<usize>,
        ticks: usize,
    }

    impl LoopCallbacks for Probe {
        type Record = (f64, f64, JointState);

        fn on_trajectory_tick(&mut self, estimate: PositionEstimate) {
            self.estimates.push(estimate);
        }

        fn on_force_tick(&mut self, tick: &TickInfo) -> Result<ForceTick<Self::Record>, SimError> {
            self.ticks += 1;
            Ok(ForceTick {
                qdot: self.qdot,
                record: (tick.t, tick.reading.f_n, tick.q),
                stop: self.stop_after == Some(self.ticks),
            })
        }
    }

    fn probe(qdot: JointVelocity) -> Probe {
        Probe {
            estimates: Vec::new(),
            qdot,
            stop_after: None,
            ticks: 0,
        }
    }

    fn in_contact_plant() -> Plant {
        let world = WorldModel {
            wall_x: 0.148,
            noise_sigma: 0.0,
            ..WorldModel::default()
        };
        Plant::new(
            world,
            StiffnessModel::default(),
            RobotParams::default(),
            JointState::new(1.047, 0.3),
        )
        .unwrap()
    }

    #[test]
    fn one_record_per_force_tick() {
        let mut plant = in_contact_plant();
        let mut cb = probe(JointVelocity::ZERO);
        let out = run_timeline(1.0, &LoopTiming::default(), &mut cb, &mut plant).unwrap();
        assert_eq!(out.len(), 500);
        assert_eq!(cb.estimates.len(), 10);
        assert!(out.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn zero_command_leaves_state_and_force_unchanged() {
        let mut plant = in_contact_plant();
        let q0 = plant.state().q_nominal;
        let mut cb = probe(JointVelocity::ZERO);
        let out = run_timeline(0.5, &LoopTiming::default(), &mut cb, &mut plant).unwrap();
        assert!(out[0].1 < 0.0);
        assert!(out.iter().all(|r| r.1 == out[0].1 && r.2 == q0));
    }

    #[test]
    fn estimates_arrive_one_period_late() {
        let mut plant = in_contact_plant();
        let mut cb = probe(JointVelocity::new(0.0, 0.01));
        run_timeline(0.35, &LoopTiming::default(), &mut cb, &mut plant).unwrap();
        let times: Vec<f64> = cb.estimates.iter().map(|e| e.t).collect();
        assert_eq!(times, vec![0.0, 0.0, 0.1, 0.2]);
    }

    #[test]
    fn stop_request_ends_run() {
        let mut plant = in_contact_plant();
        let mut cb = probe(JointVelocity::ZERO);
        cb.stop_after = Some(7);
        let out = run_timeline(1.0, &LoopTiming::default(), &mut cb, &mut plant).unwrap();
        assert_eq!(out.len(), 7);
    }

    #[test]
    fn callback_errors_keep_partial_records() {
        struct Failing(usize);
        impl LoopCallbacks for Failing {
            type Record = usize;
            fn on_trajectory_tick(&mut self, _: PositionEstimate) {}
            fn on_force_tick(&mut self, _: &TickInfo) -> Result<ForceTick<usize>, SimError> {
                self.0 += 1;
                if self.0 > 3 {
                    return Err(SimError::SingularMatrix { det: 0.0 });
                }
                Ok(ForceTick {
                    qdot: JointVelocity::ZERO,
                    record: self.0,
                    stop: false,
                })
            }
        }
        let mut plant = in_contact_plant();
        let err = run_timeline(1.0, &LoopTiming::default(), &mut Failing(0), &mut plant).unwrap_err();
        assert_eq!(err.records, vec![1, 2, 3]);
        assert!(matches!(err.source, SimError::SingularMatrix { .. }));
    }
}

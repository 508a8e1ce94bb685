//! Scenario assembly, execution, metrics and artifacts.

mod config;
mod fit;
mod metrics;
mod stability;
mod trace;
pub mod verify;

use std::fmt;
use std::path::Path;

pub use config::{ConfigError, ScenarioConfig, Toggles};
pub use fit::{fit_second_order, fit_step_response, rise_ratio, unit_step, FitMethod, FitQuality, SecondOrderFit};
pub use metrics::{rms_force_error, PhaseBoundaries, RunSummary, STEADY_WINDOW};
pub use stability::{closed_loop_matrix, spectral_radius, stability_bound, DtScan, StabilityBound};
pub use trace::{fmt_sig9, Trace, TraceSample, CSV_HEADER};

use crate::compliance::equivalent_stiffness;
use crate::control::{schedule_gains, Controller};
use crate::error::SimError;
use crate::model::forward_kinematics;
use crate::plant::{run_timeline, ForceTick, LoopCallbacks, Plant, PositionEstimate, TickInfo, WorldModel};

/// Joint limits held continuously for this long count as divergence (s).
const PINNED_LIMIT: f64 = 1.0;
/// Force magnitude, in multiples of |f_des|, that counts as divergence.
const FORCE_BLOWUP: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Negates the admittance force gain. Mutation testing only.
    pub inject_sign_flip: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: RunSummary,
}

impl RunOutput {
    /// Writes `trace.csv` and `summary.json` into `dir`, creating it.
    pub fn write_artifacts(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trace.csv"), self.trace.to_csv())?;
        std::fs::write(dir.join("summary.json"), self.summary.to_json_pretty() + "\n")?;
        Ok(())
    }
}

/// A run stopped by a model error other than divergence, with the trace so
/// far.
#[derive(Debug, Clone)]
pub struct ScenarioError {
    pub source: SimError,
    pub partial: Trace,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} samples)", self.source, self.partial.len())
    }
}

impl std::error::Error for ScenarioError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

struct ScenarioLoop {
    controller: Controller,
    config: ScenarioConfig,
    divergence: Option<String>,
    pinned_since: Option<f64>,
}

impl ScenarioLoop {
    fn check_divergence(&mut self, info: &TickInfo) -> Option<String> {
        let f_n = info.reading.f_n;
        let limit = FORCE_BLOWUP * self.config.setpoint.f_des.abs();
        if !f_n.is_finite() || !info.q.is_finite() {
            return Some(format!("non-finite state at t = {:.4}", info.t));
        }
        if f_n.abs() > limit {
            return Some(format!(
                "|f_n| = {:.3} N exceeds {limit:.3} N at t = {:.4}",
                f_n.abs(),
                info.t
            ));
        }
        if info.joint_limit_hit {
            let since = *self.pinned_since.get_or_insert(info.t);
            if info.t - since > PINNED_LIMIT {
                return Some(format!("joint limits pinned since t = {since:.4}"));
            }
        } else {
            self.pinned_since = None;
        }
        None
    }
}

impl LoopCallbacks for ScenarioLoop {
    type Record = TraceSample;

    fn on_trajectory_tick(&mut self, estimate: PositionEstimate) {
        self.controller.update_estimate(estimate);
    }

    fn on_force_tick(&mut self, info: &TickInfo) -> Result<ForceTick<TraceSample>, SimError> {
        let tip = forward_kinematics(info.q);
        let mut sample = TraceSample {
            t: info.t,
            phase: self.controller.state().phase,
            theta1: info.q.theta1,
            d2: info.q.d2,
            x: tip.x,
            y: tip.y,
            f_n: info.reading.f_n,
            f_t: info.reading.f_t,
            v_n_cmd: 0.0,
            v_t_cmd: 0.0,
            k_eq: 0.0,
            k_f: 0.0,
            b: 0.0,
        };
        let mut qdot = Default::default();
        match self.controller.tick(&info.reading, info.q, info.t) {
            Ok(out) => {
                sample.phase = out.phase;
                sample.v_n_cmd = out.v_n;
                sample.v_t_cmd = out.v_t;
                sample.k_eq = out.k_eq;
                sample.k_f = out.gains.k_f;
                sample.b = out.gains.b;
                qdot = out.qdot;
            }
            // The period admits no stable admittance update at all.
            Err(e @ SimError::UnstableTimestep { .. }) => {
                let k_eq = equivalent_stiffness(&self.config.stiffness, info.q)?;
                let g = schedule_gains(&self.config.spec, k_eq)?;
                sample.phase = self.controller.state().phase;
                sample.k_eq = k_eq;
                sample.k_f = g.k_f;
                sample.b = g.b;
                self.divergence = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
        if self.divergence.is_none() {
            self.divergence = self.check_divergence(info);
        }
        Ok(ForceTick {
            qdot,
            record: sample,
            stop: self.divergence.is_some(),
        })
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    run_scenario_with(config, RunOptions::default())
}

pub fn run_scenario_with(config: &ScenarioConfig, options: RunOptions) -> Result<RunOutput, ScenarioError> {
    let fail = |source| ScenarioError {
        source,
        partial: Trace::default(),
    };
    config.validate().map_err(fail)?;

    let world = WorldModel {
        noise_sigma: if config.toggles.noise {
            config.world.noise_sigma
        } else {
            0.0
        },
        ..config.world.clone()
    };
    let mut plant = Plant::with_friction(
        world,
        config.stiffness,
        config.robot.clone(),
        config.q0,
        config.toggles.stiction,
    )
    .map_err(fail)?;

    let mut controller = Controller::new(
        config.spec,
        config.setpoint.clone(),
        config.control.clone(),
        config.stiffness,
        config.robot.clone(),
        config.timing.dt_force,
    )
    .map_err(fail)?
    .with_gain_hold(config.toggles.gain_hold)
    .with_lowpass(config.toggles.lowpass_cutoff);
    if options.inject_sign_flip {
        controller = controller.inject_sign_flip();
    }

    let mut callbacks = ScenarioLoop {
        controller,
        config: config.clone(),
        divergence: None,
        pinned_since: None,
    };
    let samples =
        run_timeline(config.duration, &config.timing, &mut callbacks, &mut plant).map_err(|e| ScenarioError {
            source: e.source,
            partial: Trace::new(e.records),
        })?;
    let trace = Trace::new(samples);
    let summary = RunSummary::from_trace(&trace, config.setpoint.f_des, config.world.seed, callbacks.divergence);
    Ok(RunOutput { trace, summary })
}

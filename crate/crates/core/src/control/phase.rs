//! Approach / stabilize / sweep protocol.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::trajectory::ControlSetpoint;
use crate::error::{invalid, Result};
use crate::plant::SensorReading;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Approach,
    Stabilize,
    Sweep,
}

impl Phase {
    pub fn token(&self) -> &'static str {
        match self {
            Phase::Approach => "approach",
            Phase::Stabilize => "stabilize",
            Phase::Sweep => "sweep",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "approach" => Some(Phase::Approach),
            "stabilize" => Some(Phase::Stabilize),
            "sweep" => Some(Phase::Sweep),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Thresholds and speeds of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// Approach speed toward the wall (m/s).
    pub v_approach: f64,
    /// Contact detection threshold on |f_n| (N).
    pub f_thresh: f64,
    /// Consecutive over-threshold readings to declare contact.
    pub n_consecutive: u32,
    /// Force band around f_des that counts as settled (N).
    pub eps_f: f64,
    /// Time the force must stay in band before sweeping (s).
    pub t_hold: f64,
    /// Phase the controller starts in. `stabilize` starts regulating at
    /// once, for runs that begin on the surface.
    pub initial_phase: Phase,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            v_approach: 0.02,
            f_thresh: 0.3,
            n_consecutive: 5,
            eps_f: 0.1,
            t_hold: 0.5,
            initial_phase: Phase::Approach,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_approach > 0.0) {
            return Err(invalid("control.v_approach", "must be > 0"));
        }
        if !(self.f_thresh > 0.0) {
            return Err(invalid("control.f_thresh", "must be > 0"));
        }
        if self.n_consecutive == 0 {
            return Err(invalid("control.n_consecutive", "must be >= 1"));
        }
        if !(self.eps_f > 0.0) {
            return Err(invalid("control.eps_f", "must be > 0"));
        }
        if !(self.t_hold >= 0.0) {
            return Err(invalid("control.t_hold", "must be >= 0"));
        }
        if self.initial_phase == Phase::Sweep {
            return Err(invalid("control.initial_phase", "must be approach or stabilize"));
        }
        Ok(())
    }
}

/// Where and when the sweep started, in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOrigin {
    pub t: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub phase: Phase,
    /// Commanded normal velocity (m/s), positive away from the surface.
    pub v_n: f64,
    /// Commanded tangential velocity (m/s), positive up.
    pub v_t: f64,
    pub contact_counter: u32,
    /// Time the force error has stayed inside the band (s).
    pub hold_timer: f64,
    pub sweep_origin: Option<SweepOrigin>,
}

impl ControllerState {
    pub fn new(phase: Phase) -> Self {
        Self {
            phase,
            v_n: 0.0,
            v_t: 0.0,
            contact_counter: 0,
            hold_timer: 0.0,
            sweep_origin: None,
        }
    }
}

/// Counts consecutive readings above `f_thresh`. Fires exactly on the tick
/// the count reaches `n_consecutive`.
pub fn detect_contact(
    reading: &SensorReading,
    mut state: ControllerState,
    f_thresh: f64,
    n_consecutive: u32,
) -> (ControllerState, bool) {
    if reading.f_n.abs() > f_thresh {
        state.contact_counter = state.contact_counter.saturating_add(1);
    } else {
        state.contact_counter = 0;
    }
    let fired = state.contact_counter == n_consecutive;
    (state, fired)
}

/// Advances the phase machine by one force tick of length `dt`. Phases
/// only move forward.
pub fn phase_update(
    state: ControllerState,
    reading: &SensorReading,
    setpoint: &ControlSetpoint,
    config: &ControlConfig,
    dt: f64,
) -> ControllerState {
    match state.phase {
        Phase::Approach => {
            let (mut state, fired) = detect_contact(reading, state, config.f_thresh, config.n_consecutive);
            if fired {
                state.phase = Phase::Stabilize;
                state.v_n = -config.v_approach;
                state.hold_timer = 0.0;
            }
            state
        }
        Phase::Stabilize => {
            let mut state = state;
            if (setpoint.f_des - reading.f_n).abs() < config.eps_f {
                state.hold_timer += dt;
            } else {
                state.hold_timer = 0.0;
            }
            if state.hold_timer >= config.t_hold - 1e-9 {
                state.phase = Phase::Sweep;
            }
            state
        }
        Phase::Sweep => state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(f_n: f64) -> SensorReading {
        SensorReading { f_n, f_t: 0.0, t: 0.0 }
    }

    #[test]
    fn below_threshold_resets() {
        let mut s = ControllerState::new(Phase::Approach);
        s.contact_counter = 3;
        let (s, fired) = detect_contact(&reading(-0.1), s, 0.3, 5);
        assert!(!fired);
        assert_eq!(s.contact_counter, 0);
    }

    #[test]
    fn fires_on_fifth_consecutive() {
        let mut s = ControllerState::new(Phase::Approach);
        for i in 1..=5 {
            let (next, fired) = detect_contact(&reading(-0.5), s, 0.3, 5);
            assert_eq!(fired, i == 5);
            s = next;
        }
    }

    #[test]
    fn alternating_never_fires() {
        let mut s = ControllerState::new(Phase::Approach);
        for i in 0..100 {
            let f = if i % 2 == 0 { -0.5 } else { -0.1 };
            let (next, fired) = detect_contact(&reading(f), s, 0.3, 5);
            assert!(!fired);
            s = next;
        }
    }

    #[test]
    fn contact_moves_to_stabilize_with_approach_velocity() {
        let cfg = ControlConfig::default();
        let sp = ControlSetpoint::default();
        let mut s = ControllerState::new(Phase::Approach);
        for _ in 0..5 {
            s = phase_update(s, &reading(-0.5), &sp, &cfg, 0.002);
        }
        assert_eq!(s.phase, Phase::Stabilize);
        assert_eq!(s.v_n, -cfg.v_approach);
    }

    #[test]
    fn settled_band_for_hold_time_starts_sweep() {
        let cfg = ControlConfig::default();
        let sp = ControlSetpoint::default();
        let mut s = ControllerState::new(Phase::Stabilize);
        let ticks = (cfg.t_hold / 0.002).round() as usize;
        for i in 1..=ticks {
            s = phase_update(s, &reading(-2.05), &sp, &cfg, 0.002);
            assert_eq!(s.phase == Phase::Sweep, i == ticks, "tick {i}");
        }
    }

    #[test]
    fn excursion_resets_hold_timer() {
        let cfg = ControlConfig::default();
        let sp = ControlSetpoint::default();
        let mut s = ControllerState::new(Phase::Stabilize);
        for _ in 0..200 {
            s = phase_update(s, &reading(-2.0), &sp, &cfg, 0.002);
        }
        assert!((s.hold_timer - 0.4).abs() < 1e-9);
        s = phase_update(s, &reading(-1.5), &sp, &cfg, 0.002);
        assert_eq!(s.hold_timer, 0.0);
        for _ in 0..200 {
            s = phase_update(s, &reading(-2.0), &sp, &cfg, 0.002);
        }
        assert_eq!(s.phase, Phase::Stabilize);
    }

    #[test]
    fn sweep_is_terminal() {
        let cfg = ControlConfig::default();
        let sp = ControlSetpoint::default();
        let s = phase_update(ControllerState::new(Phase::Sweep), &reading(0.0), &sp, &cfg, 0.002);
        assert_eq!(s.phase, Phase::Sweep);
    }
}

//! Force-regulation metrics over a trace.

use serde::{Deserialize, Serialize};

use super::trace::Trace;
use crate::control::Phase;
use crate::error::{Result, SimError};

/// Window at the end of a run averaged for the steady-state error (s).
pub const STEADY_WINDOW: f64 = 0.25;

/// RMS of `f_n - f_des` over samples with `t >= from_t`.
pub fn rms_force_error(trace: &Trace, f_des: f64, from_t: f64) -> Result<f64> {
    let (sum, n) = trace
        .samples
        .iter()
        .filter(|s| s.t >= from_t)
        .fold((0.0, 0usize), |(acc, n), s| {
            let e = s.f_n - f_des;
            (acc + e * e, n + 1)
        });
    if n == 0 {
        return Err(SimError::EmptyWindow { from_t });
    }
    Ok((sum / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    pub t_contact: Option<f64>,
    pub t_sweep: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// RMS |f_n - f_des| from the contact tick to the end (N).
    pub rms_force_error_after_contact: Option<f64>,
    /// Largest compression beyond f_des after contact (N, >= 0).
    pub max_overshoot: Option<f64>,
    /// Stabilize entry to sweep entry (s).
    pub settle_time: Option<f64>,
    /// RMS force error during the sweep (N).
    pub sweep_force_rms: Option<f64>,
    /// |mean f_n - f_des| over the final window while in contact (N).
    pub steady_state_error: Option<f64>,
    pub d2_range: (f64, f64),
    pub phase_boundaries: PhaseBoundaries,
    pub diverged: bool,
    pub divergence_reason: Option<String>,
    /// Too few post-contact samples to compute the force metrics.
    pub insufficient_contact_window: bool,
    pub f_des: f64,
    pub seed: u64,
    pub samples: usize,
}

impl RunSummary {
    pub fn from_trace(trace: &Trace, f_des: f64, seed: u64, divergence: Option<String>) -> Self {
        let t_contact = trace.contact_time();
        let t_sweep = trace.phase_start(Phase::Sweep);
        let after: Vec<_> = match t_contact {
            Some(tc) => trace.samples.iter().filter(|s| s.t >= tc).collect(),
            None => Vec::new(),
        };
        let insufficient = after.len() < 2;

        let rms = t_contact
            .filter(|_| !insufficient)
            .and_then(|tc| rms_force_error(trace, f_des, tc).ok());
        let max_overshoot = (!insufficient).then(|| after.iter().map(|s| f_des - s.f_n).fold(0.0_f64, f64::max));
        let sweep_force_rms = t_sweep.and_then(|ts| rms_force_error(trace, f_des, ts).ok());

        let steady_state_error = trace.samples.last().and_then(|last| {
            let tail: Vec<f64> = after
                .iter()
                .filter(|s| s.t >= last.t - STEADY_WINDOW)
                .map(|s| s.f_n)
                .collect();
            (!tail.is_empty() && !insufficient).then(|| (tail.iter().sum::<f64>() / tail.len() as f64 - f_des).abs())
        });

        let d2_range = trace
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.d2), hi.max(s.d2))
            });
        let d2_range = if trace.is_empty() { (0.0, 0.0) } else { d2_range };

        Self {
            rms_force_error_after_contact: rms,
            max_overshoot,
            settle_time: t_contact.zip(t_sweep).map(|(c, s)| s - c),
            sweep_force_rms,
            steady_state_error,
            d2_range,
            phase_boundaries: PhaseBoundaries { t_contact, t_sweep },
            diverged: divergence.is_some(),
            divergence_reason: divergence,
            insufficient_contact_window: insufficient,
            f_des,
            seed,
            samples: trace.len(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

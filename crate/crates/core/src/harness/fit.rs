//! Second-order identification of a force-error transient.
//!
//! The error is assumed to start at rest and decay to zero, so
//! `y = 1 - e/e0` is a unit step response. An underdamped response is
//! fitted from its first overshoot; otherwise the 10/50/90 % crossing times
//! are matched against the analytic step response.

use serde::{Deserialize, Serialize};

use super::trace::Trace;
use crate::error::{Result, SimError};

/// Overshoot below this counts as non-oscillatory.
const OVERSHOOT_MIN: f64 = 0.02;
const MIN_SAMPLES: usize = 10;
/// Residual RMS (in units of the step) above which a fit is flagged poor.
const GOOD_RESIDUAL: f64 = 0.05;
const ETA_RANGE: (f64, f64) = (0.05, 8.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LogDecrement,
    RiseTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitQuality {
    Good,
    Poor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderFit {
    pub omega_n: f64,
    pub eta: f64,
    pub method: FitMethod,
    pub quality: FitQuality,
    /// RMS misfit of the normalized response.
    pub residual: f64,
}

/// Unit step response of `ωn² / (s² + 2ηωn s + ωn²)` at normalized time
/// `tau = ωn t`.
pub fn unit_step(eta: f64, tau: f64) -> f64 {
    if (eta - 1.0).abs() < 1e-6 {
        1.0 - (1.0 + tau) * (-tau).exp()
    } else if eta < 1.0 {
        let wd = (1.0 - eta * eta).sqrt();
        1.0 - (-eta * tau).exp() * ((wd * tau).cos() + eta / wd * (wd * tau).sin())
    } else {
        let s = (eta * eta - 1.0).sqrt();
        let (r1, r2) = (-eta + s, -eta - s);
        1.0 + (r2 * (r1 * tau).exp() - r1 * (r2 * tau).exp()) / (r1 - r2)
    }
}

/// First normalized time the unit step response reaches `level`.
fn step_crossing(eta: f64, level: f64) -> f64 {
    let h = 0.01;
    let mut lo = 0.0;
    let mut hi = h;
    while unit_step(eta, hi) < level {
        lo = hi;
        hi += h;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if unit_step(eta, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Shape ratio `(t90 - t10) / t50`, increasing in `eta`.
pub fn rise_ratio(eta: f64) -> f64 {
    (step_crossing(eta, 0.9) - step_crossing(eta, 0.1)) / step_crossing(eta, 0.5)
}

fn data_crossing(t: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let i = y.iter().position(|&v| v >= level)?;
    if i == 0 {
        return Some(t[0]);
    }
    let (y0, y1) = (y[i - 1], y[i]);
    Some(t[i - 1] + (level - y0) / (y1 - y0) * (t[i] - t[i - 1]))
}

/// Fits `(ωn, η)` to error samples `e(t)` that start at rest at `e[0]` and
/// settle to zero.
pub fn fit_step_response(t: &[f64], e: &[f64]) -> Result<SecondOrderFit> {
    if t.len() != e.len() {
        return Err(SimError::FitFailed("time and error lengths differ".into()));
    }
    if t.len() < MIN_SAMPLES {
        return Err(SimError::FitFailed(format!("{} samples, need {MIN_SAMPLES}", t.len())));
    }
    let e0 = e[0];
    let peak_e = e.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(e0.abs() > 1e-9 && e0.abs() >= 1e-3 * peak_e) {
        return Err(SimError::FitFailed("no initial error to recover from".into()));
    }
    let tau: Vec<f64> = t.iter().map(|ti| ti - t[0]).collect();
    let y: Vec<f64> = e.iter().map(|ei| 1.0 - ei / e0).collect();

    let tail = &y[y.len() - (y.len() / 5).max(2)..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let tail_sd = (tail.iter().map(|v| (v - tail_mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
    if tail_sd > 0.1 || (tail_mean - 1.0).abs() > 0.2 {
        return Err(SimError::FitFailed(
            "transient buried in noise or not settled in the window".into(),
        ));
    }

    let (i_peak, &y_peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let overshoot = y_peak - 1.0;

    let (omega_n, eta, method) = if overshoot > OVERSHOOT_MIN && i_peak > 0 && i_peak + 1 < y.len() {
        let t_peak = refine_peak(&tau, &y, i_peak);
        let delta = (1.0 / overshoot).ln();
        let eta = delta / (std::f64::consts::PI.powi(2) + delta * delta).sqrt();
        let wd = std::f64::consts::PI / t_peak;
        (wd / (1.0 - eta * eta).sqrt(), eta, FitMethod::LogDecrement)
    } else {
        let cross =
            |l| data_crossing(&tau, &y, l).ok_or_else(|| SimError::FitFailed(format!("response never reaches {l}")));
        let (t10, t50, t90) = (cross(0.1)?, cross(0.5)?, cross(0.9)?);
        if !(t90 > t10 && t50 > 0.0) {
            return Err(SimError::FitFailed("transient too short to resolve".into()));
        }
        let r = (t90 - t10) / t50;
        let eta = invert_rise_ratio(r)?;
        let omega = (step_crossing(eta, 0.9) - step_crossing(eta, 0.1)) / (t90 - t10);
        (omega, eta, FitMethod::RiseTime)
    };

    let residual = (tau
        .iter()
        .zip(&y)
        .map(|(&ti, &yi)| (unit_step(eta, omega_n * ti) - yi).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt();
    Ok(SecondOrderFit {
        omega_n,
        eta,
        method,
        quality: if residual < GOOD_RESIDUAL {
            FitQuality::Good
        } else {
            FitQuality::Poor
        },
        residual,
    })
}

/// Vertex of the parabola through the peak and its neighbours.
fn refine_peak(t: &[f64], y: &[f64], i: usize) -> f64 {
    let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let h = 0.5 * (t[i + 1] - t[i - 1]);
    if denom.abs() < 1e-15 {
        return t[i];
    }
    t[i] + 0.5 * h * (ym - yp) / denom
}

fn invert_rise_ratio(r: f64) -> Result<f64> {
    let (mut lo, mut hi) = ETA_RANGE;
    if !(rise_ratio(lo) <= r && r <= rise_ratio(hi)) {
        return Err(SimError::FitFailed(format!(
            "rise-time ratio {r:.3} outside model range"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rise_ratio(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits the error `f_n - f_des` of the samples in `[window.0, window.1]`.
pub fn fit_second_order(trace: &Trace, f_des: f64, window: (f64, f64)) -> Result<SecondOrderFit> {
    let (t, e): (Vec<f64>, Vec<f64>) = trace
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, s.f_n - f_des))
        .unzip();
    fit_step_response(&t, &e)
}

//! Task-space stiffness seen at the wall.
//!
//! The arm's bending is lumped into a torsional spring `k_theta` at the pitch
//! joint. A small pitch deflection moves the tip along x by
//! `-d2 sin(theta1) dθ`, and a normal force `F_x` loads the joint with
//! `-F_x d2 sin(theta1)`, so the reflected normal stiffness is
//! `k_theta / (d2² sin²(theta1))`. That spring sits in series with the
//! contact stiffness `k_ee`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SimError};
use crate::model::JointState;

/// Minimum `sin(theta1)` for which the reflected stiffness is defined.
pub const SIN_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StiffnessModel {
    /// Lumped pitch-joint torsional stiffness (N·m/rad).
    pub k_theta: f64,
    /// Contact normal stiffness (N/m). `f64::INFINITY` means rigid contact.
    #[serde(with = "stiffness_value")]
    pub k_ee: f64,
}

impl Default for StiffnessModel {
    fn default() -> Self {
        Self {
            k_theta: 60.0,
            k_ee: 5000.0,
        }
    }
}

impl StiffnessModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_theta > 0.0 && self.k_theta.is_finite()) {
            return Err(invalid("stiffness.k_theta", "must be finite and > 0"));
        }
        if !(self.k_ee > 0.0) {
            return Err(invalid("stiffness.k_ee", "must be > 0 (or \"inf\")"));
        }
        Ok(())
    }
}

/// Reflected normal stiffness of the arm alone.
pub fn task_normal_stiffness(model: &StiffnessModel, q: JointState) -> Result<f64> {
    let s = q.theta1.sin();
    if s < SIN_EPS {
        return Err(SimError::NearSingularStiffness {
            sin_theta: s,
            sin_eps: SIN_EPS,
        });
    }
    let arm = q.d2 * s;
    Ok(model.k_theta / (arm * arm))
}

/// Two springs in series. An infinite operand drops out.
pub fn series_stiffness(k_a: f64, k_b: f64) -> Result<f64> {
    for k in [k_a, k_b] {
        if !(k > 0.0) {
            return Err(SimError::InvalidStiffness(k));
        }
    }
    Ok(match (k_a.is_infinite(), k_b.is_infinite()) {
        (true, true) => f64::INFINITY,
        (true, false) => k_b,
        (false, true) => k_a,
        (false, false) => (k_a * k_b) / (k_a + k_b),
    })
}

/// Stiffness relating normal penetration to contact force at pose `q`.
pub fn equivalent_stiffness(model: &StiffnessModel, q: JointState) -> Result<f64> {
    series_stiffness(task_normal_stiffness(model, q)?, model.k_ee)
}

/// Serializes infinite stiffness as the string `"inf"` since JSON has no
/// infinity literal.
pub(crate) mod stiffness_value {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => other
                    .parse::<f64>()
                    .map_err(|_| de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
            },
        }
    }
}

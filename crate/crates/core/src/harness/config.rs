//! Scenario configuration: JSON schema, defaults, dotted-path overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::compliance::StiffnessModel;
use crate::control::{AdmittanceSpec, ControlConfig, ControlSetpoint, Phase};
use crate::error::{invalid, Result as SimResult, SimError};
use crate::model::{JointState, RobotParams};
use crate::plant::{LoopTiming, WorldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub noise: bool,
    pub stiction: bool,
    /// Hold the gains scheduled at contact for the rest of the run.
    pub gain_hold: bool,
    /// Force low-pass cutoff (Hz); `null` disables filtering.
    pub lowpass_cutoff: Option<f64>,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            noise: true,
            stiction: true,
            gain_hold: false,
            lowpass_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub robot: RobotParams,
    pub stiffness: StiffnessModel,
    pub world: WorldModel,
    pub spec: AdmittanceSpec,
    pub setpoint: ControlSetpoint,
    pub control: ControlConfig,
    pub timing: LoopTiming,
    pub q0: JointState,
    /// Simulated time (s).
    pub duration: f64,
    pub toggles: Toggles,
}

/// Wall contact happens at a 0.3 m boom and 60° pitch; the run starts 1 cm
/// off the wall at the same height.
const CONTACT_D2: f64 = 0.3;
const CONTACT_PITCH_DEG: f64 = 60.0;
const STANDOFF: f64 = 0.01;

impl Default for ScenarioConfig {
    fn default() -> Self {
        let pitch = CONTACT_PITCH_DEG.to_radians();
        let wall_x = CONTACT_D2 * pitch.cos();
        let y = CONTACT_D2 * pitch.sin();
        // Sweep up until the boom reaches 1.0 m at the wall.
        let y_end = (1.0 - wall_x * wall_x).sqrt();
        Self {
            robot: RobotParams::default(),
            stiffness: StiffnessModel::default(),
            world: WorldModel {
                wall_x,
                ..WorldModel::default()
            },
            spec: AdmittanceSpec::default(),
            setpoint: ControlSetpoint {
                sweep_distance: ((y_end - y) * 1e4).round() / 1e4,
                ..ControlSetpoint::default()
            },
            control: ControlConfig::default(),
            timing: LoopTiming::default(),
            q0: JointState::from_endpoint(wall_x - STANDOFF, y),
            duration: 20.0,
            toggles: Toggles::default(),
        }
    }
}

impl ScenarioConfig {
    /// The bench trial: approach, stabilize at -2 N, sweep up while the
    /// boom extends from 0.3 m to 1.0 m.
    pub fn replica() -> Self {
        Self::default()
    }

    /// A run that starts at rest exactly on the wall and regulates without
    /// sweeping, with a constant task stiffness of `k_eq`. The boom stands
    /// vertical against a wall through the base, so normal motion leaves
    /// the moment arm (and thus the stiffness) unchanged.
    pub fn contact_step(k_eq: f64, spec: AdmittanceSpec) -> Self {
        let d2 = 0.5;
        Self {
            stiffness: StiffnessModel {
                k_theta: k_eq * d2 * d2,
                k_ee: f64::INFINITY,
            },
            world: WorldModel {
                wall_x: 0.0,
                ..WorldModel::default()
            },
            spec,
            setpoint: ControlSetpoint {
                sweep_distance: 0.0,
                ..ControlSetpoint::default()
            },
            control: ControlConfig {
                initial_phase: Phase::Stabilize,
                ..ControlConfig::default()
            },
            q0: JointState::new(std::f64::consts::FRAC_PI_2, d2),
            duration: 3.0,
            toggles: Toggles {
                noise: false,
                stiction: false,
                ..Toggles::default()
            },
            ..Self::default()
        }
    }

    pub fn quiet(mut self) -> Self {
        self.toggles.noise = false;
        self.toggles.stiction = false;
        self
    }

    pub fn validate(&self) -> SimResult<()> {
        self.robot.validate()?;
        self.stiffness.validate()?;
        self.world.validate()?;
        self.spec.validate()?;
        self.setpoint.validate()?;
        self.control.validate()?;
        self.timing.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", "must be > 0"));
        }
        if !self.q0.is_finite() {
            return Err(invalid("q0", "must be finite"));
        }
        if let Some(fc) = self.toggles.lowpass_cutoff {
            if !(fc > 0.0) {
                return Err(invalid("toggles.lowpass_cutoff", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_json_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides, then validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let parsed: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            key: path_or_none(e.path()),
            line: Some(e.inner().line()),
            message: e.inner().to_string(),
        })?;
        parsed.with_overrides(overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_with_overrides(&text, overrides)
    }

    /// Applies dotted-path overrides such as `spec.omega_n=5`. Keys must
    /// name existing fields; values parse as JSON, falling back to a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
            let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            set_path(&mut doc, key.trim(), value)?;
        }
        let cfg: Self = serde_path_to_error::deserialize(doc).map_err(|e| ConfigError::Parse {
            key: path_or_none(e.path()),
            line: None,
            message: e.inner().to_string(),
        })?;
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn path_or_none(path: &serde_path_to_error::Path) -> Option<String> {
    let s = path.to_string();
    (s != ".").then_some(s)
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = doc;
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|obj| obj.get_mut(part))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
    }
    *node = value;
    Ok(())
}

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },
    UnknownKey(String),
    BadOverride(String),
    Invalid(SimError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read config {}: {source}", path.display()),
            ConfigError::Parse { key, line, message } => {
                write!(f, "config error")?;
                if let Some(k) = key {
                    write!(f, " at `{k}`")?;
                }
                if let Some(l) = line {
                    write!(f, " (line {l})")?;
                }
                write!(f, ": {message}")
            }
            ConfigError::UnknownKey(k) => write!(f, "unknown config key `{k}`"),
            ConfigError::BadOverride(s) => write!(f, "override `{s}` is not of the form key=value"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Io { source, .. } => Some(source),
            ConfigError::Invalid(e) => Some(e),
            _ => None,
        }
    }
}

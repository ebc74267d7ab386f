//! Trapezoidal wind gust acting on the payload as a drag force.

use nalgebra::{Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{CraneError, Result};
use crate::kinematics::payload_position_jacobian;
use crate::model::{CraneParameters, GeneralizedState};

/// Typical gust duration range (s) and mean speed range (m/s).
pub const TYPICAL_DURATION: (f64, f64) = (2.0, 7.0);
pub const TYPICAL_SPEED: (f64, f64) = (4.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionTag {
    /// Along the slew motion of the boom tip.
    Tangential,
    /// Along the boom, outward from the tower.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GustDirection {
    Tag(DirectionTag),
    World([f64; 3]),
}

impl GustDirection {
    /// Unit vector in the world frame for the current slew angle.
    pub fn resolve(&self, slew: f64) -> Vector3<f64> {
        let (s, c) = slew.sin_cos();
        match self {
            GustDirection::Tag(DirectionTag::Tangential) => Vector3::new(-s, c, 0.0),
            GustDirection::Tag(DirectionTag::Radial) => Vector3::new(c, s, 0.0),
            GustDirection::World(v) => Vector3::from(*v).normalize(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GustProfile {
    pub start_time: f64,
    pub ramp_up: f64,
    pub plateau: f64,
    pub ramp_down: f64,
    pub peak_speed: f64,
    pub direction: GustDirection,
}

impl GustProfile {
    pub fn duration(&self) -> f64 {
        self.ramp_up + self.plateau + self.ramp_down
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("start_time", self.start_time),
            ("ramp_up", self.ramp_up),
            ("plateau", self.plateau),
            ("ramp_down", self.ramp_down),
            ("peak_speed", self.peak_speed),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CraneError::Config(format!("disturbance.gust.{name} must be finite and >= 0 (got {v})")));
            }
        }
        if let GustDirection::World(v) = self.direction {
            let n = Vector3::from(v).norm();
            if !(n.is_finite() && n > 0.0) {
                return Err(CraneError::Config("disturbance.gust.direction must be a non-zero vector".into()));
            }
        }
        Ok(())
    }

    /// Human-readable notes for values outside the typical gust envelope.
    pub fn flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = TYPICAL_DURATION;
        if !(lo..=hi).contains(&self.duration()) {
            out.push(format!("gust duration {:.2} s outside typical {lo}-{hi} s", self.duration()));
        }
        let (lo, hi) = TYPICAL_SPEED;
        if !(lo..=hi).contains(&self.peak_speed) {
            out.push(format!("gust speed {:.2} m/s outside typical {lo}-{hi} m/s", self.peak_speed));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragConfig {
    /// Air density (kg/m^3).
    #[serde(default = "DragConfig::default_rho")]
    pub rho: f64,
    /// Exposed payload area (m^2).
    #[serde(default = "DragConfig::default_area")]
    pub area: f64,
    #[serde(default = "DragConfig::default_cd")]
    pub drag_coefficient: f64,
}

impl DragConfig {
    fn default_rho() -> f64 {
        1.225
    }
    fn default_area() -> f64 {
        0.5
    }
    fn default_cd() -> f64 {
        1.05
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("area", self.area), ("drag_coefficient", self.drag_coefficient)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CraneError::Config(format!("disturbance.drag.{name} must be positive (got {v})")));
            }
        }
        Ok(())
    }

    /// `F = rho V^2 A C_D / 2`.
    pub fn magnitude(&self, speed: f64) -> f64 {
        0.5 * self.rho * speed * speed * self.area * self.drag_coefficient
    }
}

impl Default for DragConfig {
    fn default() -> Self {
        Self { rho: Self::default_rho(), area: Self::default_area(), drag_coefficient: Self::default_cd() }
    }
}

/// Piecewise-linear trapezoid, zero outside the gust.
pub fn wind_speed(t: f64, profile: &GustProfile) -> f64 {
    let s = t - profile.start_time;
    let v = profile.peak_speed;
    let top = profile.ramp_up + profile.plateau;
    if s <= 0.0 || s >= profile.duration() {
        0.0
    } else if s < profile.ramp_up {
        v * s / profile.ramp_up
    } else if s <= top {
        v
    } else {
        v * (profile.duration() - s) / profile.ramp_down
    }
}

/// World-frame drag on the payload; `slew` resolves tangential/radial tags.
pub fn drag_force(t: f64, profile: &GustProfile, cfg: &DragConfig, slew: f64) -> Vector3<f64> {
    profile.direction.resolve(slew) * cfg.magnitude(wind_speed(t, profile))
}

/// Virtual-work mapping `J^T F` of a force on the payload.
pub fn generalized_force(state: &GeneralizedState, force: &Vector3<f64>, params: &CraneParameters) -> Vector5<f64> {
    payload_position_jacobian(state, params).transpose() * force
}

//! Physical constants and generalized coordinates of the boom crane.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Vector2, Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{CraneError, Result};

/// Coordinate indices into `q` / `qdot`.
pub const SLEW: usize = 0;
pub const LUFF: usize = 1;
pub const ROPE: usize = 2;
pub const SWAY_TANGENTIAL: usize = 3;
pub const SWAY_RADIAL: usize = 4;

/// Physical constants of the crane. Inertias are about the slew axis (tower)
/// and about the boom's own pitch axis through its centre of mass (boom).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraneParameters {
    pub tower_inertia: f64,
    pub boom_inertia: f64,
    pub boom_length: f64,
    pub boom_mass: f64,
    pub payload_mass: f64,
    pub gravity: f64,
}

impl CraneParameters {
    /// NK 1000 mini crane values.
    pub const NK1000: CraneParameters = CraneParameters {
        tower_inertia: 207.13,
        boom_inertia: 2068.0,
        boom_length: 6.2,
        boom_mass: 312.2,
        payload_mass: 50.0,
        gravity: 9.81,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tower_inertia", self.tower_inertia),
            ("boom_inertia", self.boom_inertia),
            ("boom_length", self.boom_length),
            ("boom_mass", self.boom_mass),
            ("payload_mass", self.payload_mass),
            ("gravity", self.gravity),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(CraneError::Config(format!("crane.{name} must be strictly positive (got {value})")));
            }
        }
        Ok(())
    }
}

impl Default for CraneParameters {
    fn default() -> Self {
        Self::NK1000
    }
}

/// `q = [alpha, beta, d, theta1, theta2]` and its time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedState {
    pub q: Vector5<f64>,
    pub qdot: Vector5<f64>,
}

impl GeneralizedState {
    pub fn new(q: Vector5<f64>, qdot: Vector5<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn at_rest(q: Vector5<f64>) -> Self {
        Self { q, qdot: Vector5::zeros() }
    }

    pub fn alpha(&self) -> f64 {
        self.q[SLEW]
    }
    pub fn beta(&self) -> f64 {
        self.q[LUFF]
    }
    pub fn rope_length(&self) -> f64 {
        self.q[ROPE]
    }
    pub fn theta1(&self) -> f64 {
        self.q[SWAY_TANGENTIAL]
    }
    pub fn theta2(&self) -> f64 {
        self.q[SWAY_RADIAL]
    }

    /// Actuated coordinates `[alpha, beta, d]`.
    pub fn q1(&self) -> Vector3<f64> {
        self.q.fixed_rows::<3>(0).into_owned()
    }
    pub fn q1dot(&self) -> Vector3<f64> {
        self.qdot.fixed_rows::<3>(0).into_owned()
    }
    /// Sway angles `[theta1, theta2]`.
    pub fn q2(&self) -> Vector2<f64> {
        self.q.fixed_rows::<2>(3).into_owned()
    }
    pub fn q2dot(&self) -> Vector2<f64> {
        self.qdot.fixed_rows::<2>(3).into_owned()
    }

    /// Checks `d > 0`, `|theta_i| < pi/2` and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.q.iter().chain(self.qdot.iter()).any(|v| !v.is_finite()) {
            return Err(CraneError::Domain("state contains non-finite values".into()));
        }
        if self.rope_length() <= 0.0 {
            return Err(CraneError::Domain(format!("rope length must be positive (d = {})", self.rope_length())));
        }
        for (name, angle) in [("theta1", self.theta1()), ("theta2", self.theta2())] {
            if angle.abs() >= FRAC_PI_2 {
                return Err(CraneError::Domain(format!("sway angle {name} = {angle} outside (-pi/2, pi/2)")));
            }
        }
        Ok(())
    }
}

/// Slew torque, luff torque and rope force.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuationInput(pub Vector3<f64>);

impl ActuationInput {
    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    /// Generalized force `B u` with `B = [I3; 0]`.
    pub fn generalized(&self) -> Vector5<f64> {
        Vector5::new(self.0[0], self.0[1], self.0[2], 0.0, 0.0)
    }

    /// Element-wise clamp; `None` leaves that channel unbounded.
    pub fn saturate(&self, bounds: &[Option<f64>; 3]) -> Self {
        let mut u = self.0;
        for (ui, bound) in u.iter_mut().zip(bounds) {
            if let Some(b) = bound {
                *ui = ui.clamp(-b, *b);
            }
        }
        Self(u)
    }
}

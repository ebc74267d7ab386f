//! Partial feedback linearization of the actuated coordinates with a
//! swing-damping term fed back from the payload sway.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{dynamics_matrices, DynamicsMatrices};
use crate::error::{CraneError, Result};
use crate::model::{ActuationInput, CraneParameters, GeneralizedState};

/// How the radial weighting entry `alpha2` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha2Rule {
    Fixed(f64),
    Rule(NamedAlpha2),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedAlpha2 {
    /// `sign(beta)` with `sign(0) = 0`.
    SignBeta,
}

impl Alpha2Rule {
    pub fn evaluate(&self, beta: f64) -> f64 {
        match self {
            Alpha2Rule::Fixed(v) => *v,
            Alpha2Rule::Rule(NamedAlpha2::SignBeta) => sign(beta),
        }
    }
}

/// Signum with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub k_ad: [f64; 3],
    pub k_ap: [f64; 3],
    pub k_ud: [f64; 2],
    pub k_up: [f64; 2],
    pub alpha1: f64,
    pub alpha2: Alpha2Rule,
}

impl ControllerGains {
    /// Gains used for the NK 1000 simulations.
    pub const fn nk1000() -> Self {
        Self {
            k_ad: [100.0, 100.0, 150.0],
            k_ap: [10.0, 20.0, 50.0],
            k_ud: [120.0, 120.0],
            k_up: [10.0, 10.0],
            alpha1: -1.0,
            alpha2: Alpha2Rule::Rule(NamedAlpha2::SignBeta),
        }
    }

    /// All diagonal gains zero: the open-loop sway dynamics.
    pub const fn zero() -> Self {
        Self {
            k_ad: [0.0; 3],
            k_ap: [0.0; 3],
            k_ud: [0.0; 2],
            k_up: [0.0; 2],
            alpha1: 0.0,
            alpha2: Alpha2Rule::Fixed(0.0),
        }
    }

    fn diagonals(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        let named = |name: &'static str, v: &[f64]| v.iter().map(move |&x| (name, x)).collect::<Vec<_>>();
        named("k_ad", &self.k_ad)
            .into_iter()
            .chain(named("k_ap", &self.k_ap))
            .chain(named("k_ud", &self.k_ud))
            .chain(named("k_up", &self.k_up))
    }

    /// Controller gains must be positive diagonals.
    pub fn validate(&self) -> Result<()> {
        self.check(|v| v > 0.0, "strictly positive")
    }

    /// Stability analysis also accepts zero gains.
    pub fn validate_nonnegative(&self) -> Result<()> {
        self.check(|v| v >= 0.0, "non-negative")
    }

    fn check(&self, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        if let Some((name, v)) = self.diagonals().find(|&(_, v)| !(v.is_finite() && ok(v))) {
            return Err(CraneError::Config(format!("controller.gains.{name} entries must be {what} (got {v})")));
        }
        let a2_ok = match self.alpha2 {
            Alpha2Rule::Fixed(v) => v.is_finite(),
            Alpha2Rule::Rule(_) => true,
        };
        if !self.alpha1.is_finite() || !a2_ok {
            return Err(CraneError::Config("controller.gains alpha weights must be finite".into()));
        }
        Ok(())
    }

    /// The 3x2 weighting matrix coupling sway feedback into slew and luff.
    pub fn weighting(&self, beta: f64) -> Matrix3x2<f64> {
        Matrix3x2::new(self.alpha1, 0.0, 0.0, self.alpha2.evaluate(beta), 0.0, 0.0)
    }
}

/// Set-point for the actuated coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub q1d: Vector3<f64>,
    pub q1d_dot: Vector3<f64>,
    pub q1d_ddot: Vector3<f64>,
}

impl Reference {
    pub fn set_point(alpha: f64, beta: f64, rope_length: f64) -> Result<Self> {
        let r =
            Self { q1d: Vector3::new(alpha, beta, rope_length), q1d_dot: Vector3::zeros(), q1d_ddot: Vector3::zeros() };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q1d[2].is_nan() || self.q1d[2] <= 0.0 {
            return Err(CraneError::Config(format!("reference.d must be > 0 (got {})", self.q1d[2])));
        }
        Ok(())
    }
}

/// Actuated dynamics after eliminating the sway accelerations:
/// `Mbar qdd1 + Cbar1 qd1 + Cbar2 qd2 + Gbar = u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDynamics {
    pub mass: Matrix3<f64>,
    pub coriolis_actuated: Matrix3<f64>,
    pub coriolis_sway: Matrix3x2<f64>,
    pub gravity: Vector3<f64>,
}

const M22_MAX_CONDITION: f64 = 1e12;

pub fn reduced_dynamics(dm: &DynamicsMatrices) -> Result<ReducedDynamics> {
    let m22 = dm.m22();
    let (a, b) = (m22[(0, 0)], m22[(1, 1)]);
    if !(a > 0.0 && b > 0.0) || a.max(b) / a.min(b) > M22_MAX_CONDITION {
        return Err(CraneError::Domain(format!("sway inertia block is ill-conditioned ({a:.3e}, {b:.3e})")));
    }
    // M22 is diagonal; invert it directly
    let m22_inv = Matrix2::new(1.0 / a, 0.0, 0.0, 1.0 / b);
    let k = dm.m12() * m22_inv;
    Ok(ReducedDynamics {
        mass: dm.m11() - k * dm.m21(),
        coriolis_actuated: dm.c11() - k * dm.c21(),
        coriolis_sway: dm.c12() - k * dm.c22(),
        gravity: dm.g1() - k * dm.g2(),
    })
}

/// Outer-loop acceleration command `v`.
pub fn auxiliary_input(state: &GeneralizedState, reference: &Reference, gains: &ControllerGains) -> Vector3<f64> {
    let k_ad = Matrix3::from_diagonal(&Vector3::from(gains.k_ad));
    let k_ap = Matrix3::from_diagonal(&Vector3::from(gains.k_ap));
    let k_ud = Matrix2::from_diagonal(&Vector2::from(gains.k_ud));
    let k_up = Matrix2::from_diagonal(&Vector2::from(gains.k_up));
    let sway = k_ud * state.q2dot() + k_up * state.q2();
    reference.q1d_ddot
        - k_ad * (state.q1dot() - reference.q1d_dot)
        - k_ap * (state.q1() - reference.q1d)
        - gains.weighting(state.beta()) * sway
}

/// `u = Mbar v + Cbar1 qd1 + Cbar2 qd2 + Gbar`, which makes `qdd1 = v`.
pub fn control_input(state: &GeneralizedState, rd: &ReducedDynamics, v: &Vector3<f64>) -> ActuationInput {
    ActuationInput(rd.mass * v + rd.coriolis_actuated * state.q1dot() + rd.coriolis_sway * state.q2dot() + rd.gravity)
}

/// Convenience composition of the three steps above.
pub fn swing_damping_law(
    state: &GeneralizedState,
    reference: &Reference,
    gains: &ControllerGains,
    params: &CraneParameters,
) -> Result<ActuationInput> {
    let rd = reduced_dynamics(&dynamics_matrices(state, params)?)?;
    Ok(control_input(state, &rd, &auxiliary_input(state, reference, gains)))
}

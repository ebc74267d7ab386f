//! Literal transcription of the published five equations of motion.
//!
//! The slew equation as printed uses two sway symbols (`theta3`, `theta4`)
//! that are never defined; [`SwayAlias`] selects what they stand for so the
//! oracle comparison can decide which reading is consistent.

use nalgebra::Vector5;

use crate::model::{CraneParameters, GeneralizedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwayAngle {
    Tangential,
    Radial,
}

impl SwayAngle {
    fn pick(self, state: &GeneralizedState) -> f64 {
        match self {
            SwayAngle::Tangential => state.theta1(),
            SwayAngle::Radial => state.theta2(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SwayAngle::Tangential => "theta1",
            SwayAngle::Radial => "theta2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwayAlias {
    pub theta3: SwayAngle,
    pub theta4: SwayAngle,
}

impl SwayAlias {
    /// The reading under which the printed equations match the model.
    pub const CONSISTENT: SwayAlias = SwayAlias { theta3: SwayAngle::Tangential, theta4: SwayAngle::Radial };

    pub const ALL: [SwayAlias; 4] = [
        SwayAlias { theta3: SwayAngle::Tangential, theta4: SwayAngle::Radial },
        SwayAlias { theta3: SwayAngle::Tangential, theta4: SwayAngle::Tangential },
        SwayAlias { theta3: SwayAngle::Radial, theta4: SwayAngle::Radial },
        SwayAlias { theta3: SwayAngle::Radial, theta4: SwayAngle::Tangential },
    ];

    pub fn label(&self) -> String {
        format!("theta3={},theta4={}", self.theta3.label(), self.theta4.label())
    }
}

/// Left-hand sides of the five printed equations for accelerations `qdd`.
/// Rows 0..3 equal `u`, rows 3..5 equal zero.
pub fn printed_lhs(
    state: &GeneralizedState,
    qdd: &Vector5<f64>,
    params: &CraneParameters,
    alias: SwayAlias,
) -> Vector5<f64> {
    let (it, ib, l, mb, m, g) = (
        params.tower_inertia,
        params.boom_inertia,
        params.boom_length,
        params.boom_mass,
        params.payload_mass,
        params.gravity,
    );
    let [_, b, d, t1, t2]: [f64; 5] = state.q.into();
    let [ad, bd, dd, t1d, t2d]: [f64; 5] = state.qdot.into();
    let [add, bdd, ddd, t1dd, t2dd]: [f64; 5] = (*qdd).into();
    let (sb, cb) = b.sin_cos();
    let s2b = (2.0 * b).sin();
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let s3 = alias.theta3.pick(state).sin();
    let (s4, c4) = alias.theta4.pick(state).sin_cos();
    let l2 = l * l;
    let d2 = d * d;

    let slew = it * add + d2 * add * m + add * l2 * m * cb * cb + (add * l2 * mb * cb * cb) / 4.0 - d2 * t2dd * m * s3
        + 2.0 * dd * d * ad * m
        - 2.0 * d2 * t1d * t2d * m * c1
        - d2 * add * m * c1 * c1 * c4 * c4
        - ad * bd * l2 * m * s2b
        - (ad * bd * l2 * mb * s2b) / 4.0
        - 2.0 * dd * d * t2d * m * s3
        + ddd * l * m * cb * c4 * s3
        - 2.0 * dd * d * ad * m * c1 * c1 * c4 * c4
        + 2.0 * d2 * t1d * t2d * m * c1 * c4 * c4
        + d2 * t1dd * m * c1 * c4 * s4
        + 2.0 * d * add * l * m * cb * s4
        + 2.0 * dd * ad * l * m * cb * s4
        - d2 * t1d * t1d * m * c4 * s3 * s4
        + 2.0 * d * ad * t2d * l * m * cb * c4
        - 2.0 * d * ad * bd * l * m * sb * s4
        + 2.0 * d2 * ad * t2d * m * c1 * c1 * c4 * s4
        + d * t1dd * l * m * cb * c1 * c4
        + 2.0 * dd * t1d * l * m * cb * c1 * c4
        + 2.0 * dd * d * t1d * m * c1 * c4 * s4
        + d * bdd * l * m * c4 * sb * s3
        - d * t2dd * l * m * cb * s3 * s4
        - 2.0 * dd * t2d * l * m * cb * s3 * s4
        + d * bd * bd * l * m * cb * c4 * s3
        - d * t1d * t1d * l * m * cb * c4 * s3
        + 2.0 * d2 * ad * t1d * m * c1 * c4 * c4 * s3
        - d * t2d * t2d * l * m * cb * c4 * s3
        - 2.0 * d * t1d * t2d * l * m * cb * c1 * s4;

    let luff = ib * bdd
        + bdd * l2 * m
        + (bdd * l2 * mb) / 4.0
        + g * l * m * cb
        + (g * l * mb * cb) / 2.0
        + (ad * ad * l2 * m * s2b) / 2.0
        + (ad * ad * l2 * mb * s2b) / 8.0
        - ddd * l * m * sb * s2
        - ddd * l * m * cb * c1 * c2
        + d * ad * ad * l * m * sb * s2
        + d * t2d * t2d * l * m * sb * s2
        - d * t2dd * l * m * c2 * sb
        - 2.0 * dd * t2d * l * m * c2 * sb
        + d * t1dd * l * m * cb * c2 * s1
        + d * t2dd * l * m * cb * c1 * s2
        + 2.0 * dd * t1d * l * m * cb * c2 * s1
        + 2.0 * dd * t2d * l * m * cb * c1 * s2
        + d * add * l * m * c2 * sb * s1
        + 2.0 * dd * ad * l * m * c2 * sb * s1
        + d * t1d * t1d * l * m * cb * c1 * c2
        + d * t2d * t2d * l * m * cb * c1 * c2
        - 2.0 * d * t1d * t2d * l * m * cb * s1 * s2
        - 2.0 * d * ad * t2d * l * m * sb * s1 * s2
        + 2.0 * d * ad * t1d * l * m * c1 * c2 * sb;

    let rope = ddd * m - d * ad * ad * m - d * t2d * t2d * m - d * t1d * t1d * m * c2 * c2 - g * m * c1 * c2
        + d * ad * ad * m * c1 * c1 * c2 * c2
        - bdd * l * m * sb * s2
        - ad * ad * l * m * cb * s2
        - bd * bd * l * m * cb * s2
        + 2.0 * d * ad * t2d * m * s1
        - bdd * l * m * cb * c1 * c2
        + add * l * m * cb * c2 * s1
        + bd * bd * l * m * c1 * c2 * sb
        - 2.0 * d * ad * t1d * m * c1 * c2 * s2
        - 2.0 * ad * bd * l * m * c2 * sb * s1;

    let tangential = d
        * m
        * c2
        * (g * s1 + 2.0 * dd * t1d * c2 + d * t1dd * c2 - bd * bd * l * sb * s1 - 2.0 * d * t1d * t2d * s2
            + add * l * cb * c1
            + d * add * c1 * s2
            + 2.0 * dd * ad * c1 * s2
            + bdd * l * cb * s1
            - d * ad * ad * c1 * c2 * s1
            + 2.0 * d * ad * t2d * c1 * c2
            - 2.0 * ad * bd * l * c1 * sb);

    let radial = -d
        * m
        * (d * add * s1 - 2.0 * dd * t2d - d * t2dd + 2.0 * dd * ad * s1
            - g * c1 * s2
            - (d * t1d * t1d * (2.0 * t2).sin()) / 2.0
            + ad * ad * l * cb * c2
            + bd * bd * l * cb * c2
            + bdd * l * c2 * sb
            + bd * bd * l * c1 * sb * s2
            + d * ad * ad * c1 * c1 * c2 * s2
            + 2.0 * d * ad * t1d * c1 * c2 * c2
            - bdd * l * cb * c1 * s2
            + add * l * cb * s1 * s2
            - 2.0 * ad * bd * l * sb * s1 * s2);

    Vector5::new(slew, luff, rope, tangential, radial)
}

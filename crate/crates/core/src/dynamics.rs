//! Closed-form equations of motion `M(q) qdd + C(q, qd) qd + G(q) = B u + f_ext`.
//!
//! The crane is modelled as a rigid tower (inertia about the slew axis), a
//! boom whose mass is lumped at mid-span plus a pitch inertia about its own
//! centre of mass, and a point payload on a rigid rope. `M` and `C` are sums
//! of point-mass Gram terms, so `C` is the Christoffel-symbol Coriolis matrix
//! and `Mdot - 2C` is skew-symmetric.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Matrix5, SymmetricEigen, Vector2, Vector3, Vector5};

use crate::error::{CraneError, Result};
use crate::kinematics::{boom_com_jacobian, payload_jacobian, payload_position};
use crate::model::{ActuationInput, CraneParameters, GeneralizedState, LUFF};

/// Largest acceptable condition number of `M` before the solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsMatrices {
    pub mass: Matrix5<f64>,
    pub coriolis: Matrix5<f64>,
    pub gravity: Vector5<f64>,
}

impl DynamicsMatrices {
    pub fn m11(&self) -> Matrix3<f64> {
        self.mass.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn m12(&self) -> Matrix3x2<f64> {
        self.mass.fixed_view::<3, 2>(0, 3).into_owned()
    }
    pub fn m21(&self) -> Matrix2x3<f64> {
        self.mass.fixed_view::<2, 3>(3, 0).into_owned()
    }
    pub fn m22(&self) -> Matrix2<f64> {
        self.mass.fixed_view::<2, 2>(3, 3).into_owned()
    }
    pub fn c11(&self) -> Matrix3<f64> {
        self.coriolis.fixed_view::<3, 3>(0, 0).into_owned()
    }
    pub fn c12(&self) -> Matrix3x2<f64> {
        self.coriolis.fixed_view::<3, 2>(0, 3).into_owned()
    }
    pub fn c21(&self) -> Matrix2x3<f64> {
        self.coriolis.fixed_view::<2, 3>(3, 0).into_owned()
    }
    /// Full 2x2 block. The Christoffel construction couples the two sway
    /// rates, so unlike `M22` this block is not diagonal in general.
    pub fn c22(&self) -> Matrix2<f64> {
        self.coriolis.fixed_view::<2, 2>(3, 3).into_owned()
    }
    pub fn g1(&self) -> Vector3<f64> {
        self.gravity.fixed_rows::<3>(0).into_owned()
    }
    pub fn g2(&self) -> Vector2<f64> {
        self.gravity.fixed_rows::<2>(3).into_owned()
    }

    /// Reassembles the full matrices from the actuated/unactuated blocks.
    pub fn from_blocks(
        m: (Matrix3<f64>, Matrix3x2<f64>, Matrix2x3<f64>, Matrix2<f64>),
        c: (Matrix3<f64>, Matrix3x2<f64>, Matrix2x3<f64>, Matrix2<f64>),
        g: (Vector3<f64>, Vector2<f64>),
    ) -> Self {
        fn assemble((a, b, c, d): (Matrix3<f64>, Matrix3x2<f64>, Matrix2x3<f64>, Matrix2<f64>)) -> Matrix5<f64> {
            let mut out = Matrix5::zeros();
            out.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
            out.fixed_view_mut::<3, 2>(0, 3).copy_from(&b);
            out.fixed_view_mut::<2, 3>(3, 0).copy_from(&c);
            out.fixed_view_mut::<2, 2>(3, 3).copy_from(&d);
            out
        }
        let mut gravity = Vector5::zeros();
        gravity.fixed_rows_mut::<3>(0).copy_from(&g.0);
        gravity.fixed_rows_mut::<2>(3).copy_from(&g.1);
        Self { mass: assemble(m), coriolis: assemble(c), gravity }
    }

    /// Left-hand side `M qdd + C qd + G`.
    pub fn generalized_force(&self, qdot: &Vector5<f64>, qddot: &Vector5<f64>) -> Vector5<f64> {
        self.mass * qddot + self.coriolis * qdot + self.gravity
    }
}

pub fn dynamics_matrices(state: &GeneralizedState, params: &CraneParameters) -> Result<DynamicsMatrices> {
    state.validate()?;
    let alpha_dot = state.qdot[0];
    let payload = payload_jacobian(state, params);
    let boom = boom_com_jacobian(state, params);

    let mut mass = payload.gram() * params.payload_mass + boom.gram() * params.boom_mass;
    mass[(0, 0)] += params.tower_inertia;
    mass[(LUFF, LUFF)] += params.boom_inertia;
    // symmetrize away the rounding in the two Gram products
    let mass = (mass + mass.transpose()) * 0.5;

    let coriolis =
        payload.coriolis_gram(alpha_dot) * params.payload_mass + boom.coriolis_gram(alpha_dot) * params.boom_mass;

    // dU/dq with U = g * sum(m_i z_i); row 2 of the Jacobian is the height
    let gravity =
        (payload.jac.row(2) * params.payload_mass + boom.jac.row(2) * params.boom_mass).transpose() * params.gravity;

    Ok(DynamicsMatrices { mass, coriolis, gravity })
}

/// Solves `M qdd = rhs` after checking the conditioning of `M`.
pub fn solve_mass(mass: &Matrix5<f64>, rhs: &Vector5<f64>) -> Result<Vector5<f64>> {
    let eig = SymmetricEigen::new(*mass);
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(CraneError::Singular { condition });
    }
    mass.cholesky().map(|ch| ch.solve(rhs)).ok_or(CraneError::Singular { condition: f64::INFINITY })
}

/// Accelerations from already-evaluated matrices.
pub fn accelerations(
    dm: &DynamicsMatrices,
    qdot: &Vector5<f64>,
    u: &ActuationInput,
    f_ext: &Vector5<f64>,
) -> Result<Vector5<f64>> {
    let rhs = u.generalized() + f_ext - dm.coriolis * qdot - dm.gravity;
    solve_mass(&dm.mass, &rhs)
}

pub fn forward_dynamics(
    state: &GeneralizedState,
    u: &ActuationInput,
    f_ext: &Vector5<f64>,
    params: &CraneParameters,
) -> Result<Vector5<f64>> {
    let dm = dynamics_matrices(state, params)?;
    accelerations(&dm, &state.qdot, u, f_ext)
}

/// `U = m g z_payload + m_B g (l/2) sin(beta)`; zero height at the boom pivot.
pub fn potential_energy(state: &GeneralizedState, params: &CraneParameters) -> f64 {
    let z = payload_position(state, params).z;
    params.gravity * (params.payload_mass * z + params.boom_mass * 0.5 * params.boom_length * state.beta().sin())
}

pub fn total_energy(state: &GeneralizedState, params: &CraneParameters) -> Result<f64> {
    let dm = dynamics_matrices(state, params)?;
    let kinetic = 0.5 * state.qdot.dot(&(dm.mass * state.qdot));
    Ok(kinetic + potential_energy(state, params))
}

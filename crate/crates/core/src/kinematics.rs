//! Payload and boom kinematics.
//!
//! The rotating frame turns with the tower (slew angle `alpha`) about the
//! vertical `z` axis. In that frame the boom tip sits at
//! `(l cos(beta), 0, l sin(beta))` and the rope points along
//! `(sin(theta2), cos(theta2) sin(theta1), -cos(theta1) cos(theta2))`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix3x5, Vector3};
use num_complex::Complex64;

use crate::model::{CraneParameters, GeneralizedState};

/// Minimal scalar interface so positions can be evaluated on complex
/// arguments (complex-step differentiation).
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn from_f64(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

impl Scalar for Complex64 {
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
}

fn rotate_about_z<S: Scalar>(alpha: S, v: [S; 3]) -> [S; 3] {
    let (s, c) = (alpha.sin(), alpha.cos());
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// World-frame payload position for generalized coordinates `q`.
pub fn payload_position_at<S: Scalar>(q: &[S; 5], params: &CraneParameters) -> [S; 3] {
    let [alpha, beta, d, th1, th2] = *q;
    let l = S::from_f64(params.boom_length);
    let (s1, c1) = (th1.sin(), th1.cos());
    let (s2, c2) = (th2.sin(), th2.cos());
    let local = [l * beta.cos() + d * s2, d * c2 * s1, l * beta.sin() - d * c1 * c2];
    rotate_about_z(alpha, local)
}

/// World-frame position of the boom's centre of mass (mid-span).
pub fn boom_com_position_at<S: Scalar>(q: &[S; 5], params: &CraneParameters) -> [S; 3] {
    let half = S::from_f64(0.5 * params.boom_length);
    let local = [half * q[1].cos(), S::from_f64(0.0), half * q[1].sin()];
    rotate_about_z(q[0], local)
}

pub fn payload_position(state: &GeneralizedState, params: &CraneParameters) -> Vector3<f64> {
    let q: [f64; 5] = state.q.into();
    Vector3::from(payload_position_at(&q, params))
}

/// Rotation about the vertical axis by the slew angle.
pub(crate) fn slew_rotation(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `[z]x`, the cross-product matrix of the vertical unit vector.
pub(crate) fn vertical_cross() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// Jacobian of a point and its time derivative, both expressed in the
/// rotating frame. The world-frame Jacobian is `R_z(alpha) * jac` and its
/// derivative is `R_z(alpha) * (jac_dot + alpha_dot [z]x jac)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointJacobian {
    pub jac: Matrix3x5<f64>,
    pub jac_dot: Matrix3x5<f64>,
}

impl PointJacobian {
    /// `J_w^T J_w` and `J_w^T dJ_w/dt` without forming the world frame.
    pub fn gram(&self) -> nalgebra::Matrix5<f64> {
        self.jac.transpose() * self.jac
    }

    pub fn coriolis_gram(&self, alpha_dot: f64) -> nalgebra::Matrix5<f64> {
        let world_rate = self.jac_dot + vertical_cross() * self.jac * alpha_dot;
        self.jac.transpose() * world_rate
    }
}

/// Builds the alpha column (`z x r`) and its rate from the local position
/// and the local relative velocity.
fn with_slew_column(
    r: Vector3<f64>,
    r_rate: Vector3<f64>,
    mut jac: Matrix3x5<f64>,
    mut jac_dot: Matrix3x5<f64>,
) -> PointJacobian {
    jac.set_column(0, &Vector3::new(-r.y, r.x, 0.0));
    jac_dot.set_column(0, &Vector3::new(-r_rate.y, r_rate.x, 0.0));
    PointJacobian { jac, jac_dot }
}

pub(crate) fn payload_jacobian(state: &GeneralizedState, params: &CraneParameters) -> PointJacobian {
    let l = params.boom_length;
    let (beta, d, th1, th2) = (state.q[1], state.q[2], state.q[3], state.q[4]);
    let (bd, dd, t1d, t2d) = (state.qdot[1], state.qdot[2], state.qdot[3], state.qdot[4]);
    let (sb, cb) = beta.sin_cos();
    let (s1, c1) = th1.sin_cos();
    let (s2, c2) = th2.sin_cos();

    let r = Vector3::new(l * cb + d * s2, d * c2 * s1, l * sb - d * c1 * c2);

    let r_beta = Vector3::new(-l * sb, 0.0, l * cb);
    let r_d = Vector3::new(s2, c2 * s1, -c1 * c2);
    let r_t1 = Vector3::new(0.0, d * c2 * c1, d * c2 * s1);
    let r_t2 = Vector3::new(d * c2, -d * s2 * s1, d * c1 * s2);

    // second partials; beta does not mix with the rope coordinates
    let r_bb = Vector3::new(-l * cb, 0.0, -l * sb);
    let r_d1 = Vector3::new(0.0, c2 * c1, c2 * s1);
    let r_d2 = Vector3::new(c2, -s2 * s1, c1 * s2);
    let r_11 = Vector3::new(0.0, -d * c2 * s1, d * c2 * c1);
    let r_12 = Vector3::new(0.0, -d * s2 * c1, -d * s2 * s1);
    let r_22 = Vector3::new(-d * s2, -d * c2 * s1, d * c1 * c2);

    let mut jac = Matrix3x5::zeros();
    jac.set_column(1, &r_beta);
    jac.set_column(2, &r_d);
    jac.set_column(3, &r_t1);
    jac.set_column(4, &r_t2);

    let mut jac_dot = Matrix3x5::zeros();
    jac_dot.set_column(1, &(r_bb * bd));
    jac_dot.set_column(2, &(r_d1 * t1d + r_d2 * t2d));
    jac_dot.set_column(3, &(r_d1 * dd + r_11 * t1d + r_12 * t2d));
    jac_dot.set_column(4, &(r_d2 * dd + r_12 * t1d + r_22 * t2d));

    let r_rate = r_beta * bd + r_d * dd + r_t1 * t1d + r_t2 * t2d;
    with_slew_column(r, r_rate, jac, jac_dot)
}

pub(crate) fn boom_com_jacobian(state: &GeneralizedState, params: &CraneParameters) -> PointJacobian {
    let half = 0.5 * params.boom_length;
    let (sb, cb) = state.q[1].sin_cos();
    let bd = state.qdot[1];
    let r = Vector3::new(half * cb, 0.0, half * sb);
    let r_beta = Vector3::new(-half * sb, 0.0, half * cb);
    let mut jac = Matrix3x5::zeros();
    jac.set_column(1, &r_beta);
    let mut jac_dot = Matrix3x5::zeros();
    jac_dot.set_column(1, &(Vector3::new(-half * cb, 0.0, -half * sb) * bd));
    with_slew_column(r, r_beta * bd, jac, jac_dot)
}

/// World-frame payload Jacobian `d(payload_position)/dq` (3 x 5).
pub fn payload_position_jacobian(state: &GeneralizedState, params: &CraneParameters) -> Matrix3x5<f64> {
    slew_rotation(state.q[0]) * payload_jacobian(state, params).jac
}

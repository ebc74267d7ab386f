//! Local stability of the sway dynamics with the actuated coordinates held
//! at their set-point.
//!
//! Linearizing around `z = [theta1, theta1_dot, theta2, theta2_dot] = 0`
//! gives two decoupled companion blocks `[[0, 1], [a11, a12]]` and
//! `[[0, 1], [a21, a22]]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, SMatrix, SVector, Vector5};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{swing_damping_law, ControllerGains, Reference};
use crate::dynamics::forward_dynamics;
use crate::error::{CraneError, Result};
use crate::model::{CraneParameters, GeneralizedState};

/// Real parts within this distance of zero count as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSwingSystem {
    pub a: Matrix4<f64>,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub beta: f64,
    pub rope_length: f64,
}

impl LinearizedSwingSystem {
    fn from_entries(a11: f64, a12: f64, a21: f64, a22: f64, beta: f64, rope_length: f64) -> Self {
        #[rustfmt::skip]
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            a11, a12, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, a21, a22,
        );
        Self { a, a11, a12, a21, a22, beta, rope_length }
    }
}

pub fn linearized_a(
    params: &CraneParameters,
    gains: &ControllerGains,
    beta: f64,
    rope_length: f64,
) -> Result<LinearizedSwingSystem> {
    if rope_length.is_nan() || rope_length <= 0.0 {
        return Err(CraneError::Domain(format!("rope length must be positive (d = {rope_length})")));
    }
    let (g, l, d) = (params.gravity, params.boom_length, rope_length);
    let a1 = gains.alpha1;
    let a2 = gains.alpha2.evaluate(beta);
    let (sb, cb) = beta.sin_cos();
    let a11 = -(g - a1 * gains.k_up[0] * l * cb) / d;
    let a12 = a1 * gains.k_ud[0] * l * cb / d;
    let a21 = -(g + a2 * gains.k_up[1] * l * sb) / d;
    let a22 = -a2 * gains.k_ud[1] * l * sb / d;
    Ok(LinearizedSwingSystem::from_entries(a11, a12, a21, a22, beta, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        })
    }
}

fn classify(max_real: f64) -> Verdict {
    if max_real > MARGINAL_TOLERANCE {
        Verdict::Unstable
    } else if max_real >= -MARGINAL_TOLERANCE {
        Verdict::Marginal
    } else {
        Verdict::Stable
    }
}

/// Roots of `s^2 - trace s - det_term` for the block `[[0, 1], [a, b]]`.
fn companion_eigenvalues(a: f64, b: f64) -> [Complex64; 2] {
    let disc = b * b + 4.0 * a;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = 0.5 * (b + root.copysign(b));
        if big == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(big, 0.0), Complex64::new(-a / big, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * b, im), Complex64::new(0.5 * b, -im)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzReport {
    pub verdict: Verdict,
    pub tangential: Verdict,
    pub radial: Verdict,
    /// Tangential pair first, then radial.
    pub eigenvalues: [Complex64; 4],
    pub max_real: f64,
}

pub fn is_hurwitz(sys: &LinearizedSwingSystem) -> HurwitzReport {
    let [t0, t1] = companion_eigenvalues(sys.a11, sys.a12);
    let [r0, r1] = companion_eigenvalues(sys.a21, sys.a22);
    let tangential_max = t0.re.max(t1.re);
    let radial_max = r0.re.max(r1.re);
    let max_real = tangential_max.max(radial_max);
    HurwitzReport {
        verdict: classify(max_real),
        tangential: classify(tangential_max),
        radial: classify(radial_max),
        eigenvalues: [t0, t1, r0, r1],
        max_real,
    }
}

/// Per-block sign test: `[[0, 1], [a, b]]` is Hurwitz iff `a < 0` and `b < 0`.
pub fn sign_test(sys: &LinearizedSwingSystem) -> bool {
    sys.a11 < 0.0 && sys.a12 < 0.0 && sys.a21 < 0.0 && sys.a22 < 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationCheck {
    pub numeric: Matrix4<f64>,
    pub closed_form: Matrix4<f64>,
    pub deviation: f64,
}

const LINEARIZATION_STEP: f64 = 1e-6;

/// Sway accelerations of the full nonlinear closed loop with the actuated
/// coordinates pinned at the set-point.
fn pinned_sway_dynamics(
    z: &[f64; 4],
    reference: &Reference,
    gains: &ControllerGains,
    params: &CraneParameters,
) -> Result<[f64; 2]> {
    let q1 = reference.q1d;
    let state =
        GeneralizedState::new(Vector5::new(q1[0], q1[1], q1[2], z[0], z[2]), Vector5::new(0.0, 0.0, 0.0, z[1], z[3]));
    let u = swing_damping_law(&state, reference, gains, params)?;
    let qdd = forward_dynamics(&state, &u, &Vector5::zeros(), params)?;
    Ok([qdd[3], qdd[4]])
}

/// Finite-difference Jacobian of the pinned closed loop at `z = 0`, compared
/// entry-wise with [`linearized_a`].
pub fn numeric_linearization_check(
    params: &CraneParameters,
    gains: &ControllerGains,
    beta: f64,
    rope_length: f64,
    tolerance: f64,
) -> Result<LinearizationCheck> {
    let closed_form = linearized_a(params, gains, beta, rope_length)?.a;
    let reference = Reference::set_point(0.0, beta, rope_length)?;
    let mut numeric = Matrix4::zeros();
    numeric[(0, 1)] = 1.0;
    numeric[(2, 3)] = 1.0;
    for k in 0..4 {
        let mut plus = [0.0; 4];
        let mut minus = [0.0; 4];
        plus[k] = LINEARIZATION_STEP;
        minus[k] = -LINEARIZATION_STEP;
        let hp = pinned_sway_dynamics(&plus, &reference, gains, params)?;
        let hm = pinned_sway_dynamics(&minus, &reference, gains, params)?;
        numeric[(1, k)] = (hp[0] - hm[0]) / (2.0 * LINEARIZATION_STEP);
        numeric[(3, k)] = (hp[1] - hm[1]) / (2.0 * LINEARIZATION_STEP);
    }
    let deviation = (numeric - closed_form).amax();
    if deviation > tolerance {
        return Err(CraneError::LinearizationMismatch { deviation, tolerance });
    }
    Ok(LinearizationCheck { numeric, closed_form, deviation })
}

/// Jacobian of the complete 10-state closed loop `[q, qdot]` at the
/// set-point, including the actuated error dynamics that the 4x4 sway model
/// holds fixed.
pub fn full_closed_loop_matrix(
    params: &CraneParameters,
    gains: &ControllerGains,
    beta: f64,
    rope_length: f64,
) -> Result<SMatrix<f64, 10, 10>> {
    let reference = Reference::set_point(0.0, beta, rope_length)?;
    let x0 = SVector::<f64, 10>::from_column_slice(&[0.0, beta, rope_length, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let flow = |x: &SVector<f64, 10>| -> Result<SVector<f64, 10>> {
        let state = GeneralizedState::new(x.fixed_rows::<5>(0).into(), x.fixed_rows::<5>(5).into());
        let u = swing_damping_law(&state, &reference, gains, params)?;
        let qdd = forward_dynamics(&state, &u, &Vector5::zeros(), params)?;
        let mut out = SVector::<f64, 10>::zeros();
        out.fixed_rows_mut::<5>(0).copy_from(&state.qdot);
        out.fixed_rows_mut::<5>(5).copy_from(&qdd);
        Ok(out)
    };
    let mut jac = SMatrix::<f64, 10, 10>::zeros();
    for k in 0..10 {
        let mut dx = SVector::<f64, 10>::zeros();
        dx[k] = LINEARIZATION_STEP;
        let col = (flow(&(x0 + dx))? - flow(&(x0 - dx))?) / (2.0 * LINEARIZATION_STEP);
        jac.set_column(k, &col);
    }
    Ok(jac)
}

/// Largest real part over the spectrum of [`full_closed_loop_matrix`].
pub fn full_closed_loop_abscissa(
    params: &CraneParameters,
    gains: &ControllerGains,
    beta: f64,
    rope_length: f64,
) -> Result<f64> {
    let jac = full_closed_loop_matrix(params, gains, beta, rope_length)?;
    Ok(jac.complex_eigenvalues().iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Inclusive linear range with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let step = if self.count > 1 { (self.end - self.start) / (self.count - 1) as f64 } else { 0.0 };
        (0..self.count).map(move |i| if i + 1 == self.count { self.end } else { self.start + step * i as f64 })
    }
}

/// `beta=START:END:COUNT,d=START:END:COUNT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub beta: Axis,
    pub rope_length: Axis,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { beta: Axis { start: 0.05, end: 1.5, count: 51 }, rope_length: Axis { start: 0.5, end: 20.0, count: 51 } }
    }
}

impl FromStr for GridSpec {
    type Err = CraneError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| CraneError::Config(format!("invalid grid spec {s:?}: {why}"));
        let parse_axis = |v: &str| -> Result<Axis> {
            let parts: Vec<&str> = v.split(':').collect();
            let [a, b, n] = parts.as_slice() else {
                return Err(bad("axis must be START:END:COUNT"));
            };
            let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("non-numeric bound"));
            let axis = Axis {
                start: num(a)?,
                end: num(b)?,
                count: n.trim().parse().map_err(|_| bad("count must be a positive integer"))?,
            };
            if axis.count == 0 || !axis.start.is_finite() || !axis.end.is_finite() || axis.end < axis.start {
                return Err(bad("need finite START <= END and COUNT >= 1"));
            }
            Ok(axis)
        };
        let (mut beta, mut rope) = (None, None);
        for part in s.split(',') {
            match part.split_once('=') {
                Some(("beta", v)) => beta = Some(parse_axis(v)?),
                Some(("d", v)) => rope = Some(parse_axis(v)?),
                _ => return Err(bad("expected beta=..,d=..")),
            }
        }
        let grid = GridSpec {
            beta: beta.ok_or_else(|| bad("missing beta axis"))?,
            rope_length: rope.ok_or_else(|| bad("missing d axis"))?,
        };
        if grid.rope_length.start <= 0.0 {
            return Err(bad("rope lengths must be positive"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub beta: f64,
    pub d: f64,
    pub verdict: Verdict,
    pub max_real_eigenvalue: f64,
    pub tangential: Verdict,
    pub radial: Verdict,
}

pub fn stability_map(
    params: &CraneParameters,
    gains: &ControllerGains,
    grid: &GridSpec,
) -> Result<Vec<StabilityPoint>> {
    let points: Vec<(f64, f64)> =
        grid.beta.values().flat_map(|b| grid.rope_length.values().map(move |d| (b, d))).collect();
    points
        .par_iter()
        .map(|&(beta, d)| {
            let report = is_hurwitz(&linearized_a(params, gains, beta, d)?);
            Ok(StabilityPoint {
                beta,
                d,
                verdict: report.verdict,
                max_real_eigenvalue: report.max_real,
                tangential: report.tangential,
                radial: report.radial,
            })
        })
        .collect()
}

pub fn write_stability_csv<W: std::io::Write>(points: &[StabilityPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta", "d", "verdict", "max_real_eigenvalue", "tangential", "radial"])?;
    for p in points {
        w.write_record([
            format!("{:.16e}", p.beta),
            format!("{:.16e}", p.d),
            p.verdict.to_string(),
            format!("{:.16e}", p.max_real_eigenvalue),
            p.tangential.to_string(),
            p.radial.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Alpha2Rule;
    use approx::assert_relative_eq;

    const P: CraneParameters = CraneParameters::NK1000;

    #[test]
    fn full_loop_contains_the_sway_block_and_actuated_gains() {
        let g = ControllerGains::nk1000();
        let (beta, d) = (0.6, 4.0);
        let full = full_closed_loop_matrix(&P, &g, beta, d).unwrap();
        let sys = linearized_a(&P, &g, beta, d).unwrap();
        assert_relative_eq!(full[(8, 3)], sys.a11, epsilon = 1e-6);
        assert_relative_eq!(full[(8, 8)], sys.a12, epsilon = 1e-6);
        assert_relative_eq!(full[(9, 4)], sys.a21, epsilon = 1e-6);
        assert_relative_eq!(full[(9, 9)], sys.a22, epsilon = 1e-6);
        for i in 0..3 {
            assert_relative_eq!(full[(5 + i, i)], -g.k_ap[i], epsilon = 1e-6);
            assert_relative_eq!(full[(5 + i, 5 + i)], -g.k_ad[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn default_gains_leave_the_full_loop_weakly_unstable() {
        // The sway block alone is Hurwitz, but the slow actuated pole
        // k_ap/k_ad adds phase lag to the sway feedback.
        let g = ControllerGains::nk1000();
        assert_eq!(is_hurwitz(&linearized_a(&P, &g, 0.6, 4.0).unwrap()).verdict, Verdict::Stable);
        let abscissa = full_closed_loop_abscissa(&P, &g, 0.6, 4.0).unwrap();
        assert!(abscissa > 0.0 && abscissa < 0.05, "{abscissa}");

        let mut faster = g;
        faster.k_ud = g.k_up;
        faster.k_up = g.k_ud;
        assert!(full_closed_loop_abscissa(&P, &faster, 0.6, 4.0).unwrap() < -0.05);
    }

    #[test]
    fn horizontal_boom_entries() {
        let sys = linearized_a(&P, &ControllerGains::nk1000(), 0.0, 5.0).unwrap();
        assert_relative_eq!(sys.a11, -14.362, epsilon = 1e-12);
        assert_relative_eq!(sys.a12, -148.8, epsilon = 1e-12);
        assert_relative_eq!(sys.a21, -9.81 / 5.0, epsilon = 1e-15);
        assert_eq!(sys.a22, 0.0);
    }

    #[test]
    fn zero_gains_give_the_open_loop_pendulum() {
        let sys = linearized_a(&P, &ControllerGains::zero(), 0.7, 5.0).unwrap();
        assert_relative_eq!(sys.a11, -9.81 / 5.0);
        assert_relative_eq!(sys.a21, -9.81 / 5.0);
        assert_eq!((sys.a12, sys.a22), (0.0, 0.0));
        let report = is_hurwitz(&sys);
        assert_eq!(report.verdict, Verdict::Marginal);
        let w = (9.81f64 / 5.0).sqrt();
        assert_relative_eq!(report.eigenvalues[0].im.abs(), w, epsilon = 1e-12);
    }

    #[test]
    fn default_gains_are_stable_at_moderate_luff() {
        let report = is_hurwitz(&linearized_a(&P, &ControllerGains::nk1000(), 0.5, 5.0).unwrap());
        assert_eq!(report.verdict, Verdict::Stable);
        assert!(report.eigenvalues.iter().all(|e| e.re < 0.0));
    }

    #[test]
    fn positive_tangential_weight_with_large_gain_is_unstable() {
        let mut g = ControllerGains::nk1000();
        g.alpha1 = 1.0;
        g.k_up[0] = 50.0;
        let sys = linearized_a(&P, &g, 0.3, 5.0).unwrap();
        assert!(sys.a11 > 0.0);
        assert_eq!(is_hurwitz(&sys).verdict, Verdict::Unstable);
    }

    #[test]
    fn radial_block_is_marginal_at_zero_luff() {
        let report = is_hurwitz(&linearized_a(&P, &ControllerGains::nk1000(), 0.0, 5.0).unwrap());
        assert_eq!(report.tangential, Verdict::Stable);
        assert_eq!(report.radial, Verdict::Marginal);
    }

    #[test]
    fn companion_roots_satisfy_characteristic_polynomial() {
        for (a, b) in [(-14.362, -148.8), (-2.0, 0.0), (3.0, -1.0), (-1.0, 2.5), (0.0, 0.0)] {
            for s in companion_eigenvalues(a, b) {
                let residual = s * s - s * b - a;
                assert!(residual.norm() < 1e-9 * (1.0 + a.abs() + b.abs() * b.abs()), "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn numeric_linearization_agrees() {
        for (beta, d) in [(0.3, 5.0), (1.2, 15.0), (1.55, 0.3)] {
            let check = numeric_linearization_check(&P, &ControllerGains::nk1000(), beta, d, 1e-6).unwrap();
            assert!(check.deviation < 1e-6, "{beta} {d}: {}", check.deviation);
            // cross-block entries vanish
            for (i, j) in [(1, 2), (1, 3), (3, 0), (3, 1)] {
                assert!(check.numeric[(i, j)].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn numeric_linearization_of_open_loop() {
        let mut g = ControllerGains::zero();
        g.alpha2 = Alpha2Rule::Fixed(0.0);
        let check = numeric_linearization_check(&P, &g, 0.4, 6.0, 1e-6).unwrap();
        assert_relative_eq!(check.numeric[(1, 0)], -9.81 / 6.0, epsilon = 1e-7);
        assert_relative_eq!(check.numeric[(3, 2)], -9.81 / 6.0, epsilon = 1e-7);
    }

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "beta=0.05:1.5:51,d=0.5:20:51".parse().unwrap();
        assert_eq!(g, GridSpec::default());
        let v: Vec<f64> = g.beta.values().collect();
        assert_eq!((v[0], v[50], v.len()), (0.05, 1.5, 51));
        for bad in
            ["beta=0:1:3", "beta=1:0:3,d=1:2:3", "beta=0:1:0,d=1:2:2", "beta=0:1:x,d=1:2:3", "beta=0:1:2,d=0:2:3"]
        {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn nonpositive_rope_length_is_a_domain_error() {
        assert!(linearized_a(&P, &ControllerGains::nk1000(), 0.1, 0.0).is_err());
    }
}

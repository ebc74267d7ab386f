//! Equations of motion recovered numerically from the Lagrangian.
//!
//! Nothing here touches the closed-form matrices. Point velocities come from
//! complex-step differentiation of the position functions, and every
//! derivative of `L(q, qd)` is a Richardson-extrapolated central difference.
//! Comparing the result with [`crate::dynamics`] certifies the closed form.

pub mod transcribed;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector3, Vector5};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{accelerations, dynamics_matrices, DynamicsMatrices};
use crate::error::{CraneError, Result};
use crate::kinematics::{boom_com_position_at, payload_position_at};
use crate::model::{ActuationInput, CraneParameters, GeneralizedState};
pub use transcribed::{printed_lhs, SwayAlias, SwayAngle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Relative step for coordinate and velocity perturbations.
    pub fd_step_q: f64,
    /// Time step (s) for the total derivative of `dL/dqd`.
    pub fd_step_t: f64,
    /// Allowed relative change of the accelerations when all steps are halved.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { fd_step_q: 1e-3, fd_step_t: 1e-3, tolerance: 1e-8 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, step) in [("fd_step_q", self.fd_step_q), ("fd_step_t", self.fd_step_t)] {
            if !(step > 0.0 && step <= 1e-2) {
                return Err(CraneError::Config(format!("oracle {name} must lie in (0, 1e-2] (got {step})")));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(CraneError::Config("oracle tolerance must be positive".into()));
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        Self { fd_step_q: 0.5 * self.fd_step_q, fd_step_t: 0.5 * self.fd_step_t, ..*self }
    }
}

/// `||a - b||_inf / max(||b||_inf, 1)`. The floor keeps near-zero rows from
/// dominating; all quantities compared this way are in SI units.
pub fn relative_deviation(a: &Vector5<f64>, b: &Vector5<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

const COMPLEX_STEP: f64 = 1e-30;

fn point_velocity(
    position: impl Fn(&[Complex64; 5], &CraneParameters) -> [Complex64; 3],
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    params: &CraneParameters,
) -> Vector3<f64> {
    let z: [Complex64; 5] = std::array::from_fn(|i| Complex64::new(q[i], COMPLEX_STEP * qdot[i]));
    let p = position(&z, params);
    Vector3::new(p[0].im, p[1].im, p[2].im) / COMPLEX_STEP
}

fn lagrangian_at(q: &Vector5<f64>, qdot: &Vector5<f64>, params: &CraneParameters) -> f64 {
    let v_payload = point_velocity(payload_position_at, q, qdot, params);
    let v_boom = point_velocity(boom_com_position_at, q, qdot, params);
    let kinetic = 0.5 * params.tower_inertia * qdot[0].powi(2)
        + 0.5 * params.boom_inertia * qdot[1].powi(2)
        + 0.5 * params.boom_mass * v_boom.norm_squared()
        + 0.5 * params.payload_mass * v_payload.norm_squared();

    let qa: [f64; 5] = (*q).into();
    let z_payload = payload_position_at(&qa, params)[2];
    let z_boom = boom_com_position_at(&qa, params)[2];
    let potential = params.gravity * (params.payload_mass * z_payload + params.boom_mass * z_boom);
    kinetic - potential
}

/// `L = T - U` from kinematics alone.
pub fn lagrangian(state: &GeneralizedState, params: &CraneParameters) -> f64 {
    lagrangian_at(&state.q, &state.qdot, params)
}

fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (4.0 * f(0.5 * h) - f(h)) / 3.0
}

fn unit(i: usize) -> Vector5<f64> {
    let mut e = Vector5::zeros();
    e[i] = 1.0;
    e
}

/// Euler-Lagrange terms: `d/dt dL/dqd = M qdd + b` and `dL/dq`.
struct LagrangeTerms {
    mass: DMatrix<f64>,
    velocity_product: Vector5<f64>,
    gradient: Vector5<f64>,
}

fn lagrange_terms(state: &GeneralizedState, params: &CraneParameters, cfg: &OracleConfig) -> LagrangeTerms {
    let (q, qd) = (state.q, state.qdot);
    let l = |q: &Vector5<f64>, qd: &Vector5<f64>| lagrangian_at(q, qd, params);
    // L is exactly quadratic in qd, so velocity differences carry no
    // truncation error and a unit-scale step minimises rounding.
    let hv = qd.amax().max(1.0);

    let gradient = Vector5::from_fn(|i, _| {
        let h = cfg.fd_step_q * q[i].abs().max(1.0);
        let e = unit(i);
        richardson(|h| (l(&(q + e * h), &qd) - l(&(q - e * h), &qd)) / (2.0 * h), h)
    });

    let mut mass = DMatrix::zeros(5, 5);
    for i in 0..5 {
        let ei = unit(i);
        mass[(i, i)] = richardson(|h| (l(&q, &(qd + ei * h)) - 2.0 * l(&q, &qd) + l(&q, &(qd - ei * h))) / (h * h), hv);
        for j in 0..i {
            let ej = unit(j);
            let mixed = richardson(
                |h| {
                    (l(&q, &(qd + (ei + ej) * h)) - l(&q, &(qd + (ei - ej) * h)) - l(&q, &(qd + (ej - ei) * h))
                        + l(&q, &(qd - (ei + ej) * h)))
                        / (4.0 * h * h)
                },
                hv,
            );
            mass[(i, j)] = mixed;
            mass[(j, i)] = mixed;
        }
    }

    // d/de [dL/dqd_i](q + e qd, qd): the velocity-only part of the total derivative
    let momentum = |i: usize, q: &Vector5<f64>| {
        let e = unit(i);
        richardson(|h| (l(q, &(qd + e * h)) - l(q, &(qd - e * h))) / (2.0 * h), hv)
    };
    let velocity_product = Vector5::from_fn(|i, _| {
        richardson(|h| (momentum(i, &(q + qd * h)) - momentum(i, &(q - qd * h))) / (2.0 * h), cfg.fd_step_t)
    });

    LagrangeTerms { mass, velocity_product, gradient }
}

fn solve_terms(terms: &LagrangeTerms, force: &Vector5<f64>) -> Result<Vector5<f64>> {
    let rhs = force - terms.velocity_product + terms.gradient;
    let sol = terms
        .mass
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs.as_slice()))
        .ok_or(CraneError::Singular { condition: f64::INFINITY })?;
    Ok(Vector5::from_column_slice(sol.as_slice()))
}

/// Accelerations solving `d/dt dL/dqd - dL/dq = B u`, cross-checked against
/// a second evaluation with all steps halved.
pub fn oracle_accelerations(
    state: &GeneralizedState,
    u: &ActuationInput,
    params: &CraneParameters,
    cfg: &OracleConfig,
) -> Result<Vector5<f64>> {
    cfg.validate()?;
    state.validate()?;
    let force = u.generalized();
    let coarse = solve_terms(&lagrange_terms(state, params, cfg), &force)?;
    let fine = solve_terms(&lagrange_terms(state, params, &cfg.halved()), &force)?;
    let change = relative_deviation(&coarse, &fine);
    if change > cfg.tolerance {
        return Err(CraneError::NonConvergence { change, tolerance: cfg.tolerance });
    }
    Ok(fine)
}

/// Generalized force `d/dt dL/dqd - dL/dq` required for accelerations `qdd`.
pub fn oracle_generalized_force(
    state: &GeneralizedState,
    qdd: &Vector5<f64>,
    params: &CraneParameters,
    cfg: &OracleConfig,
) -> Vector5<f64> {
    let t = lagrange_terms(state, params, cfg);
    let mass = nalgebra::Matrix5::from_iterator(t.mass.iter().copied());
    mass * qdd + t.velocity_product - t.gradient
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Inertia,
    Coriolis,
    Gravity,
}

/// Deliberate model defect used to check that the comparison catches errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mutation {
    pub row: usize,
    pub term: Term,
}

impl Mutation {
    pub fn apply(&self, mut dm: DynamicsMatrices) -> DynamicsMatrices {
        match self.term {
            Term::Inertia => dm.mass.row_mut(self.row).neg_mut(),
            Term::Coriolis => dm.coriolis.row_mut(self.row).neg_mut(),
            Term::Gravity => dm.gravity[self.row] = -dm.gravity[self.row],
        }
        dm
    }
}

impl FromStr for Mutation {
    type Err = CraneError;

    /// Parses `flip-sign:row=R,term=inertia|coriolis|gravity` (rows 0-based).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CraneError::Config(format!("bad mutation spec {s:?}; expected flip-sign:row=R,term=T"));
        let body = s.strip_prefix("flip-sign:").ok_or_else(bad)?;
        let (mut row, mut term) = (None, None);
        for part in body.split(',') {
            match part.split_once('=').ok_or_else(bad)? {
                ("row", v) => row = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                ("term", "inertia") => term = Some(Term::Inertia),
                ("term", "coriolis") => term = Some(Term::Coriolis),
                ("term", "gravity") => term = Some(Term::Gravity),
                _ => return Err(bad()),
            }
        }
        match (row, term) {
            (Some(row), Some(term)) if row < 5 => Ok(Mutation { row, term }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = match self.term {
            Term::Inertia => "inertia",
            Term::Coriolis => "coriolis",
            Term::Gravity => "gravity",
        };
        write!(f, "flip-sign:row={},term={}", self.row, term)
    }
}

/// One random test point: a state, an input for the forward comparison and
/// a probe acceleration for the inverse (row-wise) comparison.
#[derive(Debug, Clone, Copy)]
pub struct OracleCase {
    pub state: GeneralizedState,
    pub input: ActuationInput,
    pub probe: Vector5<f64>,
}

/// Seeded random cases inside `d > 0`, `|theta| < pi/2`.
pub fn sample_cases(seed: u64, count: usize) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = Vector5::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.3..1.3),
                rng.gen_range(0.5..20.0),
                rng.gen_range(-1.3..1.3),
                rng.gen_range(-1.3..1.3),
            );
            let qdot = Vector5::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let input = ActuationInput(Vector3::new(
                rng.gen_range(-2.0e4..2.0e4),
                rng.gen_range(-2.0e4..2.0e4),
                rng.gen_range(-1.0e3..1.0e3),
            ));
            let probe = Vector5::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            OracleCase { state: GeneralizedState::new(q, qdot), input, probe }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub state_id: usize,
    pub row_index: usize,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

impl ReportRow {
    fn new(state_id: usize, row_index: usize, closed_form: f64, oracle: f64) -> Self {
        let abs_diff = (closed_form - oracle).abs();
        let rel_diff = abs_diff / oracle.abs().max(closed_form.abs()).max(1.0);
        Self { state_id, row_index, closed_form, oracle, abs_diff, rel_diff }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TermDiffReport {
    pub rows: Vec<ReportRow>,
}

impl TermDiffReport {
    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max)
    }

    /// Row indices whose relative residual exceeds `tolerance` anywhere.
    pub fn flagged_rows(&self, tolerance: f64) -> Vec<usize> {
        let mut rows: Vec<usize> = self.rows.iter().filter(|r| r.rel_diff > tolerance).map(|r| r.row_index).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_id", "row_index", "closed_form", "oracle", "abs_diff", "rel_diff"])?;
        for r in &self.rows {
            w.write_record([
                r.state_id.to_string(),
                r.row_index.to_string(),
                format!("{:.16e}", r.closed_form),
                format!("{:.16e}", r.oracle),
                format!("{:.16e}", r.abs_diff),
                format!("{:.16e}", r.rel_diff),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Row-wise inverse-dynamics comparison: `M qdd + C qd + G` from `closed_form`
/// against the Lagrangian oracle at each case's probe acceleration. A wrong
/// term shows up only in the row that contains it.
pub fn term_diff_report<F>(
    cases: &[OracleCase],
    params: &CraneParameters,
    cfg: &OracleConfig,
    closed_form: F,
) -> Result<TermDiffReport>
where
    F: Fn(&GeneralizedState) -> Result<DynamicsMatrices> + Sync,
{
    if cases.is_empty() {
        return Err(CraneError::Config("term_diff_report needs at least one state".into()));
    }
    let per_case: Result<Vec<Vec<ReportRow>>> = cases
        .par_iter()
        .enumerate()
        .map(|(id, case)| {
            let dm = closed_form(&case.state)?;
            let lhs = dm.generalized_force(&case.state.qdot, &case.probe);
            let oracle = oracle_generalized_force(&case.state, &case.probe, params, cfg);
            Ok((0..5).map(|row| ReportRow::new(id, row, lhs[row], oracle[row])).collect())
        })
        .collect();
    Ok(TermDiffReport { rows: per_case?.into_iter().flatten().collect() })
}

/// Same comparison with the printed equations standing in for the closed form.
pub fn transcription_report(
    cases: &[OracleCase],
    params: &CraneParameters,
    cfg: &OracleConfig,
    alias: SwayAlias,
) -> TermDiffReport {
    let rows = cases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(id, case)| {
            let printed = printed_lhs(&case.state, &case.probe, params, alias);
            let oracle = oracle_generalized_force(&case.state, &case.probe, params, cfg);
            (0..5).map(move |row| ReportRow::new(id, row, printed[row], oracle[row]))
        })
        .collect();
    TermDiffReport { rows }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    /// Worst forward-dynamics deviation over all cases.
    pub max_forward_deviation: f64,
    pub report: TermDiffReport,
}

impl SuiteOutcome {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_forward_deviation < tolerance && self.report.max_rel_diff() < tolerance
    }
}

/// Forward and inverse comparison of the closed-form model, optionally with
/// a mutation applied to it.
pub fn run_suite(
    cases: &[OracleCase],
    params: &CraneParameters,
    cfg: &OracleConfig,
    mutation: Option<Mutation>,
) -> Result<SuiteOutcome> {
    let closed_form = |s: &GeneralizedState| {
        let dm = dynamics_matrices(s, params)?;
        Ok(mutation.map_or(dm, |m| m.apply(dm)))
    };
    let forward: Result<Vec<f64>> = cases
        .par_iter()
        .map(|case| {
            let dm = closed_form(&case.state)?;
            let ours = accelerations(&dm, &case.state.qdot, &case.input, &Vector5::zeros());
            let oracle = oracle_accelerations(&case.state, &case.input, params, cfg)?;
            // a mutated mass matrix may be indefinite; count that as total disagreement
            Ok(ours.map_or(f64::INFINITY, |ours| relative_deviation(&ours, &oracle)))
        })
        .collect();
    let max_forward_deviation = forward?.into_iter().fold(0.0, f64::max);
    let report = term_diff_report(cases, params, cfg, closed_form)?;
    Ok(SuiteOutcome { max_forward_deviation, report })
}

//! Fixed-step RK4 integration of the crane with controller, actuator
//! saturation and wind, plus run metrics.

use nalgebra::{Vector3, Vector5};

use crate::control::Controller;
use crate::dynamics::{forward_dynamics, total_energy};
use crate::error::{CraneError, Result};
use crate::model::{ActuationInput, CraneParameters, GeneralizedState};
use crate::wind::{drag_force, generalized_force, DragConfig, GustProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub gust: GustProfile,
    pub drag: DragConfig,
}

impl Disturbance {
    pub fn force(&self, t: f64, state: &GeneralizedState) -> Vector3<f64> {
        drag_force(t, &self.gust, &self.drag, state.alpha())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub duration: f64,
    pub initial_state: GeneralizedState,
    /// Symmetric bounds per input; `None` entries are unbounded.
    pub saturation: Option<[Option<f64>; 3]>,
    pub disturbance: Option<Disturbance>,
    pub record_stride: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CraneError::Config(format!("simulation.dt must be positive (got {})", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(CraneError::Config(format!("simulation.duration must be at least dt (got {})", self.duration)));
        }
        if self.record_stride == 0 {
            return Err(CraneError::Config("simulation.record_stride must be >= 1".into()));
        }
        if let Some(bounds) = &self.saturation {
            if bounds.iter().flatten().any(|b| !(b.is_finite() && *b > 0.0)) {
                return Err(CraneError::Config("simulation.saturation bounds must be positive".into()));
            }
        }
        if let Some(d) = &self.disturbance {
            d.gust.validate()?;
            d.drag.validate()?;
        }
        self.initial_state.validate().map_err(|e| CraneError::Config(format!("simulation.initial_state: {e}")))
    }

    /// Number of integration steps; `duration` is rounded down to whole steps.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }

    pub fn sample_count(&self) -> usize {
        self.steps() / self.record_stride + 1
    }
}

/// Plant, controller and environment evaluated together at one instant.
pub struct ClosedLoop<'a> {
    pub params: &'a CraneParameters,
    pub controller: &'a dyn Controller,
    pub saturation: Option<[Option<f64>; 3]>,
    pub disturbance: Option<&'a Disturbance>,
}

#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub commanded: ActuationInput,
    pub applied: ActuationInput,
    pub wind_force: Vector3<f64>,
    pub qddot: Vector5<f64>,
}

impl<'a> ClosedLoop<'a> {
    pub fn from_config(
        config: &'a SimulationConfig,
        controller: &'a dyn Controller,
        params: &'a CraneParameters,
    ) -> Self {
        Self { params, controller, saturation: config.saturation, disturbance: config.disturbance.as_ref() }
    }

    pub fn evaluate(&self, t: f64, state: &GeneralizedState) -> Result<Evaluation> {
        let commanded = self.controller.actuation(t, state, self.params)?;
        let applied = match &self.saturation {
            Some(bounds) => commanded.saturate(bounds),
            None => commanded,
        };
        let wind_force = self.disturbance.map_or_else(Vector3::zeros, |d| d.force(t, state));
        let f_ext = if wind_force == Vector3::zeros() {
            Vector5::zeros()
        } else {
            generalized_force(state, &wind_force, self.params)
        };
        let qddot = forward_dynamics(state, &applied, &f_ext, self.params)?;
        Ok(Evaluation { commanded, applied, wind_force, qddot })
    }
}

/// One classical RK4 step; control, saturation and wind are re-evaluated at
/// every stage.
pub fn step(loop_: &ClosedLoop<'_>, t: f64, state: &GeneralizedState, dt: f64) -> Result<GeneralizedState> {
    let deriv = |tau: f64, s: &GeneralizedState| -> Result<(Vector5<f64>, Vector5<f64>)> {
        Ok((s.qdot, loop_.evaluate(tau, s)?.qddot))
    };
    let offset =
        |k: &(Vector5<f64>, Vector5<f64>), h: f64| GeneralizedState::new(state.q + k.0 * h, state.qdot + k.1 * h);
    let k1 = deriv(t, state)?;
    let k2 = deriv(t + 0.5 * dt, &offset(&k1, 0.5 * dt))?;
    let k3 = deriv(t + 0.5 * dt, &offset(&k2, 0.5 * dt))?;
    let k4 = deriv(t + dt, &offset(&k3, dt))?;
    let w = dt / 6.0;
    Ok(GeneralizedState::new(
        state.q + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * w,
        state.qdot + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * w,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub state: GeneralizedState,
    pub u_commanded: Vector3<f64>,
    pub u_applied: Vector3<f64>,
    pub wind_force: Vector3<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub samples: Vec<LogSample>,
}

impl TrajectoryLog {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&LogSample> {
        self.samples.last()
    }
}

fn record(loop_: &ClosedLoop<'_>, t: f64, state: &GeneralizedState) -> Result<LogSample> {
    let eval = loop_.evaluate(t, state)?;
    Ok(LogSample {
        t,
        state: *state,
        u_commanded: eval.commanded.0,
        u_applied: eval.applied.0,
        wind_force: eval.wind_force,
        energy: total_energy(state, loop_.params)?,
    })
}

/// Integrates from `config.initial_state`; the first invalid state aborts the
/// run with the time at which it occurred.
pub fn run(config: &SimulationConfig, controller: &dyn Controller, params: &CraneParameters) -> Result<TrajectoryLog> {
    config.validate()?;
    let loop_ = ClosedLoop::from_config(config, controller, params);
    let abort = |time: f64| move |e: CraneError| CraneError::Aborted { time, source: Box::new(e) };

    let mut samples = Vec::with_capacity(config.sample_count());
    let mut state = config.initial_state;
    samples.push(record(&loop_, 0.0, &state).map_err(abort(0.0))?);
    for k in 0..config.steps() {
        let t = k as f64 * config.dt;
        let t_next = (k + 1) as f64 * config.dt;
        state = step(&loop_, t, &state, config.dt).map_err(abort(t))?;
        state.validate().map_err(abort(t_next))?;
        if (k + 1) % config.record_stride == 0 {
            samples.push(record(&loop_, t_next, &state).map_err(abort(t_next))?);
        }
    }
    log::debug!("run finished: {} samples, controller {}", samples.len(), controller.name());
    Ok(TrajectoryLog { samples })
}

/// Settling band as a fraction of the commanded change.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Per actuated coordinate; `None` when the band is never held to the end.
    pub settling_time: [Option<f64>; 3],
    pub peak_theta1_deg: f64,
    pub peak_theta2_deg: f64,
    /// Peak magnitude of each applied input.
    pub peak_u: [f64; 3],
    /// Largest sway angle at the final sample.
    pub final_sway_deg: f64,
}

pub fn metrics(log: &TrajectoryLog, q1d: &Vector3<f64>) -> Result<RunMetrics> {
    let first =
        log.samples.first().ok_or_else(|| CraneError::Config("cannot compute metrics of an empty log".into()))?;
    let last = log.samples.last().expect("non-empty");

    let settling_time = std::array::from_fn(|i| {
        let band = SETTLING_BAND * (q1d[i] - first.state.q[i]).abs();
        let outside = log.samples.iter().rposition(|s| (s.state.q[i] - q1d[i]).abs() > band);
        match outside {
            None => Some(first.t),
            Some(k) if k + 1 < log.samples.len() => Some(log.samples[k + 1].t),
            Some(_) => None,
        }
    });
    let peak = |f: &dyn Fn(&LogSample) -> f64| log.samples.iter().map(|s| f(s).abs()).fold(0.0, f64::max);
    Ok(RunMetrics {
        settling_time,
        peak_theta1_deg: peak(&|s| s.state.theta1()).to_degrees(),
        peak_theta2_deg: peak(&|s| s.state.theta2()).to_degrees(),
        peak_u: std::array::from_fn(|i| peak(&|s| s.u_applied[i])),
        final_sway_deg: last.state.theta1().abs().max(last.state.theta2().abs()).to_degrees(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{control_input, reduced_dynamics, ControllerGains, Passive, Reference, SwingDamping};
    use crate::dynamics::dynamics_matrices;
    use approx::assert_relative_eq;

    const P: CraneParameters = CraneParameters::NK1000;

    /// Cancels the actuated dynamics with zero commanded acceleration, so the
    /// actuated coordinates stay where they start when at rest.
    struct Freeze;
    impl Controller for Freeze {
        fn name(&self) -> &str {
            "freeze"
        }
        fn actuation(&self, _: f64, s: &GeneralizedState, p: &CraneParameters) -> Result<ActuationInput> {
            let rd = reduced_dynamics(&dynamics_matrices(s, p)?)?;
            Ok(control_input(s, &rd, &Vector3::zeros()))
        }
    }

    fn config(initial: GeneralizedState, duration: f64, dt: f64) -> SimulationConfig {
        SimulationConfig { dt, duration, initial_state: initial, saturation: None, disturbance: None, record_stride: 1 }
    }

    #[test]
    fn equilibrium_is_preserved() {
        let s = GeneralizedState::at_rest(Vector5::new(0.2, 0.4, 5.0, 0.0, 0.0));
        let loop_ = ClosedLoop { params: &P, controller: &Freeze, saturation: None, disturbance: None };
        let next = step(&loop_, 0.0, &s, 1e-3).unwrap();
        assert!((next.q - s.q).amax() < 1e-12 && next.qdot.amax() < 1e-12);
    }

    #[test]
    fn frozen_support_pendulum_period() {
        let s = GeneralizedState::at_rest(Vector5::new(0.0, 0.4, 5.0, 0.01, 0.0));
        let log = run(&config(s, 12.0, 1e-3), &Freeze, &P).unwrap();
        // upward zero crossings of theta1
        let crossings: Vec<f64> = log
            .samples
            .windows(2)
            .filter(|w| w[0].state.theta1() < 0.0 && w[1].state.theta1() >= 0.0)
            .map(|w| {
                let (a, b) = (w[0].state.theta1(), w[1].state.theta1());
                w[0].t + (w[1].t - w[0].t) * (-a) / (b - a)
            })
            .collect();
        assert!(crossings.len() >= 2);
        let period = crossings[1] - crossings[0];
        let expected = 2.0 * std::f64::consts::PI * (5.0f64 / 9.81).sqrt();
        assert_relative_eq!(expected, 4.487, epsilon = 2e-3);
        assert!((period - expected).abs() / expected < 0.005, "{period}");
    }

    #[test]
    fn sample_count_follows_stride() {
        let s = GeneralizedState::at_rest(Vector5::new(0.0, 0.4, 5.0, 0.0, 0.0));
        let mut cfg = config(s, 0.1, 1e-3);
        cfg.record_stride = 7;
        let log = run(&cfg, &Freeze, &P).unwrap();
        assert_eq!(log.samples.len(), (0.1f64 / (1e-3 * 7.0)).floor() as usize + 1);
        assert!(log.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn saturation_is_applied_elementwise() {
        let s = GeneralizedState::at_rest(Vector5::new(0.0, 0.2, 5.0, 0.0, 0.0));
        let controller =
            SwingDamping { gains: ControllerGains::nk1000(), reference: Reference::set_point(0.5, 0.6, 4.0).unwrap() };
        let mut cfg = config(s, 1.0, 1e-3);
        cfg.saturation = Some([Some(2000.0), Some(15_000.0), None]);
        let log = run(&cfg, &controller, &P).unwrap();
        for smp in &log.samples {
            let clamped = ActuationInput(smp.u_commanded).saturate(&[Some(2000.0), Some(15_000.0), None]).0;
            assert_eq!(smp.u_applied, clamped);
        }
        assert!(log.samples.iter().any(|s| s.u_applied[1] == 15_000.0));
    }

    #[test]
    fn invalid_state_aborts_with_time() {
        // a large negative rope force hauls the payload up into the boom tip
        struct Haul;
        impl Controller for Haul {
            fn name(&self) -> &str {
                "haul"
            }
            fn actuation(&self, _: f64, s: &GeneralizedState, p: &CraneParameters) -> Result<ActuationInput> {
                let g = dynamics_matrices(s, p)?.g1();
                Ok(ActuationInput(Vector3::new(g[0], g[1], g[2] - 5000.0)))
            }
        }
        let s = GeneralizedState::at_rest(Vector5::new(0.0, 0.3, 0.5, 0.0, 0.0));
        let err = run(&config(s, 5.0, 1e-3), &Haul, &P).unwrap_err();
        match err {
            CraneError::Aborted { time, .. } => assert!(time > 0.0 && time < 5.0),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn passive_run_conserves_energy_briefly() {
        let s = GeneralizedState::new(Vector5::new(0.0, 0.3, 5.0, 0.1, -0.1), Vector5::new(0.2, 0.0, 0.0, 0.0, 0.1));
        let log = run(&config(s, 1.0, 1e-3), &Passive, &P).unwrap();
        let e0 = log.samples[0].energy;
        let drift = log.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max) / e0.abs();
        assert!(drift < 1e-9, "{drift}");
    }

    fn synthetic(times: &[f64], alpha: impl Fn(f64) -> f64) -> TrajectoryLog {
        TrajectoryLog {
            samples: times
                .iter()
                .map(|&t| LogSample {
                    t,
                    state: GeneralizedState::at_rest(Vector5::new(alpha(t), 0.5, 4.0, 0.0, 0.0)),
                    u_commanded: Vector3::zeros(),
                    u_applied: Vector3::zeros(),
                    wind_force: Vector3::zeros(),
                    energy: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn constant_log_at_reference_settles_immediately() {
        let log = synthetic(&[0.0, 1.0, 2.0], |_| 1.0);
        let m = metrics(&log, &Vector3::new(1.0, 0.5, 4.0)).unwrap();
        assert_eq!(m.settling_time, [Some(0.0); 3]);
        assert_eq!((m.peak_theta1_deg, m.peak_theta2_deg, m.final_sway_deg), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exponential_approach_settles_at_ln_50() {
        let dt = 1e-3;
        let times: Vec<f64> = (0..=10_000).map(|k| k as f64 * dt).collect();
        let log = synthetic(&times, |t| 1.0 - (-t).exp());
        let m = metrics(&log, &Vector3::new(1.0, 0.5, 4.0)).unwrap();
        let ts = m.settling_time[0].unwrap();
        assert!((ts - 50f64.ln()).abs() <= dt, "{ts}");
    }

    #[test]
    fn band_never_held_is_not_settled() {
        let log = synthetic(&[0.0, 1.0, 2.0], |t| if t < 2.0 { 0.0 } else { 0.5 });
        let m = metrics(&log, &Vector3::new(1.0, 0.5, 4.0)).unwrap();
        assert_eq!(m.settling_time[0], None);
        assert!(metrics(&TrajectoryLog::default(), &Vector3::zeros()).is_err());
    }
}

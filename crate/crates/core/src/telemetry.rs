//! CSV output: trajectory log, run metrics and per-figure plot series.
//! Floats carry 17 significant digits so values survive a round trip.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Vector3, Vector5};

use crate::error::{CraneError, Result};
use crate::model::GeneralizedState;
use crate::sim::{LogSample, RunMetrics, TrajectoryLog};

pub const TRAJECTORY_HEADER: [&str; 21] = [
    "t",
    "alpha",
    "beta",
    "d",
    "theta1",
    "theta2",
    "alpha_dot",
    "beta_dot",
    "d_dot",
    "theta1_dot",
    "theta2_dot",
    "u1_cmd",
    "u2_cmd",
    "u3_cmd",
    "u1_app",
    "u2_app",
    "u3_app",
    "Fw_x",
    "Fw_y",
    "Fw_z",
    "energy",
];

pub const METRICS_HEADER: [&str; 2] = ["metric", "value"];
pub const NOT_SETTLED: &str = "not_settled";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| CraneError::Config(format!("not a number: {s:?}")))
}

pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &log.samples {
        let row = std::iter::once(s.t)
            .chain(s.state.q.iter().copied())
            .chain(s.state.qdot.iter().copied())
            .chain(s.u_commanded.iter().copied())
            .chain(s.u_applied.iter().copied())
            .chain(s.wind_force.iter().copied())
            .chain(std::iter::once(s.energy));
        w.write_record(row.map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryLog> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRAJECTORY_HEADER {
        return Err(CraneError::Config(format!("unexpected trajectory header {header:?}")));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let v: Vec<f64> = rec?.iter().map(parse_f64).collect::<Result<_>>()?;
        samples.push(LogSample {
            t: v[0],
            state: GeneralizedState::new(Vector5::from_column_slice(&v[1..6]), Vector5::from_column_slice(&v[6..11])),
            u_commanded: Vector3::from_column_slice(&v[11..14]),
            u_applied: Vector3::from_column_slice(&v[14..17]),
            wind_force: Vector3::from_column_slice(&v[17..20]),
            energy: v[20],
        });
    }
    Ok(TrajectoryLog { samples })
}

fn metric_rows(m: &RunMetrics) -> Vec<(&'static str, String)> {
    let settle = |t: Option<f64>| t.map_or_else(|| NOT_SETTLED.to_owned(), fmt_f64);
    vec![
        ("settling_time_alpha", settle(m.settling_time[0])),
        ("settling_time_beta", settle(m.settling_time[1])),
        ("settling_time_d", settle(m.settling_time[2])),
        ("peak_theta1_deg", fmt_f64(m.peak_theta1_deg)),
        ("peak_theta2_deg", fmt_f64(m.peak_theta2_deg)),
        ("peak_u1", fmt_f64(m.peak_u[0])),
        ("peak_u2", fmt_f64(m.peak_u[1])),
        ("peak_u3", fmt_f64(m.peak_u[2])),
        ("final_sway_deg", fmt_f64(m.final_sway_deg)),
    ]
}

pub fn write_metrics_csv<W: Write>(m: &RunMetrics, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for (name, value) in metric_rows(m) {
        w.write_record([name, value.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<RunMetrics> {
    let mut r = csv::Reader::from_reader(input);
    let mut values = std::collections::HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        values.insert(rec[0].to_owned(), rec[1].to_owned());
    }
    let get = |k: &str| values.get(k).ok_or_else(|| CraneError::Config(format!("metrics missing {k}")));
    let num = |k: &str| get(k).and_then(|v| parse_f64(v));
    let settle = |k: &str| -> Result<Option<f64>> {
        let v = get(k)?;
        if v == NOT_SETTLED {
            Ok(None)
        } else {
            parse_f64(v).map(Some)
        }
    };
    Ok(RunMetrics {
        settling_time: [settle("settling_time_alpha")?, settle("settling_time_beta")?, settle("settling_time_d")?],
        peak_theta1_deg: num("peak_theta1_deg")?,
        peak_theta2_deg: num("peak_theta2_deg")?,
        peak_u: [num("peak_u1")?, num("peak_u2")?, num("peak_u3")?],
        final_sway_deg: num("final_sway_deg")?,
    })
}

/// One CSV per plotted quantity: actuated coordinates with their reference,
/// sway angles in degrees, inputs and wind force.
pub fn write_plot_series(log: &TrajectoryLog, q1d: &Vector3<f64>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let series = |name: &str, header: &[&str], row: &dyn Fn(&LogSample) -> Vec<f64>| -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
        w.write_record(header)?;
        for s in &log.samples {
            w.write_record(row(s).into_iter().map(fmt_f64))?;
        }
        w.flush()?;
        Ok(())
    };
    series("alpha", &["t", "alpha", "alpha_ref"], &|s| vec![s.t, s.state.q[0], q1d[0]])?;
    series("beta", &["t", "beta", "beta_ref"], &|s| vec![s.t, s.state.q[1], q1d[1]])?;
    series("d", &["t", "d", "d_ref"], &|s| vec![s.t, s.state.q[2], q1d[2]])?;
    series("theta1", &["t", "theta1_deg"], &|s| vec![s.t, s.state.theta1().to_degrees()])?;
    series("theta2", &["t", "theta2_deg"], &|s| vec![s.t, s.state.theta2().to_degrees()])?;
    series("inputs", &["t", "u1", "u2", "u3"], &|s| vec![s.t, s.u_applied[0], s.u_applied[1], s.u_applied[2]])?;
    series("wind", &["t", "Fw_x", "Fw_y", "Fw_z"], &|s| vec![s.t, s.wind_force[0], s.wind_force[1], s.wind_force[2]])?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(seed: [f64; 8]) -> LogSample {
        LogSample {
            t: seed[0].abs(),
            state: GeneralizedState::new(
                Vector5::new(seed[1], seed[2], seed[3].abs() + 0.1, seed[4], seed[5]),
                Vector5::repeat(seed[6]),
            ),
            u_commanded: Vector3::repeat(seed[7]),
            u_applied: Vector3::new(seed[7], -seed[6], 1e-300),
            wind_force: Vector3::new(0.0, -0.0, seed[1] * 1e10),
            energy: -seed[2] / 3.0,
        }
    }

    proptest! {
        #[test]
        fn trajectory_round_trip_is_bit_exact(seed in prop::array::uniform8(-1e6f64..1e6)) {
            let log = TrajectoryLog { samples: vec![sample(seed), sample(seed.map(|v| v * 0.7 + 1.0 / 3.0))] };
            let mut buf = Vec::new();
            write_trajectory_csv(&log, &mut buf).unwrap();
            let back = read_trajectory_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, log);
        }
    }

    #[test]
    fn metrics_round_trip_including_not_settled() {
        let m = RunMetrics {
            settling_time: [Some(31.25), None, Some(0.0)],
            peak_theta1_deg: 2.4999999999999,
            peak_theta2_deg: 0.1,
            peak_u: [1.0 / 3.0, 18_200.0, 490.5],
            final_sway_deg: 1e-7,
        };
        let mut buf = Vec::new();
        write_metrics_csv(&m, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("settling_time_beta,not_settled"));
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn trajectory_header_is_checked() {
        assert!(read_trajectory_csv("t,x\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn plot_series_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let log = TrajectoryLog { samples: vec![sample([0.0, 0.1, 0.2, 3.0, 0.0, 0.0, 0.0, 5.0])] };
        write_plot_series(&log, &Vector3::new(1.0, 0.5, 4.0), dir.path()).unwrap();
        for name in ["alpha", "beta", "d", "theta1", "theta2", "inputs", "wind"] {
            assert!(dir.path().join(format!("{name}.csv")).exists(), "{name}");
        }
        let alpha = std::fs::read_to_string(dir.path().join("alpha.csv")).unwrap();
        assert!(alpha.starts_with("t,alpha,alpha_ref\n"));
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cranesim::sim::metrics;
use cranesim::telemetry::{read_metrics_csv, read_trajectory_csv, TRAJECTORY_HEADER};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn cranesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cranesim")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn edited_scenario(dir: &Path, base: &str, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(scenario(base)).unwrap()).unwrap();
    edit(&mut value);
    let path = dir.join("edited.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

#[test]
fn simulate_writes_trajectory_metrics_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1");
    let res =
        cranesim(&["simulate", "--config", scenario("scenario1").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRAJECTORY_HEADER.join(","));
    // 60 s at dt 1e-3 with stride 10
    assert_eq!(text.lines().count(), 1 + 6001);
    for name in ["alpha", "beta", "d", "theta1", "theta2", "inputs", "wind"] {
        assert!(out.join("plots").join(format!("{name}.csv")).is_file(), "{name}");
    }
    assert!(out.join("config.json").is_file());
}

#[test]
fn metrics_recomputed_from_the_csv_match_the_emitted_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2");
    let res = cranesim(&[
        "simulate",
        "--config",
        scenario("scenario2").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--no-plots",
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(!out.join("plots").exists());

    let cfg = cranesim::scenario::ScenarioConfig::load(scenario("scenario2")).unwrap();
    let log = read_trajectory_csv(std::fs::File::open(out.join("trajectory.csv")).unwrap()).unwrap();
    let emitted = read_metrics_csv(std::fs::File::open(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(metrics(&log, &cfg.q1d()).unwrap(), emitted);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(tag);
        let res = cranesim(&[
            "simulate",
            "--config",
            scenario("scenario3").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--no-plots",
        ]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        std::fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert!(run("a") == run("b"));
}

#[test]
fn negative_rope_reference_is_rejected_with_the_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_scenario(dir.path(), "scenario1", |v| v["reference"]["d"] = (-1.0).into());
    let res =
        cranesim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("reference.d"), "{}", stderr(&res));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_scenario(dir.path(), "scenario1", |v| v["simulation"]["integrator"] = "euler".into());
    let res = cranesim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("integrator"), "{}", stderr(&res));
}

#[test]
fn runaway_sway_aborts_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_scenario(dir.path(), "scenario3", |v| v["disturbance"]["gust"]["peak_speed"] = 20.0.into());
    let res =
        cranesim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));
    assert!(stderr(&res).contains("aborted"), "{}", stderr(&res));
}

#[test]
fn verify_passes_on_the_shipped_model() {
    let dir = tempfile::tempdir().unwrap();
    let res = cranesim(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    assert!(dir.path().join("oracle_report.csv").is_file());
    assert!(dir.path().join("transcription_report.csv").is_file());
}

#[test]
fn gravity_mutation_is_isolated_to_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let res = cranesim(&["verify", "--mutate", "flip-sign:row=2,term=gravity", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    let mut reader = csv::Reader::from_path(dir.path().join("oracle_report.csv")).unwrap();
    let mut flagged = std::collections::BTreeSet::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let rel: f64 = rec[5].parse().unwrap();
        if rel > 1e-6 {
            flagged.insert(rec[1].to_owned());
        }
    }
    assert_eq!(flagged.into_iter().collect::<Vec<_>>(), vec!["2".to_owned()]);
}

#[test]
fn seeded_verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let report = |tag: &str| {
        let out = dir.path().join(tag);
        let res = cranesim(&["verify", "--states", "5", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0);
        std::fs::read(out.join("oracle_report.csv")).unwrap()
    };
    let a = report("a");
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 1 + 5 * 5);
    assert!(a == report("b"));
}

#[test]
fn stability_map_of_default_gains_is_all_stable() {
    let dir = tempfile::tempdir().unwrap();
    let res = cranesim(&["stability", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let text = std::fs::read_to_string(dir.path().join("stability_map.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 51 * 51);
}

#[test]
fn zero_gains_are_marginal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_scenario(dir.path(), "scenario1", |v| {
        let g = &mut v["controller"]["gains"];
        g["k_ud"] = serde_json::json!([0.0, 0.0]);
        g["k_up"] = serde_json::json!([0.0, 0.0]);
    });
    let res = cranesim(&[
        "stability",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "beta=0.1:1.5:5,d=1:20:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 4);
    let text = std::fs::read_to_string(dir.path().join("stability_map.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("marginal")), "{text}");
}

#[test]
fn horizontal_boom_leaves_radial_block_marginal() {
    let dir = tempfile::tempdir().unwrap();
    let res = cranesim(&["stability", "--grid", "beta=0:0.5:2,d=2:4:2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 4);
    let mut reader = csv::Reader::from_path(dir.path().join("stability_map.csv")).unwrap();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let beta: f64 = rec[0].parse().unwrap();
        let expected = if beta == 0.0 { ("marginal", "stable", "marginal") } else { ("stable", "stable", "stable") };
        assert_eq!((&rec[2], &rec[4], &rec[5]), expected);
    }
}

#[test]
fn malformed_grid_is_rejected() {
    let res = cranesim(&["stability", "--grid", "beta=0:1", "--out", "unused"]);
    assert_eq!(code(&res), 1);
    assert!(!Path::new("unused").exists());
}

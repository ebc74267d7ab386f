use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use cranesim::control::{ControllerGains, ControllerRegistry};
use cranesim::oracle::{run_suite, sample_cases, transcription_report, Mutation, OracleConfig, SwayAlias};
use cranesim::scenario::ScenarioConfig;
use cranesim::sim::{metrics, run};
use cranesim::stability::{stability_map, write_stability_csv, GridSpec, Verdict};
use cranesim::telemetry::{write_metrics_csv, write_plot_series, write_trajectory_csv};
use cranesim::{CraneError, CraneParameters};

const EXIT_INVALID: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_ORACLE_DISAGREES: u8 = 3;
const EXIT_NOT_STABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "cranesim", version, about = "Boom crane simulation, model verification and stability maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory, metrics and plot series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, `runs/<scenario name>` by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the per-quantity plot CSVs.
        #[arg(long)]
        no_plots: bool,
    },
    /// Compare the closed-form dynamics with the Lagrangian oracle.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        states: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value = "runs/verify")]
        out: PathBuf,
        /// Crane parameters from a scenario file instead of the built-in set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Deliberately corrupt one term, e.g. `flip-sign:row=2,term=gravity`.
        #[arg(long)]
        mutate: Option<Mutation>,
    },
    /// Sweep the linearized sway model over a (beta, d) grid.
    Stability {
        /// Crane parameters and gains from a scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `beta=START:END:N,d=START:END:N`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "runs/stability")]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: EXIT_INVALID, error }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRANESIM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, out, no_plots } => simulate(&config, out, !no_plots),
        Command::Verify { seed, states, tolerance, out, config, mutate } => {
            verify(seed, states, tolerance, &out, config.as_deref(), mutate)
        }
        Command::Stability { config, grid, out } => stability(config.as_deref(), grid.as_deref(), &out),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn simulate(config_path: &Path, out: Option<PathBuf>, plots: bool) -> Outcome {
    let cfg = ScenarioConfig::load(config_path).map_err(|e| Failure::new(EXIT_INVALID, e))?;
    let controller =
        cfg.build_controller(&ControllerRegistry::with_builtins()).map_err(|e| Failure::new(EXIT_INVALID, e))?;
    let sim = cfg.simulation_config().map_err(|e| Failure::new(EXIT_INVALID, e))?;
    let out = out.unwrap_or_else(|| Path::new("runs").join(&cfg.metadata.name));
    log::info!("running {} ({} steps) into {}", cfg.metadata.name, sim.steps(), out.display());

    let log = match run(&sim, controller.as_ref(), &cfg.crane) {
        Ok(log) => log,
        Err(e @ CraneError::Aborted { .. }) => return Err(Failure::new(EXIT_ABORTED, e)),
        Err(e) => return Err(Failure::new(EXIT_INVALID, e)),
    };
    let m = metrics(&log, &cfg.q1d()).context("computing metrics")?;

    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    write_trajectory_csv(&log, create(&out.join("trajectory.csv"))?).context("writing trajectory")?;
    write_metrics_csv(&m, create(&out.join("metrics.csv"))?).context("writing metrics")?;
    fs::write(out.join("config.json"), cfg.to_json().context("serializing config")?)
        .context("writing resolved config")?;
    if plots {
        write_plot_series(&log, &cfg.q1d(), &out.join("plots")).context("writing plot series")?;
    }

    let settle = |t: Option<f64>| t.map_or_else(|| "not settled".to_owned(), |t| format!("{t:.2} s"));
    println!("{}: {} samples -> {}", cfg.metadata.name, log.samples.len(), out.display());
    println!(
        "  settling alpha {}, beta {}, d {}",
        settle(m.settling_time[0]),
        settle(m.settling_time[1]),
        settle(m.settling_time[2])
    );
    println!(
        "  peak |theta1| {:.3} deg, |theta2| {:.3} deg, final sway {:.3} deg",
        m.peak_theta1_deg, m.peak_theta2_deg, m.final_sway_deg
    );
    println!("  peak |u| {:.1} N m, {:.1} N m, {:.1} N", m.peak_u[0], m.peak_u[1], m.peak_u[2]);
    Ok(ExitCode::SUCCESS)
}

fn crane_from(config: Option<&Path>) -> Result<(CraneParameters, Option<ControllerGains>), Failure> {
    match config {
        None => Ok((CraneParameters::NK1000, None)),
        Some(path) => {
            let cfg = ScenarioConfig::load(path).map_err(|e| Failure::new(EXIT_INVALID, e))?;
            Ok((cfg.crane, Some(cfg.controller.gains)))
        }
    }
}

fn verify(
    seed: u64,
    states: usize,
    tolerance: f64,
    out: &Path,
    config: Option<&Path>,
    mutation: Option<Mutation>,
) -> Outcome {
    if tolerance.is_nan() || tolerance <= 0.0 || states == 0 {
        return Err(Failure::new(EXIT_INVALID, anyhow::anyhow!("--tolerance must be > 0 and --states >= 1")));
    }
    let (params, _) = crane_from(config)?;
    let oracle_cfg = OracleConfig::default();
    let cases = sample_cases(seed, states);
    let outcome = run_suite(&cases, &params, &oracle_cfg, mutation).context("oracle suite")?;
    let printed = transcription_report(&cases, &params, &oracle_cfg, SwayAlias::CONSISTENT);

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    outcome.report.write_csv(create(&out.join("oracle_report.csv"))?).context("writing oracle report")?;
    printed.write_csv(create(&out.join("transcription_report.csv"))?).context("writing transcription report")?;

    if let Some(m) = mutation {
        println!("mutation applied: {m}");
    }
    println!("{states} states, seed {seed}, tolerance {tolerance:e}");
    println!("  forward dynamics max relative deviation {:.3e}", outcome.max_forward_deviation);
    println!("  generalized force max relative deviation {:.3e}", outcome.report.max_rel_diff());
    println!(
        "  printed equations ({}) max relative deviation {:.3e}",
        SwayAlias::CONSISTENT.label(),
        printed.max_rel_diff()
    );
    println!("  reports in {}", out.display());
    if outcome.passes(tolerance) {
        println!("agreement");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("DISAGREEMENT in rows {:?}", outcome.report.flagged_rows(tolerance));
        Ok(ExitCode::from(EXIT_ORACLE_DISAGREES))
    }
}

fn stability(config: Option<&Path>, grid: Option<&str>, out: &Path) -> Outcome {
    let grid: GridSpec = match grid {
        Some(spec) => spec.parse().map_err(|e| Failure::new(EXIT_INVALID, e))?,
        None => GridSpec::default(),
    };
    let (params, gains) = crane_from(config)?;
    let gains = gains.unwrap_or_else(ControllerGains::nk1000);
    let points = stability_map(&params, &gains, &grid).map_err(|e| Failure::new(EXIT_INVALID, e))?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join("stability_map.csv");
    write_stability_csv(&points, create(&path)?).context("writing stability map")?;

    let count = |v: Verdict| points.iter().filter(|p| p.verdict == v).count();
    let (stable, marginal, unstable) = (count(Verdict::Stable), count(Verdict::Marginal), count(Verdict::Unstable));
    println!(
        "{} grid points: {stable} stable, {marginal} marginal, {unstable} unstable -> {}",
        points.len(),
        path.display()
    );
    if let Some(worst) = points.iter().max_by(|a, b| a.max_real_eigenvalue.total_cmp(&b.max_real_eigenvalue)) {
        println!(
            "  largest real part {:.4e} at beta = {:.4}, d = {:.4}",
            worst.max_real_eigenvalue, worst.beta, worst.d
        );
    }
    Ok(if stable == points.len() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_STABLE) })
}

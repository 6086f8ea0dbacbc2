//! `immfpf`: run IMM feedback particle filter experiments from a config file.
//!
//! Every failure prints exactly one JSON line on stderr,
//! `{"error":"<kind>","message":"..."}`, and exits nonzero.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imm_fpf::model::ScalarFn;
use imm_fpf::oracle::{gain_check, Grid1D};
use imm_fpf::scenario::{
    mu_csv, observations_csv, parse_observations_csv, run_filter, simulate_scenario, truth_csv, Metrics, OracleRun,
    RunResult, SweepSummary,
};
use imm_fpf::{parse_config, run_oracle, run_scenario, seed_sweep, Error, MuUpdate, ScenarioConfig};
use serde_json::{json, Value};

const OUT_ENV: &str = "IMMFPF_OUT";

#[derive(Parser)]
#[command(name = "immfpf", version, about = "IMM feedback particle filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate truth and observations (truth.csv, observations.csv).
    Simulate(RunArgs),
    /// Run the filter (estimate.csv, mu.csv) on simulated or given observations.
    Filter {
        #[command(flatten)]
        run: RunArgs,
        /// `t,dz` CSV to filter instead of a fresh simulation.
        #[arg(long)]
        observations: Option<PathBuf>,
    },
    /// Run the experiment plus the grid density solver on the same increments.
    Oracle(RunArgs),
    /// Simulate, filter and score one seed.
    Experiment(RunArgs),
    /// Run every configured seed and aggregate the metrics.
    Sweep(RunArgs),
    /// Compare the constant gain with the exact grid gain on N(0,1) particles.
    GainCheck(GainArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML).
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to $IMMFPF_OUT, then the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    mu_update: Option<MuArg>,
}

#[derive(Args)]
struct GainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Particle counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10000])]
    particles: Vec<usize>,
    /// Observation noise intensity used to rescale h.
    #[arg(long, default_value_t = 0.015)]
    obs_noise: f64,
    /// Length scale L of h(x) = atan(x / L).
    #[arg(long, default_value_t = 10.0)]
    length: f64,
    #[arg(long, default_value_t = -8.0)]
    x_min: f64,
    #[arg(long, default_value_t = 8.0)]
    x_max: f64,
    #[arg(long, default_value_t = 1600)]
    cells: usize,
    /// Also write gain_check.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MuArg {
    Euler,
    Bayes,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::NotSquare { .. } => "not_square",
                Error::NegativeOffDiagonal { .. } => "negative_off_diagonal",
                Error::RowSumNonzero { .. } => "row_sum_nonzero",
                Error::StepTooLarge { .. } => "step_too_large",
                Error::InvalidModel(_) => "invalid_model",
                Error::NonFiniteState { .. } => "non_finite_state",
                Error::StabilityViolation(_) => "stability_violation",
                Error::MassEscape { .. } => "mass_escape",
                Error::BoundaryResidualLarge { .. } => "boundary_residual_large",
                Error::SegmentShorterThanBurnIn { .. } => "segment_shorter_than_burn_in",
                Error::Validation(_) => "validation",
                Error::Parse(_) => "parse",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let line = json!({ "error": kind, "message": message.replace('\n', " ") });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.message(), 1),
    }
}

fn load(args: &RunArgs) -> Result<(ScenarioConfig, PathBuf, u64), CliError> {
    let mut config = parse_config(&args.config)?;
    if let Some(n) = args.particles {
        config.n_particles = n;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(m) = args.mu_update {
        config.mu_update = match m {
            MuArg::Euler => MuUpdate::Euler,
            MuArg::Bayes => MuUpdate::Bayes,
        };
    }
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    config.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = config.seeds[0];
    Ok((config, out, seed))
}

/// Writes `contents` next to its final location and renames it into place.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    for (name, body) in files {
        write_atomic(dir, name, body)?;
    }
    Ok(())
}

fn mu_name(m: MuUpdate) -> &'static str {
    match m {
        MuUpdate::Euler => "euler",
        MuUpdate::Bayes => "bayes",
    }
}

fn metrics_json(config: &ScenarioConfig, seed: u64, m: &Metrics, degenerate: usize) -> Value {
    json!({
        "seed": seed,
        "n_particles": config.n_particles,
        "dt": config.dt,
        "horizon": config.horizon,
        "mu_update": mu_name(config.mu_update),
        "burn_in": config.burn_in,
        "rmse": m.rmse,
        "rmse_post_burn_in": m.rmse_post_burn_in,
        "mode_accuracy": m.mode_accuracy,
        "degenerate_steps": degenerate,
        "runtime_s": m.runtime_s,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn experiment_files(config: &ScenarioConfig, r: &RunResult) -> Vec<(String, String)> {
    vec![
        ("truth.csv".into(), truth_csv(&r.truth)),
        ("observations.csv".into(), observations_csv(&r.observations)),
        ("estimate.csv".into(), r.estimate_csv()),
        ("mu.csv".into(), r.mu_csv()),
        (
            "metrics.json".into(),
            pretty(&metrics_json(config, r.seed, &r.metrics, r.filter.degenerate_steps.len())),
        ),
    ]
}

fn oracle_files(config: &ScenarioConfig, o: &OracleRun) -> Vec<(String, String)> {
    let mut files = experiment_files(config, &o.result);
    files.push(("oracle_moments.csv".into(), o.moments_csv()));
    let dt = config.dt;
    for (t, d) in &o.snapshots {
        let step = (t / dt).round() as usize;
        files.push((format!("oracle_density_{step:06}.csv"), d.to_csv()));
    }
    files
}

fn sweep_files(config: &ScenarioConfig, s: &SweepSummary) -> Vec<(String, String)> {
    let summary = json!({
        "seeds": config.seeds,
        "n_particles": config.n_particles,
        "dt": config.dt,
        "mu_update": mu_name(config.mu_update),
        "burn_in": config.burn_in,
        "rmse_mean": s.rmse_mean,
        "rmse_std": s.rmse_std,
        "rmse_post_burn_in_mean": s.rmse_post_mean,
        "rmse_post_burn_in_std": s.rmse_post_std,
        "mode_accuracy_mean": s.accuracy_mean,
        "mode_accuracy_std": s.accuracy_std,
    });
    vec![
        ("sweep.csv".into(), s.table_csv()),
        ("metrics.json".into(), pretty(&summary)),
    ]
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let (config, out, seed) = load(&args)?;
            let (truth, obs) = simulate_scenario(&config, seed)?;
            write_all(
                &out,
                &[
                    ("truth.csv".into(), truth_csv(&truth)),
                    ("observations.csv".into(), observations_csv(&obs)),
                ],
            )
        }
        Command::Filter { run, observations } => {
            let (config, out, seed) = load(&run)?;
            let obs = match observations {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    parse_observations_csv(&text, config.dt)?
                }
                None => simulate_scenario(&config, seed)?.1,
            };
            let f = run_filter(&config, &obs, seed)?;
            let times: Vec<f64> = (0..f.mu.len()).map(|k| k as f64 * config.dt).collect();
            let mut est = String::from("t,xhat");
            for m in 0..config.model.n_modes() {
                est.push_str(&format!(",xhat_mode_{}", m + 1));
            }
            est.push('\n');
            for (k, t) in times.iter().enumerate() {
                est.push_str(&format!("{t:.16e},{:.16e}", f.estimate[k]));
                for v in &f.mode_means[k] {
                    est.push_str(&format!(",{v:.16e}"));
                }
                est.push('\n');
            }
            write_all(
                &out,
                &[("estimate.csv".into(), est), ("mu.csv".into(), mu_csv(&times, &f.mu))],
            )
        }
        Command::Experiment(args) => {
            let (config, out, seed) = load(&args)?;
            let r = run_scenario(&config, seed)?;
            write_all(&out, &experiment_files(&config, &r))?;
            println!("{}", metrics_json(&config, seed, &r.metrics, r.filter.degenerate_steps.len()));
            Ok(())
        }
        Command::Oracle(args) => {
            let (config, out, seed) = load(&args)?;
            let o = run_oracle(&config, seed)?;
            write_all(&out, &oracle_files(&config, &o))
        }
        Command::Sweep(args) => {
            let (config, out, _) = load(&args)?;
            let s = seed_sweep(&config)?;
            write_all(&out, &sweep_files(&config, &s))?;
            print!("{}", s.table_csv());
            Ok(())
        }
        Command::GainCheck(args) => {
            let grid = Grid1D::new(args.x_min, args.x_max, args.cells)?;
            let obs = ScalarFn::Arctan { length: args.length };
            let rows = gain_check(&args.particles, obs, args.obs_noise, &grid, args.seed)?;
            let mut csv = String::from("n,bandwidth,constant_gain,expected_exact,abs_error,tolerance,pass\n");
            println!(
                "{:>8} {:>10} {:>16} {:>16} {:>12} {:>12} {:>5}",
                "N", "bandwidth", "constant_gain", "E[K_exact]", "abs_error", "tolerance", "ok"
            );
            for r in &rows {
                let ok = r.abs_error <= r.tolerance;
                println!(
                    "{:>8} {:>10.4} {:>16.8e} {:>16.8e} {:>12.4e} {:>12.4e} {:>5}",
                    r.n_particles, r.bandwidth, r.constant_gain, r.expected_exact, r.abs_error, r.tolerance, ok
                );
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{ok}\n",
                    r.n_particles, r.bandwidth, r.constant_gain, r.expected_exact, r.abs_error, r.tolerance
                ));
            }
            for w in rows.windows(2) {
                println!(
                    "error ratio N={} -> N={}: {:.3}",
                    w[0].n_particles,
                    w[1].n_particles,
                    w[0].abs_error / w[1].abs_error
                );
            }
            match args.out {
                Some(dir) => write_atomic(&dir, "gain_check.csv", &csv),
                None => Ok(()),
            }
        }
    }
}

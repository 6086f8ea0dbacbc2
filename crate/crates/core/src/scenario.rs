//! End-to-end experiments: simulate a truth and its observations, run the
//! filter bank with the mode-probability recursion, optionally run the grid
//! oracle on the same increments, and score the result.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fpf::{advance_bank, bank_estimate, ControlStep, FilterConfig, ModeStatistics, ParticleBank, ParticleNoise};
use crate::model::{
    simulate_truth, step_count, synthesize_observations, HybridModel, ModeSchedule, ObservationPath,
    TruthTrajectory,
};
use crate::mode_prob::{mu_step_bayes, mu_step_euler, ModeProbabilities};
use crate::oracle::grid::{grid_moments, kushner_grid_step_with, Correction, Grid1D, GridDensity, MomentTarget, Moments};
use crate::rng::SeedStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuUpdate {
    #[default]
    Euler,
    Bayes,
}

/// Initial density of every particle population, `N(mean, std^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    pub x0: f64,
    pub schedule: ModeSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub grid: Grid1D,
    pub correction: Correction,
    /// Record a density snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: HybridModel,
    pub truth: TruthSpec,
    pub prior: Prior,
    pub dt: f64,
    pub horizon: f64,
    pub n_particles: usize,
    pub mu_update: MuUpdate,
    pub clamp_floor: f64,
    pub c_cap: f64,
    pub control_step: ControlStep,
    pub seeds: Vec<u64>,
    pub burn_in: f64,
    pub oracle: Option<OracleSettings>,
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub const DEFAULT_BURN_IN: f64 = 1.0;

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            dt: self.dt,
            clamp_floor: self.clamp_floor,
            c_cap: self.c_cap,
            control_step: self.control_step,
            ..FilterConfig::new(self.dt)
        }
    }

    pub fn n_steps(&self) -> Result<usize> {
        step_count(self.dt, self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        self.n_steps()?;
        if self.n_particles < 2 {
            return Err(Error::Validation(format!("n_particles must be >= 2, got {}", self.n_particles)));
        }
        if !(self.prior.std >= 0.0 && self.prior.std.is_finite() && self.prior.mean.is_finite()) {
            return Err(Error::Validation("prior mean/std must be finite with std >= 0".into()));
        }
        if !self.truth.x0.is_finite() {
            return Err(Error::Validation("truth x0 must be finite".into()));
        }
        if !(self.burn_in >= 0.0) {
            return Err(Error::Validation("burn_in must be >= 0".into()));
        }
        let m = self.model.n_modes();
        match &self.truth.schedule {
            ModeSchedule::Scripted(sw) => {
                if sw.iter().any(|s| s.mode >= m) {
                    return Err(Error::Validation("switch mode out of range".into()));
                }
            }
            ModeSchedule::Chain { initial_mode } if *initial_mode >= m => {
                return Err(Error::Validation("truth initial_mode out of range".into()));
            }
            _ => {}
        }
        self.filter_config().validate(m)
    }
}

/// Filter outputs on the time grid `t_k = k dt`, `n_steps + 1` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub estimate: Vec<f64>,
    pub mode_means: Vec<Vec<f64>>,
    pub mode_variances: Vec<Vec<f64>>,
    pub mu: Vec<ModeProbabilities>,
    /// Steps at which the Bayes update fell back to the prediction.
    pub degenerate_steps: Vec<usize>,
}

/// Runs the filter bank and mode-probability recursion over `obs`.
pub fn run_filter(config: &ScenarioConfig, obs: &ObservationPath, seed: u64) -> Result<FilterRun> {
    let fc = config.filter_config();
    fc.validate(config.model.n_modes())?;
    if (obs.dt - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::Validation(format!(
            "observation step {} differs from filter step {}",
            obs.dt, config.dt
        )));
    }
    let model = &config.model;
    let streams = SeedStreams::new(seed);
    let n_modes = model.n_modes();
    let mut bank = ParticleBank::sample_gaussian(n_modes, config.n_particles, config.prior.mean, config.prior.std, &streams)?;
    let mut noise = ParticleNoise::new(n_modes, &streams);
    let mut mu = ModeProbabilities::new(model.initial_mode_dist.clone())?;
    let n = obs.increments.len();
    let mut run = FilterRun {
        estimate: Vec::with_capacity(n + 1),
        mode_means: Vec::with_capacity(n + 1),
        mode_variances: Vec::with_capacity(n + 1),
        mu: Vec::with_capacity(n + 1),
        degenerate_steps: Vec::new(),
    };
    let record = |run: &mut FilterRun, bank: &ParticleBank, mu: &ModeProbabilities| {
        run.estimate.push(bank_estimate(bank, mu.as_slice()));
        run.mode_means.push(bank.means());
        run.mode_variances.push((0..bank.n_modes()).map(|m| bank.mode_variance(m)).collect());
        run.mu.push(mu.clone());
    };
    record(&mut run, &bank, &mu);
    let inv_sw = 1.0 / model.obs_noise_intensity;
    for (k, &dz) in obs.increments.iter().enumerate() {
        let stats = ModeStatistics::compute(&bank, &mu, model, &fc);
        let next_mu = match config.mu_update {
            MuUpdate::Euler => mu_step_euler(
                &mu,
                &stats.h_hat_mode,
                stats.h_hat_global,
                &model.generator,
                dz * inv_sw,
                fc.dt,
                fc.clamp_floor,
            ),
            MuUpdate::Bayes => {
                let step = mu_step_bayes(&mu, &bank, model, dz, fc.dt, fc.clamp_floor);
                if step.degenerate {
                    run.degenerate_steps.push(k);
                }
                step.mu
            }
        };
        bank = advance_bank(&bank, &stats, dz, model, &fc, &mut noise).map_err(|e| match e {
            Error::NonFiniteState { mode, .. } => Error::NonFiniteState { step: k, mode },
            other => other,
        })?;
        mu = next_mu;
        record(&mut run, &bank, &mu);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub rmse: f64,
    /// RMSE over steps at least `burn_in` after each truth mode change.
    pub rmse_post_burn_in: f64,
    /// Per-segment mode accuracy; `None` when a segment is shorter than the burn-in.
    pub mode_accuracy: Option<Vec<f64>>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub truth: TruthTrajectory,
    pub observations: ObservationPath,
    pub filter: FilterRun,
    pub metrics: Metrics,
}

fn now() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

fn simulate(config: &ScenarioConfig, seed: u64) -> Result<(TruthTrajectory, ObservationPath)> {
    let truth = simulate_truth(&config.model, &config.truth.schedule, config.truth.x0, config.dt, config.horizon, seed)?;
    let obs = synthesize_observations(&config.model, &truth, seed)?;
    Ok((truth, obs))
}

/// Simulates truth and observations for `seed`.
pub fn simulate_scenario(config: &ScenarioConfig, seed: u64) -> Result<(TruthTrajectory, ObservationPath)> {
    config.validate()?;
    simulate(config, seed)
}

pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let start = now();
    let (truth, observations) = simulate(config, seed)?;
    let filter = run_filter(config, &observations, seed)?;
    let mut result = RunResult {
        seed,
        truth,
        observations,
        filter,
        metrics: Metrics::default(),
    };
    result.metrics = score(&result, config.burn_in);
    result.metrics.runtime_s = start.map_or(0.0, |s| s.elapsed().as_secs_f64());
    Ok(result)
}

/// Maximal runs of constant truth mode, as `(start index, end index exclusive)`.
fn segments(modes: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=modes.len() {
        if k == modes.len() || modes[k] != modes[start] {
            out.push((start, k));
            start = k;
        }
    }
    out
}

fn post_burn_in(times: &[f64], seg: (usize, usize), burn_in: f64, dt: f64) -> std::ops::Range<usize> {
    let t0 = times[seg.0];
    let first = (seg.0..seg.1)
        .find(|&k| times[k] - t0 >= burn_in - 1e-9 * dt)
        .unwrap_or(seg.1);
    first..seg.1
}

/// Fraction of post-burn-in steps per truth segment at which the most
/// probable mode (ties to the lower index) is the true one.
pub fn mode_accuracy(result: &RunResult, burn_in: f64) -> Result<Vec<f64>> {
    segment_accuracy(&result.truth, &result.filter.mu, burn_in)
}

pub fn segment_accuracy(truth: &TruthTrajectory, mu: &[ModeProbabilities], burn_in: f64) -> Result<Vec<f64>> {
    segments(&truth.modes)
        .into_iter()
        .enumerate()
        .map(|(i, seg)| {
            let range = post_burn_in(&truth.times, seg, burn_in, truth.dt);
            if range.is_empty() {
                return Err(Error::SegmentShorterThanBurnIn {
                    segment: i,
                    duration: (seg.1 - seg.0) as f64 * truth.dt,
                    burn_in,
                });
            }
            let hits = range.clone().filter(|&k| mu[k].argmax() == truth.modes[k]).count();
            Ok(hits as f64 / range.len() as f64)
        })
        .collect()
}

fn score(result: &RunResult, burn_in: f64) -> Metrics {
    let truth = &result.truth;
    let est = &result.filter.estimate;
    let sq: Vec<f64> = truth.states.iter().zip(est).map(|(x, e)| (x - e).powi(2)).collect();
    let rmse = (sq.iter().sum::<f64>() / sq.len() as f64).sqrt();
    let post: Vec<f64> = segments(&truth.modes)
        .into_iter()
        .flat_map(|seg| post_burn_in(&truth.times, seg, burn_in, truth.dt))
        .map(|k| sq[k])
        .collect();
    let rmse_post_burn_in = if post.is_empty() {
        f64::NAN
    } else {
        (post.iter().sum::<f64>() / post.len() as f64).sqrt()
    };
    Metrics {
        rmse,
        rmse_post_burn_in,
        mode_accuracy: mode_accuracy(result, burn_in).ok(),
        runtime_s: 0.0,
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunResult {
    pub fn n_modes(&self) -> usize {
        self.filter.mu.first().map_or(0, ModeProbabilities::len)
    }

    /// `t,x,mode` with 1-based mode labels.
    pub fn truth_csv(&self) -> String {
        truth_csv(&self.truth)
    }

    pub fn observations_csv(&self) -> String {
        observations_csv(&self.observations)
    }

    /// `t,xhat,xhat_mode_1..M`.
    pub fn estimate_csv(&self) -> String {
        let mut out = String::from("t,xhat");
        for m in 0..self.n_modes() {
            let _ = write!(out, ",xhat_mode_{}", m + 1);
        }
        out.push('\n');
        for (k, t) in self.truth.times.iter().enumerate() {
            let _ = write!(out, "{},{}", fmt17(*t), fmt17(self.filter.estimate[k]));
            for x in &self.filter.mode_means[k] {
                let _ = write!(out, ",{}", fmt17(*x));
            }
            out.push('\n');
        }
        out
    }

    /// `t,mu_1..M`.
    pub fn mu_csv(&self) -> String {
        mu_csv(&self.truth.times, &self.filter.mu)
    }
}

pub fn truth_csv(truth: &TruthTrajectory) -> String {
    let mut out = String::from("t,x,mode\n");
    for k in 0..truth.len() {
        let _ = writeln!(out, "{},{},{}", fmt17(truth.times[k]), fmt17(truth.states[k]), truth.modes[k] + 1);
    }
    out
}

/// `t,dz`, where `t` is the end of the increment's interval.
pub fn observations_csv(obs: &ObservationPath) -> String {
    let mut out = String::from("t,dz\n");
    for (k, dz) in obs.increments.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt17((k + 1) as f64 * obs.dt), fmt17(*dz));
    }
    out
}

pub fn mu_csv(times: &[f64], mu: &[ModeProbabilities]) -> String {
    let mut out = String::from("t");
    for m in 0..mu.first().map_or(0, ModeProbabilities::len) {
        let _ = write!(out, ",mu_{}", m + 1);
    }
    out.push('\n');
    for (t, p) in times.iter().zip(mu) {
        out.push_str(&fmt17(*t));
        for v in p.as_slice() {
            let _ = write!(out, ",{}", fmt17(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses a `t,dz` file back into increments with step `dt`.
pub fn parse_observations_csv(text: &str, dt: f64) -> Result<ObservationPath> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("t,dz") => {}
        other => return Err(Error::Parse(format!("expected header 't,dz', got {other:?}"))),
    }
    let mut increments = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut cols = line.split(',');
        let (t, dz) = (cols.next(), cols.next());
        let parse = |s: Option<&str>| s.and_then(|v| v.trim().parse::<f64>().ok());
        match (parse(t), parse(dz), cols.next()) {
            (Some(t), Some(dz), None) if dz.is_finite() => {
                let expect = (increments.len() + 1) as f64 * dt;
                if (t - expect).abs() > 1e-9 * expect.max(1.0) {
                    return Err(Error::Parse(format!("line {}: time {t} off the step grid", i + 2)));
                }
                increments.push(dz);
            }
            _ => return Err(Error::Parse(format!("line {}: expected two finite numbers", i + 2))),
        }
    }
    Ok(ObservationPath { dt, increments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRow {
    pub seed: u64,
    pub rmse: f64,
    pub rmse_post_burn_in: f64,
    pub mode_accuracy: Option<Vec<f64>>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub rows: Vec<SeedRow>,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub rmse_post_mean: f64,
    pub rmse_post_std: f64,
    /// Mean per-segment accuracy over seeds whose segmentation matches the first seed.
    pub accuracy_mean: Option<Vec<f64>>,
    pub accuracy_std: Option<Vec<f64>>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    // Shifted by the first value so repeated inputs give an exact mean.
    let mean = v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every configured seed (in parallel) and aggregates the metrics.
pub fn seed_sweep(config: &ScenarioConfig) -> Result<SweepSummary> {
    if config.seeds.len() < 2 {
        return Err(Error::Validation(format!(
            "a sweep needs at least 2 seeds, got {}",
            config.seeds.len()
        )));
    }
    config.validate()?;
    let results: Vec<Result<RunResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| s.spawn(move || run_scenario(config, seed)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let rows: Vec<SeedRow> = results
        .into_iter()
        .map(|r| {
            r.map(|r| SeedRow {
                seed: r.seed,
                rmse: r.metrics.rmse,
                rmse_post_burn_in: r.metrics.rmse_post_burn_in,
                mode_accuracy: r.metrics.mode_accuracy,
                runtime_s: r.metrics.runtime_s,
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(rows))
}

pub fn summarize(rows: Vec<SeedRow>) -> SweepSummary {
    let (rmse_mean, rmse_std) = mean_std(&rows.iter().map(|r| r.rmse).collect::<Vec<_>>());
    let (rmse_post_mean, rmse_post_std) = mean_std(&rows.iter().map(|r| r.rmse_post_burn_in).collect::<Vec<_>>());
    let accs: Option<Vec<&Vec<f64>>> = rows.iter().map(|r| r.mode_accuracy.as_ref()).collect();
    let (accuracy_mean, accuracy_std) = match accs {
        Some(a) if a.iter().all(|v| v.len() == a[0].len()) => {
            let stats: Vec<(f64, f64)> = (0..a[0].len())
                .map(|s| mean_std(&a.iter().map(|v| v[s]).collect::<Vec<_>>()))
                .collect();
            (
                Some(stats.iter().map(|p| p.0).collect()),
                Some(stats.iter().map(|p| p.1).collect()),
            )
        }
        _ => (None, None),
    };
    SweepSummary {
        rows,
        rmse_mean,
        rmse_std,
        rmse_post_mean,
        rmse_post_std,
        accuracy_mean,
        accuracy_std,
    }
}

impl SweepSummary {
    /// Per-seed table `seed,rmse,rmse_post_burn_in,acc_1..acc_S,runtime_s`.
    pub fn table_csv(&self) -> String {
        let n_seg = self
            .rows
            .iter()
            .filter_map(|r| r.mode_accuracy.as_ref().map(Vec::len))
            .max()
            .unwrap_or(0);
        let mut out = String::from("seed,rmse,rmse_post_burn_in");
        for s in 0..n_seg {
            let _ = write!(out, ",acc_{}", s + 1);
        }
        out.push_str(",runtime_s\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.seed, fmt17(r.rmse), fmt17(r.rmse_post_burn_in));
            for s in 0..n_seg {
                match r.mode_accuracy.as_ref().and_then(|a| a.get(s)) {
                    Some(v) => {
                        let _ = write!(out, ",{}", fmt17(*v));
                    }
                    None => out.push(','),
                }
            }
            let _ = writeln!(out, ",{}", fmt17(r.runtime_s));
        }
        out
    }
}

/// Filter run plus the grid oracle driven by the same increments.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub result: RunResult,
    /// Grid mode masses `mu^m = int q*_m` per step.
    pub grid_mu: Vec<Vec<f64>>,
    /// Moments of `rho*_m` per step and mode.
    pub grid_moments: Vec<Vec<Moments>>,
    pub snapshots: Vec<(f64, GridDensity)>,
}

/// Runs the grid solver on a given observation path.
pub fn run_grid_oracle(
    model: &HybridModel,
    prior: Prior,
    settings: &OracleSettings,
    obs: &ObservationPath,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<Moments>>, Vec<(f64, GridDensity)>)> {
    let mut density = GridDensity::gaussian(settings.grid, prior.mean, prior.std.max(settings.grid.spacing()), &model.initial_mode_dist)?;
    let n_modes = model.n_modes();
    let collect = |d: &GridDensity| -> (Vec<f64>, Vec<Moments>) {
        (
            d.mode_masses(),
            (0..n_modes).map(|m| grid_moments(d, MomentTarget::Mode(m))).collect(),
        )
    };
    let mut grid_mu = Vec::with_capacity(obs.increments.len() + 1);
    let mut moments = Vec::with_capacity(obs.increments.len() + 1);
    let mut snapshots = Vec::new();
    let (mu0, mo0) = collect(&density);
    grid_mu.push(mu0);
    moments.push(mo0);
    if settings.snapshot_every > 0 {
        snapshots.push((0.0, density.clone()));
    }
    for (k, &dz) in obs.increments.iter().enumerate() {
        density = kushner_grid_step_with(&density, model, dz, obs.dt, settings.correction)?;
        let (mu, mo) = collect(&density);
        grid_mu.push(mu);
        moments.push(mo);
        if settings.snapshot_every > 0 && (k + 1) % settings.snapshot_every == 0 {
            snapshots.push(((k + 1) as f64 * obs.dt, density.clone()));
        }
    }
    Ok((grid_mu, moments, snapshots))
}

pub fn run_oracle(config: &ScenarioConfig, seed: u64) -> Result<OracleRun> {
    let settings = config
        .oracle
        .ok_or_else(|| Error::Validation("the oracle needs an [oracle] grid section".into()))?;
    let result = run_scenario(config, seed)?;
    let (grid_mu, grid_moments, snapshots) = run_grid_oracle(&config.model, config.prior, &settings, &result.observations)?;
    Ok(OracleRun {
        result,
        grid_mu,
        grid_moments,
        snapshots,
    })
}

impl OracleRun {
    /// `t,grid_mu_1..M,grid_mean_1..M,grid_var_1..M,pf_mean_1..M,pf_var_1..M`.
    pub fn moments_csv(&self) -> String {
        let m = self.grid_mu.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for name in ["grid_mu", "grid_mean", "grid_var", "pf_mean", "pf_var"] {
            for i in 0..m {
                let _ = write!(out, ",{name}_{}", i + 1);
            }
        }
        out.push('\n');
        let f = &self.result.filter;
        for (k, t) in self.result.truth.times.iter().enumerate() {
            out.push_str(&fmt17(*t));
            let cols = self.grid_mu[k]
                .iter()
                .copied()
                .chain(self.grid_moments[k].iter().map(|mo| mo.mean))
                .chain(self.grid_moments[k].iter().map(|mo| mo.variance))
                .chain(f.mode_means[k].iter().copied())
                .chain(f.mode_variances[k].iter().copied());
            for v in cols {
                let _ = write!(out, ",{}", fmt17(v));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneratorMatrix, ModeDynamics, ScalarFn, Switch};

    fn two_mode_config() -> ScenarioConfig {
        let modes = vec![
            ModeDynamics::new(ScalarFn::Constant { value: 1.0 }, 0.1, ScalarFn::IDENTITY).unwrap(),
            ModeDynamics::new(ScalarFn::Constant { value: -1.0 }, 0.1, ScalarFn::IDENTITY).unwrap(),
        ];
        let model = HybridModel::new(
            modes,
            GeneratorMatrix::new(&[vec![-0.2, 0.2], vec![0.2, -0.2]]).unwrap(),
            0.1,
            vec![0.5, 0.5],
        )
        .unwrap();
        ScenarioConfig {
            model,
            truth: TruthSpec {
                x0: 0.0,
                schedule: ModeSchedule::Scripted(vec![Switch { time: 0.0, mode: 0 }, Switch { time: 2.0, mode: 1 }]),
            },
            prior: Prior { mean: 0.0, std: 0.2 },
            dt: 0.01,
            horizon: 4.0,
            n_particles: 200,
            mu_update: MuUpdate::Euler,
            clamp_floor: 1e-9,
            c_cap: 1e3,
            control_step: ControlStep::Relaxed,
            seeds: vec![1, 2, 3],
            burn_in: 1.0,
            oracle: None,
            output_dir: None,
        }
    }

    fn truth_with(modes: Vec<usize>, dt: f64) -> TruthTrajectory {
        let n = modes.len();
        TruthTrajectory {
            dt,
            times: (0..n).map(|k| k as f64 * dt).collect(),
            states: vec![0.0; n],
            modes,
        }
    }

    #[test]
    fn accuracy_with_perfect_probabilities() {
        let modes = [vec![0; 10], vec![2; 10], vec![1; 10]].concat();
        let truth = truth_with(modes.clone(), 0.1);
        let mu: Vec<_> = modes
            .iter()
            .map(|&m| {
                let mut v = vec![0.0; 3];
                v[m] = 1.0;
                ModeProbabilities::new(v).unwrap()
            })
            .collect();
        assert_eq!(segment_accuracy(&truth, &mu, 0.3).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn uniform_probabilities_hit_only_first_mode() {
        let modes = [vec![0; 10], vec![2; 10], vec![1; 10]].concat();
        let truth = truth_with(modes, 0.1);
        let mu = vec![ModeProbabilities::uniform(3); 30];
        assert_eq!(segment_accuracy(&truth, &mu, 0.0).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn short_segment_is_an_error() {
        let truth = truth_with([vec![0; 10], vec![1; 3]].concat(), 0.1);
        let mu = vec![ModeProbabilities::uniform(2); 13];
        assert!(matches!(
            segment_accuracy(&truth, &mu, 0.5),
            Err(Error::SegmentShorterThanBurnIn { segment: 1, .. })
        ));
    }

    #[test]
    fn zero_horizon_keeps_initial_state() {
        let mut cfg = two_mode_config();
        cfg.horizon = 0.0;
        let r = run_scenario(&cfg, 4).unwrap();
        assert_eq!(r.truth.len(), 1);
        assert_eq!(r.filter.estimate.len(), 1);
        assert!(r.observations.increments.is_empty());
        assert_eq!(r.filter.mu[0].as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn runs_are_reproducible_and_aligned() {
        let cfg = two_mode_config();
        let a = run_scenario(&cfg, 5).unwrap();
        let b = run_scenario(&cfg, 5).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.filter, b.filter);
        let n = a.truth.len();
        assert_eq!(a.filter.estimate.len(), n);
        assert_eq!(a.filter.mu.len(), n);
        assert_eq!(a.filter.mode_means.len(), n);
        assert_eq!(a.observations.increments.len(), n - 1);
        assert_eq!(a.estimate_csv().lines().count(), n + 1);
        assert_eq!(a.mu_csv().lines().count(), n + 1);
        assert!(a.estimate_csv().starts_with("t,xhat,xhat_mode_1,xhat_mode_2\n"));
        assert!(a.truth_csv().lines().nth(1).unwrap().ends_with(",1"));
    }

    #[test]
    fn bayes_update_runs() {
        let mut cfg = two_mode_config();
        cfg.mu_update = MuUpdate::Bayes;
        let r = run_scenario(&cfg, 5).unwrap();
        assert!(r.filter.degenerate_steps.is_empty());
        let acc = r.metrics.mode_accuracy.unwrap();
        assert!(acc.iter().all(|&a| a > 0.8), "{acc:?}");
    }

    #[test]
    fn sweep_requires_two_seeds() {
        let mut cfg = two_mode_config();
        cfg.seeds = vec![1];
        assert!(matches!(seed_sweep(&cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn repeated_seeds_have_zero_spread() {
        let mut cfg = two_mode_config();
        cfg.seeds = vec![7, 7, 7];
        let s = seed_sweep(&cfg).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.rmse_std, 0.0);
        assert!(s.accuracy_std.as_ref().unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(s.table_csv().lines().count(), 4);
    }

    #[test]
    fn observation_csv_round_trip() {
        let cfg = two_mode_config();
        let (_, obs) = simulate_scenario(&cfg, 3).unwrap();
        let back = parse_observations_csv(&observations_csv(&obs), cfg.dt).unwrap();
        assert_eq!(back, obs);
        assert!(parse_observations_csv("t,x\n", 0.1).is_err());
        assert!(parse_observations_csv("t,dz\n0.5,1.0\n", 0.1).is_err());
    }

    #[test]
    fn oracle_requires_grid_settings() {
        let cfg = two_mode_config();
        assert!(matches!(run_oracle(&cfg, 1), Err(Error::Validation(_))));
    }
}

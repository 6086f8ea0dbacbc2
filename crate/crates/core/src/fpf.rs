//! Bank of parallel feedback particle filters, one population per mode.
//!
//! Each particle is steered by a constant-gain feedback on the modified
//! innovation `dI = dZ - (h(X) + h_hat) dt / 2` plus an interaction drift
//! that transports mass between mode populations. All filter arithmetic is
//! done in unit-observation-noise coordinates: increments and observation
//! maps are divided by `sigma_W` before use.
//!
//! The gain is state independent, so the Wong–Zakai correction
//! `K K' / 2` of the Stratonovich particle SDE vanishes and the plain Euler
//! update below is the correct discretisation. A state-dependent gain must
//! add that term.

use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::HybridModel;
use crate::mode_prob::ModeProbabilities;
use crate::rng::{standard_normal, SeedStreams, Stream};

/// Particle states, `n_modes` populations of `n_particles` each, stored
/// mode-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBank {
    states: Vec<f64>,
    n_particles: usize,
    n_modes: usize,
}

impl ParticleBank {
    pub fn from_modes(populations: Vec<Vec<f64>>) -> Result<Self> {
        let n_modes = populations.len();
        let n_particles = populations.first().map_or(0, Vec::len);
        if n_modes == 0 || n_particles < 2 {
            return Err(Error::Validation("a bank needs >= 1 mode and >= 2 particles".into()));
        }
        if populations.iter().any(|p| p.len() != n_particles) {
            return Err(Error::Validation("mode populations differ in size".into()));
        }
        let states: Vec<f64> = populations.into_iter().flatten().collect();
        if states.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("particle states must be finite".into()));
        }
        Ok(Self {
            states,
            n_particles,
            n_modes,
        })
    }

    /// Every population drawn i.i.d. from `N(mean, std^2)`.
    pub fn sample_gaussian(
        n_modes: usize,
        n_particles: usize,
        mean: f64,
        std: f64,
        streams: &SeedStreams,
    ) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::Validation(format!("invalid prior N({mean}, {std}^2)")));
        }
        let pops = (0..n_modes)
            .map(|m| {
                let mut rng = streams.rng(Stream::ParticleInit(m));
                (0..n_particles).map(|_| mean + std * standard_normal(&mut rng)).collect()
            })
            .collect();
        Self::from_modes(pops)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mode(&self, m: usize) -> &[f64] {
        &self.states[m * self.n_particles..(m + 1) * self.n_particles]
    }

    fn mode_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.states[m * self.n_particles..(m + 1) * self.n_particles]
    }

    pub fn mode_mean(&self, m: usize) -> f64 {
        self.mode(m).iter().sum::<f64>() / self.n_particles as f64
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.n_modes).map(|m| self.mode_mean(m)).collect()
    }

    /// Population-normalised variance of mode `m`.
    pub fn mode_variance(&self, m: usize) -> f64 {
        let mean = self.mode_mean(m);
        self.mode(m).iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.n_particles as f64
    }

    /// Snapshot as CSV with header `mode,particle,x` (1-based mode labels).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,particle,x\n");
        for m in 0..self.n_modes {
            for (i, x) in self.mode(m).iter().enumerate() {
                let _ = writeln!(out, "{},{},{:.16e}", m + 1, i, x);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    #[default]
    Constant,
}

/// How the interaction drift is integrated over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlStep {
    /// `u^m dt` with `u^m` frozen at the start of the step. Unstable once
    /// `dt * sum_l c_lm` exceeds 2, which happens when `mu^m` is near its floor.
    Euler,
    /// Exact relaxation of the mode mean towards `sum_l c_lm mean_l / sum_l c_lm`
    /// over the step with the other means frozen. Agrees with `Euler` to
    /// first order in `c dt` and never overshoots.
    #[default]
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub dt: f64,
    pub gain_mode: GainMode,
    pub control_step: ControlStep,
    /// Floor applied to mode probabilities before forming `q_lm mu_l / mu_m`.
    pub clamp_floor: f64,
    /// Cap on each interaction coefficient `c_lm`.
    pub c_cap: f64,
}

impl FilterConfig {
    pub const DEFAULT_CLAMP_FLOOR: f64 = 1e-9;
    pub const DEFAULT_C_CAP: f64 = 1e3;

    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            gain_mode: GainMode::Constant,
            control_step: ControlStep::default(),
            clamp_floor: Self::DEFAULT_CLAMP_FLOOR,
            c_cap: Self::DEFAULT_C_CAP,
        }
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.clamp_floor > 0.0 && self.clamp_floor < 1.0 / n_modes as f64) {
            return Err(Error::Validation(format!(
                "clamp_floor must lie in (0, 1/M), got {}",
                self.clamp_floor
            )));
        }
        if !(self.c_cap > 0.0) {
            return Err(Error::Validation(format!("c_cap must be positive, got {}", self.c_cap)));
        }
        Ok(())
    }
}

/// `(1/N) sum_i h^m(X^{i;m})` in raw observation units.
pub fn mode_h_hat(bank: &ParticleBank, model: &HybridModel, m: usize) -> f64 {
    let h = &model.modes[m].observation;
    bank.mode(m).iter().map(|&x| h.eval(x)).sum::<f64>() / bank.n_particles() as f64
}

pub fn global_h_hat(h_hat_mode: &[f64], mu: &[f64]) -> f64 {
    h_hat_mode.iter().zip(mu).map(|(h, p)| h * p).sum()
}

/// `(1/N) sum_i (h(X_i) - h_hat) X_i`, the particle form of `E[K]`.
/// Evaluated as `(1/N) sum_i (h(X_i) - h_hat)(X_i - mean)`, equal because
/// `sum_i (h(X_i) - h_hat) = 0`, to avoid cancellation for offset clouds.
pub fn covariance_gain(states: &[f64], h: impl Fn(f64) -> f64, h_hat: f64) -> f64 {
    let n = states.len() as f64;
    let mean = states.iter().sum::<f64>() / n;
    states.iter().map(|&x| (h(x) - h_hat) * (x - mean)).sum::<f64>() / n
}

/// Constant gain of mode `m` in rescaled units: the observation map is
/// divided by `sigma_W`, `h_hat_m` is given in raw units.
pub fn constant_gain(bank: &ParticleBank, model: &HybridModel, m: usize, h_hat_m: f64) -> f64 {
    let h = model.modes[m].observation;
    covariance_gain(bank.mode(m), |x| h.eval(x), h_hat_m) / model.obs_noise_intensity
}

/// Interaction coefficients `c_lm = q_lm mu_l / mu_m` for target mode `m`,
/// with `mu` floored and each coefficient capped.
pub fn interaction_coefficients(
    mu: &[f64],
    gen: &crate::model::GeneratorMatrix,
    m: usize,
    config: &FilterConfig,
) -> Vec<f64> {
    let floor = config.clamp_floor;
    let mu_m = mu[m].max(floor);
    (0..mu.len())
        .map(|l| {
            if l == m {
                0.0
            } else {
                (gen.rate(l, m) * mu[l].max(floor) / mu_m).min(config.c_cap)
            }
        })
        .collect()
}

/// `u^m = sum_l c_lm (mean_l - mean_m)`.
pub fn interaction_control(
    bank_means: &[f64],
    mu: &[f64],
    gen: &crate::model::GeneratorMatrix,
    m: usize,
    config: &FilterConfig,
) -> f64 {
    interaction_coefficients(mu, gen, m, config)
        .iter()
        .zip(bank_means)
        .map(|(c, mean_l)| c * (mean_l - bank_means[m]))
        .sum()
}

/// Control actually applied over one step; equals [`interaction_control`]
/// for [`ControlStep::Euler`].
pub fn step_control(
    bank_means: &[f64],
    mu: &[f64],
    gen: &crate::model::GeneratorMatrix,
    m: usize,
    config: &FilterConfig,
) -> f64 {
    match config.control_step {
        ControlStep::Euler => interaction_control(bank_means, mu, gen, m, config),
        ControlStep::Relaxed => {
            let c = interaction_coefficients(mu, gen, m, config);
            let total: f64 = c.iter().sum();
            if total == 0.0 {
                return 0.0;
            }
            let target = c.iter().zip(bank_means).map(|(c, x)| c * x).sum::<f64>() / total;
            -(-total * config.dt).exp_m1() / config.dt * (target - bank_means[m])
        }
    }
}

/// Per-mode quantities computed once from the pre-step bank.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStatistics {
    /// `h_hat^m`, rescaled by `1/sigma_W`.
    pub h_hat_mode: Vec<f64>,
    /// `sum_m mu^m h_hat^m`, rescaled.
    pub h_hat_global: f64,
    pub gains: Vec<f64>,
    pub controls: Vec<f64>,
}

impl ModeStatistics {
    pub fn compute(
        bank: &ParticleBank,
        mu: &ModeProbabilities,
        model: &HybridModel,
        config: &FilterConfig,
    ) -> Self {
        let inv_sw = 1.0 / model.obs_noise_intensity;
        let raw: Vec<f64> = (0..bank.n_modes()).map(|m| mode_h_hat(bank, model, m)).collect();
        let gains = raw
            .iter()
            .enumerate()
            .map(|(m, &hm)| constant_gain(bank, model, m, hm))
            .collect();
        let means = bank.means();
        let controls = (0..bank.n_modes())
            .map(|m| step_control(&means, mu.as_slice(), &model.generator, m, config))
            .collect();
        let h_hat_mode: Vec<f64> = raw.iter().map(|h| h * inv_sw).collect();
        let h_hat_global = global_h_hat(&h_hat_mode, mu.as_slice());
        Self {
            h_hat_mode,
            h_hat_global,
            gains,
            controls,
        }
    }
}

/// Per-mode Gaussian streams for the particle diffusion.
#[derive(Debug, Clone)]
pub struct ParticleNoise {
    streams: Vec<ChaCha8Rng>,
}

impl ParticleNoise {
    pub fn new(n_modes: usize, streams: &SeedStreams) -> Self {
        Self {
            streams: (0..n_modes).map(|m| streams.rng(Stream::ParticleNoise(m))).collect(),
        }
    }
}

/// Moves every particle by one Euler step using precomputed statistics.
/// `dz` is the raw observation increment.
pub fn advance_bank(
    bank: &ParticleBank,
    stats: &ModeStatistics,
    dz: f64,
    model: &HybridModel,
    config: &FilterConfig,
    noise: &mut ParticleNoise,
) -> Result<ParticleBank> {
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let inv_sw = 1.0 / model.obs_noise_intensity;
    let dz_r = dz * inv_sw;
    let mut next = bank.clone();
    for m in 0..bank.n_modes() {
        let md = &model.modes[m];
        let gain = stats.gains[m];
        let control = stats.controls[m];
        let h_hat_m = stats.h_hat_mode[m];
        let rng = &mut noise.streams[m];
        for x in next.mode_mut(m) {
            let h = md.observation.eval(*x) * inv_sw;
            let innovation = dz_r - 0.5 * (h + h_hat_m) * dt;
            let dv = standard_normal(rng);
            *x += md.drift.eval(*x) * dt + md.diffusion * sqrt_dt * dv + gain * innovation + control * dt;
        }
        if next.mode(m).iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState { step: 0, mode: m });
        }
    }
    Ok(next)
}

/// One full filter step for the bank (statistics from the pre-step bank).
pub fn fpf_step(
    bank: &ParticleBank,
    mu: &ModeProbabilities,
    dz: f64,
    model: &HybridModel,
    config: &FilterConfig,
    noise: &mut ParticleNoise,
) -> Result<ParticleBank> {
    let stats = ModeStatistics::compute(bank, mu, model, config);
    advance_bank(bank, &stats, dz, model, config, noise)
}

/// `sum_m mu^m mean_m`.
pub fn bank_estimate(bank: &ParticleBank, mu: &[f64]) -> f64 {
    bank.means().iter().zip(mu).map(|(x, p)| x * p).sum()
}

//! Mode association probabilities.
//!
//! Two update paths are provided: the Euler discretisation of the
//! continuous-time filter
//! `dmu^m = sum_l q_lm mu^l dt + (h_hat^m - h_hat)(dZ - h_hat dt) mu^m`
//! and a discrete Bayes predict/correct step whose likelihoods are averaged
//! over the mode's particles.

use crate::error::{Error, Result};
use crate::fpf::ParticleBank;
use crate::model::{GeneratorMatrix, HybridModel};

/// A probability vector over the modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProbabilities(Vec<f64>);

impl ModeProbabilities {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Validation(format!("{mu:?} is not a probability vector")));
        }
        let s: f64 = mu.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("{mu:?} sums to {s}")));
        }
        Ok(Self(mu))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (m, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = m;
            }
        }
        best
    }
}

/// Floors every entry at `floor` and rescales onto the simplex.
pub fn normalize_clamp(mu: &[f64], floor: f64) -> ModeProbabilities {
    let mut v: Vec<f64> = mu.iter().map(|&p| if p >= floor { p } else { floor }).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
    ModeProbabilities(v)
}

/// Euler step of the continuous-time filter. `h_hat_mode`, `h_hat_global`
/// and `dz_rescaled` must be in unit-observation-noise units.
pub fn mu_step_euler(
    mu: &ModeProbabilities,
    h_hat_mode: &[f64],
    h_hat_global: f64,
    gen: &GeneratorMatrix,
    dz_rescaled: f64,
    dt: f64,
    floor: f64,
) -> ModeProbabilities {
    let p = mu.as_slice();
    let inflow = gen.transpose_apply(p);
    let innovation = dz_rescaled - h_hat_global * dt;
    let raw: Vec<f64> = (0..p.len())
        .map(|m| p[m] + inflow[m] * dt + (h_hat_mode[m] - h_hat_global) * innovation * p[m])
        .collect();
    normalize_clamp(&raw, floor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesStep {
    pub mu: ModeProbabilities,
    /// Set when every likelihood underflowed or was non-finite; `mu` is then
    /// the prediction alone.
    pub degenerate: bool,
}

/// `log L_m(dz)` for every mode with
/// `L_m = (1/N) sum_i N(dz; h^m(X^{i;m}) dt, sigma_W^2 dt)`.
pub fn mode_log_likelihoods(bank: &ParticleBank, model: &HybridModel, dz: f64, dt: f64) -> Vec<f64> {
    let var = model.obs_noise_intensity.powi(2) * dt;
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (bank.n_particles() as f64).ln();
    (0..bank.n_modes())
        .map(|m| {
            let h = &model.modes[m].observation;
            let terms: Vec<f64> = bank
                .mode(m)
                .iter()
                .map(|&x| {
                    let r = dz - h.eval(x) * dt;
                    -0.5 * r * r / var
                })
                .collect();
            log_sum_exp(&terms) + log_norm
        })
        .collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Discrete-time Bayes step: predict with `mu + Q^T mu dt`, then weight by
/// the particle-averaged Gaussian likelihood of the raw increment `dz`.
pub fn mu_step_bayes(
    mu: &ModeProbabilities,
    bank: &ParticleBank,
    model: &HybridModel,
    dz: f64,
    dt: f64,
    floor: f64,
) -> BayesStep {
    let p = mu.as_slice();
    let inflow = model.generator.transpose_apply(p);
    let predicted: Vec<f64> = p.iter().zip(&inflow).map(|(a, b)| a + b * dt).collect();
    let predicted = normalize_clamp(&predicted, floor);
    let logl = mode_log_likelihoods(bank, model, dz, dt);
    let max = logl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || logl.iter().any(|l| l.is_nan()) {
        return BayesStep {
            mu: predicted,
            degenerate: true,
        };
    }
    let post: Vec<f64> = predicted
        .as_slice()
        .iter()
        .zip(&logl)
        .map(|(q, l)| q * (l - max).exp())
        .collect();
    BayesStep {
        mu: normalize_clamp(&post, floor),
        degenerate: false,
    }
}

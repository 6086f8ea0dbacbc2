//! Scenario configuration files.
//!
//! The format is TOML with four fixed sections; the grammar and defaults are
//! documented in `config.schema` next to this crate's manifest. Unknown keys
//! are rejected. [`to_toml`] emits a normalized file that parses back to an
//! identical [`ScenarioConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpf::{ControlStep, FilterConfig};
use crate::model::{GeneratorMatrix, HybridModel, ModeDynamics, ModeSchedule, Switch};
use crate::oracle::grid::{Correction, Grid1D};
use crate::scenario::{MuUpdate, OracleSettings, Prior, ScenarioConfig, TruthSpec};

/// The reference grammar shipped with the crate.
pub const CONFIG_SCHEMA: &str = include_str!("../config.schema");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    truth: Option<RawTruth>,
    filter: Option<RawFilter>,
    #[serde(default)]
    run: RawRun,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<RawOracle>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    obs_noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_mode_probs: Option<Vec<f64>>,
    generator: Vec<Vec<f64>>,
    modes: Vec<ModeDynamics>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwitch {
    time: f64,
    /// 1-based.
    mode: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruth {
    x0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    switches: Option<Vec<RawSwitch>>,
    /// 1-based; selects a Markov-chain truth driven by the model generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    chain_initial_mode: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawMuUpdate {
    Euler,
    Bayes,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    particles: usize,
    dt: f64,
    horizon: f64,
    prior_mean: f64,
    prior_std: f64,
    #[serde(default = "default_mu_update")]
    mu_update: RawMuUpdate,
    #[serde(default = "default_clamp_floor")]
    clamp_floor: f64,
    #[serde(default = "default_c_cap")]
    c_cap: f64,
    #[serde(default = "default_control_step")]
    control_step: RawControlStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawControlStep {
    Euler,
    Relaxed,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default = "default_burn_in")]
    burn_in: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            burn_in: default_burn_in(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawCorrection {
    Euler,
    Exponential,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    x_min: f64,
    x_max: f64,
    cells: usize,
    #[serde(default = "default_correction")]
    correction: RawCorrection,
    #[serde(default)]
    snapshot_every: usize,
}

fn default_mu_update() -> RawMuUpdate {
    RawMuUpdate::Euler
}
fn default_clamp_floor() -> f64 {
    FilterConfig::DEFAULT_CLAMP_FLOOR
}
fn default_c_cap() -> f64 {
    FilterConfig::DEFAULT_C_CAP
}
fn default_control_step() -> RawControlStep {
    RawControlStep::Relaxed
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_burn_in() -> f64 {
    ScenarioConfig::DEFAULT_BURN_IN
}
fn default_correction() -> RawCorrection {
    RawCorrection::Euler
}

fn one_based(mode: usize, what: &str) -> Result<usize> {
    mode.checked_sub(1)
        .ok_or_else(|| Error::Validation(format!("{what}: modes are numbered from 1")))
}

impl TryFrom<RawConfig> for ScenarioConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let model = raw.model.ok_or_else(|| Error::Validation("missing [model] section".into()))?;
        let truth = raw.truth.ok_or_else(|| Error::Validation("missing [truth] section".into()))?;
        let filter = raw.filter.ok_or_else(|| Error::Validation("missing [filter] section".into()))?;

        let n = model.modes.len();
        let init = model
            .initial_mode_probs
            .unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        let model = HybridModel::new(model.modes, GeneratorMatrix::new(&model.generator)?, model.obs_noise, init)?;

        let schedule = match (truth.switches, truth.chain_initial_mode) {
            (Some(sw), None) => ModeSchedule::Scripted(
                sw.into_iter()
                    .map(|s| {
                        Ok(Switch {
                            time: s.time,
                            mode: one_based(s.mode, "truth.switches")?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            (None, Some(m)) => ModeSchedule::Chain {
                initial_mode: one_based(m, "truth.chain_initial_mode")?,
            },
            _ => {
                return Err(Error::Validation(
                    "[truth] needs exactly one of `switches` or `chain_initial_mode`".into(),
                ))
            }
        };

        let oracle = raw
            .oracle
            .map(|o| {
                Ok(OracleSettings {
                    grid: Grid1D::new(o.x_min, o.x_max, o.cells)?,
                    correction: match o.correction {
                        RawCorrection::Euler => Correction::Euler,
                        RawCorrection::Exponential => Correction::Exponential,
                    },
                    snapshot_every: o.snapshot_every,
                })
            })
            .transpose()?;

        if raw.run.seeds.is_empty() {
            return Err(Error::Validation("run.seeds must not be empty".into()));
        }

        let config = ScenarioConfig {
            model,
            truth: TruthSpec {
                x0: truth.x0,
                schedule,
            },
            prior: Prior {
                mean: filter.prior_mean,
                std: filter.prior_std,
            },
            dt: filter.dt,
            horizon: filter.horizon,
            n_particles: filter.particles,
            mu_update: match filter.mu_update {
                RawMuUpdate::Euler => MuUpdate::Euler,
                RawMuUpdate::Bayes => MuUpdate::Bayes,
            },
            clamp_floor: filter.clamp_floor,
            c_cap: filter.c_cap,
            control_step: match filter.control_step {
                RawControlStep::Euler => ControlStep::Euler,
                RawControlStep::Relaxed => ControlStep::Relaxed,
            },
            seeds: raw.run.seeds,
            burn_in: raw.run.burn_in,
            oracle,
            output_dir: raw.run.output_dir,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<&ScenarioConfig> for RawConfig {
    fn from(c: &ScenarioConfig) -> Self {
        let (switches, chain_initial_mode) = match &c.truth.schedule {
            ModeSchedule::Scripted(sw) => (
                Some(sw.iter().map(|s| RawSwitch { time: s.time, mode: s.mode + 1 }).collect()),
                None,
            ),
            ModeSchedule::Chain { initial_mode } => (None, Some(initial_mode + 1)),
            // Explicit paths are not expressible in a file; `to_toml` rejects them.
            ModeSchedule::Path(_) => (None, None),
        };
        RawConfig {
            model: Some(RawModel {
                obs_noise: c.model.obs_noise_intensity,
                initial_mode_probs: Some(c.model.initial_mode_dist.clone()),
                generator: c.model.generator.rows(),
                modes: c.model.modes.clone(),
            }),
            truth: Some(RawTruth {
                x0: c.truth.x0,
                switches,
                chain_initial_mode,
            }),
            filter: Some(RawFilter {
                particles: c.n_particles,
                dt: c.dt,
                horizon: c.horizon,
                prior_mean: c.prior.mean,
                prior_std: c.prior.std,
                mu_update: match c.mu_update {
                    MuUpdate::Euler => RawMuUpdate::Euler,
                    MuUpdate::Bayes => RawMuUpdate::Bayes,
                },
                clamp_floor: c.clamp_floor,
                c_cap: c.c_cap,
                control_step: match c.control_step {
                    ControlStep::Euler => RawControlStep::Euler,
                    ControlStep::Relaxed => RawControlStep::Relaxed,
                },
            }),
            run: RawRun {
                seeds: c.seeds.clone(),
                burn_in: c.burn_in,
                output_dir: c.output_dir.clone(),
            },
            oracle: c.oracle.map(|o| RawOracle {
                x_min: o.grid.x_min,
                x_max: o.grid.x_max,
                cells: o.grid.n_cells,
                correction: match o.correction {
                    Correction::Euler => RawCorrection::Euler,
                    Correction::Exponential => RawCorrection::Exponential,
                },
                snapshot_every: o.snapshot_every,
            }),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().replace('\n', " ");
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                Error::Parse(format!("line {line}, column {col}: {msg}"))
            }
            None => Error::Parse(msg),
        }
    })?;
    ScenarioConfig::try_from(raw)
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Normalized configuration text with every default written out.
pub fn to_toml(config: &ScenarioConfig) -> Result<String> {
    if matches!(config.truth.schedule, ModeSchedule::Path(_)) {
        return Err(Error::Validation("an explicit mode path cannot be written to a config file".into()));
    }
    toml::to_string(&RawConfig::from(config)).map_err(|e| Error::Parse(e.to_string()))
}

//! Interacting multiple model feedback particle filter (IMM-FPF) for
//! continuous-time stochastic hybrid systems, with reference solvers and an
//! experiment runner.
//!
//! Each mode `m` carries its own particle population driven by the feedback
//! particle filter; mode probabilities follow either the Euler recursion of
//! the filter or an exact per-step Bayes update.

pub mod config;
pub mod error;
pub mod fpf;
pub mod mode_prob;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod scenario;

pub use config::{parse_config, parse_config_str, to_toml};
pub use error::{Error, Result};
pub use fpf::{FilterConfig, ParticleBank};
pub use mode_prob::ModeProbabilities;
pub use model::{GeneratorMatrix, HybridModel, ModeDynamics, ModeSchedule, ScalarFn, Switch};
pub use scenario::{run_filter, run_oracle, run_scenario, seed_sweep, MuUpdate, RunResult, ScenarioConfig};

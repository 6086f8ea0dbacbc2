//! Browser demo: the three-mode maneuvering target, the gain function of a
//! particle cloud, and the single-mode filter against Kalman–Bucy.

use imm_fpf::fpf::covariance_gain;
use imm_fpf::oracle::{grid_gain_exact, kalman_bucy, kde_on_grid, Grid1D};
use imm_fpf::rng::{standard_normal, SeedStreams, Stream};
use imm_fpf::scenario::{run_filter, simulate_scenario, Prior, TruthSpec};
use imm_fpf::{parse_config_str, run_scenario, HybridModel, ModeDynamics, ModeSchedule, MuUpdate, ScalarFn, ScenarioConfig};
use wasm_bindgen::prelude::*;

const MANEUVER_CFG: &str = include_str!("../../cli/examples/maneuver.cfg");

fn err_string(e: imm_fpf::Error) -> String {
    e.to_string()
}

fn to_js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct ManeuverRun {
    times: Vec<f64>,
    truth: Vec<f64>,
    truth_mode: Vec<f64>,
    estimate: Vec<f64>,
    /// Row-major, `times.len() x n_modes`.
    mu: Vec<f64>,
    n_modes: usize,
    rmse: f64,
    rmse_post: f64,
}

#[wasm_bindgen]
impl ManeuverRun {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }
    /// 1-based truth mode per step.
    #[wasm_bindgen(getter)]
    pub fn truth_mode(&self) -> Vec<f64> {
        self.truth_mode.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Vec<f64> {
        self.estimate.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn mu(&self) -> Vec<f64> {
        self.mu.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    #[wasm_bindgen(getter)]
    pub fn rmse(&self) -> f64 {
        self.rmse
    }
    #[wasm_bindgen(getter)]
    pub fn rmse_post(&self) -> f64 {
        self.rmse_post
    }
}

/// Shipped maneuvering-target scenario with a chosen seed, particle count
/// and mode-probability update (`"euler"` or `"bayes"`).
#[wasm_bindgen]
pub fn maneuver(seed: u64, particles: usize, mu_update: &str) -> Result<ManeuverRun, JsError> {
    to_js(maneuver_run(seed, particles, mu_update))
}

pub fn maneuver_run(seed: u64, particles: usize, mu_update: &str) -> Result<ManeuverRun, String> {
    let mut config = parse_config_str(MANEUVER_CFG).map_err(err_string)?;
    config.n_particles = particles;
    config.mu_update = match mu_update {
        "euler" => MuUpdate::Euler,
        "bayes" => MuUpdate::Bayes,
        other => return Err(format!("unknown mu update `{other}`")),
    };
    let r = run_scenario(&config, seed).map_err(err_string)?;
    let n_modes = config.model.n_modes();
    Ok(ManeuverRun {
        times: r.truth.times.clone(),
        truth: r.truth.states.clone(),
        truth_mode: r.truth.modes.iter().map(|&m| (m + 1) as f64).collect(),
        estimate: r.filter.estimate.clone(),
        mu: r.filter.mu.iter().flat_map(|p| p.as_slice().to_vec()).collect(),
        n_modes,
        rmse: r.metrics.rmse,
        rmse_post: r.metrics.rmse_post_burn_in,
    })
}

#[wasm_bindgen]
pub struct GainCurve {
    x: Vec<f64>,
    density: Vec<f64>,
    exact: Vec<f64>,
    constant: f64,
    expected_exact: f64,
}

#[wasm_bindgen]
impl GainCurve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }
    /// Exact gain `K(x)` solved on the grid.
    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn constant(&self) -> f64 {
        self.constant
    }
    #[wasm_bindgen(getter)]
    pub fn expected_exact(&self) -> f64 {
        self.expected_exact
    }
}

/// Exact and constant gain for `n` particles from `N(0, 1)` and
/// `h(x) = atan(x / length)`, without the noise rescaling.
#[wasm_bindgen]
pub fn gain_curve(n: usize, length: f64, seed: u64) -> Result<GainCurve, JsError> {
    to_js(gain_curve_run(n, length, seed))
}

pub fn gain_curve_run(n: usize, length: f64, seed: u64) -> Result<GainCurve, String> {
    if n < 2 || !(length > 0.0) {
        return Err("need n >= 2 and length > 0".into());
    }
    let grid = Grid1D::new(-6.0, 6.0, 600).map_err(err_string)?;
    let h = |x: f64| (x / length).atan();
    let mut rng = SeedStreams::new(seed).rng(Stream::Aux(0));
    let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
    let h_hat = xs.iter().map(|&x| h(x)).sum::<f64>() / n as f64;
    let constant = covariance_gain(&xs, h, h_hat);
    let density = kde_on_grid(&grid, &xs, (n as f64).powf(-0.2));
    let hv: Vec<f64> = grid.points().iter().map(|&x| h(x)).collect();
    let sol = grid_gain_exact(&grid, &density, &hv).map_err(err_string)?;
    Ok(GainCurve {
        x: grid.points(),
        expected_exact: sol.expectation(&grid, &density),
        exact: sol.values,
        density,
        constant,
    })
}

#[wasm_bindgen]
pub struct KalmanComparison {
    times: Vec<f64>,
    truth: Vec<f64>,
    pf_mean: Vec<f64>,
    pf_var: Vec<f64>,
    kb_mean: Vec<f64>,
    kb_var: Vec<f64>,
}

#[wasm_bindgen]
impl KalmanComparison {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn pf_mean(&self) -> Vec<f64> {
        self.pf_mean.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn pf_var(&self) -> Vec<f64> {
        self.pf_var.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn kb_mean(&self) -> Vec<f64> {
        self.kb_mean.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn kb_var(&self) -> Vec<f64> {
        self.kb_var.clone()
    }
}

/// `dX = -X dt + dB`, `dZ = X dt + dW` filtered by `particles` particles
/// and by Kalman–Bucy on the same increments.
#[wasm_bindgen]
pub fn kalman_comparison(seed: u64, particles: usize) -> Result<KalmanComparison, JsError> {
    to_js(kalman_comparison_run(seed, particles))
}

pub fn kalman_comparison_run(seed: u64, particles: usize) -> Result<KalmanComparison, String> {
    let md = ModeDynamics::new(ScalarFn::Affine { slope: -1.0, intercept: 0.0 }, 1.0, ScalarFn::IDENTITY)
        .map_err(err_string)?;
    let config = ScenarioConfig {
        model: HybridModel::single(md, 1.0).map_err(err_string)?,
        truth: TruthSpec {
            x0: 0.5,
            schedule: ModeSchedule::Chain { initial_mode: 0 },
        },
        prior: Prior { mean: 0.0, std: 1.0 },
        dt: 1e-3,
        horizon: 2.0,
        n_particles: particles,
        mu_update: MuUpdate::Euler,
        clamp_floor: 1e-9,
        c_cap: 1e3,
        control_step: Default::default(),
        seeds: vec![seed],
        burn_in: 0.0,
        oracle: None,
        output_dir: None,
    };
    let (truth, obs) = simulate_scenario(&config, seed).map_err(err_string)?;
    let f = run_filter(&config, &obs, seed).map_err(err_string)?;
    let kb = kalman_bucy(-1.0, 1.0, &obs.increments, config.dt, 0.0, 1.0);
    Ok(KalmanComparison {
        times: truth.times,
        truth: truth.states,
        pf_mean: f.mode_means.iter().map(|v| v[0]).collect(),
        pf_var: f.mode_variances.iter().map(|v| v[0]).collect(),
        kb_mean: kb.mean,
        kb_var: kb.variance,
    })
}

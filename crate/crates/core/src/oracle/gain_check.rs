//! Constant gain versus the density-weighted mean of the exact gain.
//!
//! Particles are drawn from `N(0, 1)`; the exact gain is solved on a grid for
//! a Gaussian kernel density estimate of the same particles (bandwidth
//! `N^{-1/5}`) and averaged against that density.

use crate::error::Result;
use crate::fpf::covariance_gain;
use crate::model::ScalarFn;
use crate::rng::{standard_normal, SeedStreams, Stream};

use super::bvp::{grid_gain_exact, kde_on_grid};
use super::grid::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCheckRow {
    pub n_particles: usize,
    pub bandwidth: f64,
    /// Particle constant gain (rescaled units).
    pub constant_gain: f64,
    /// `E_rho[K_exact]` on the kernel density.
    pub expected_exact: f64,
    pub abs_error: f64,
    /// `3 N^{-1/2} |E[K]|`.
    pub tolerance: f64,
}

pub fn gain_check(
    sizes: &[usize],
    observation: ScalarFn,
    obs_noise: f64,
    grid: &Grid1D,
    seed: u64,
) -> Result<Vec<GainCheckRow>> {
    let streams = SeedStreams::new(seed);
    let h = |x: f64| observation.eval(x) / obs_noise;
    let hv: Vec<f64> = grid.points().iter().map(|&x| h(x)).collect();
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut rng = streams.rng(Stream::Aux(k as u32));
            let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
            let h_hat = xs.iter().map(|&x| h(x)).sum::<f64>() / n as f64;
            let constant_gain = covariance_gain(&xs, h, h_hat);
            let bandwidth = (n as f64).powf(-0.2);
            let rho = kde_on_grid(grid, &xs, bandwidth);
            let exact = grid_gain_exact(grid, &rho, &hv)?;
            let expected_exact = exact.expectation(grid, &rho);
            Ok(GainCheckRow {
                n_particles: n,
                bandwidth,
                constant_gain,
                expected_exact,
                abs_error: (constant_gain - expected_exact).abs(),
                tolerance: 3.0 * expected_exact.abs() / (n as f64).sqrt(),
            })
        })
        .collect()
}

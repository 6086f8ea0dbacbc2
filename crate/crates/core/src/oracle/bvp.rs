//! Grid solutions of the gain and interaction boundary value problems
//! `(rho K)' = -(h - h_hat) rho` and `(rho_m u)' = sum_l c_lm (rho_m - rho_l)`,
//! both with `rho K -> 0` at the left boundary.

use crate::error::{Error, Result};
use crate::fpf::{interaction_coefficients, FilterConfig};
use crate::model::GeneratorMatrix;

use super::grid::Grid1D;

const DENSITY_FLOOR: f64 = 1e-300;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    /// Solution at the cell centres.
    pub values: Vec<f64>,
    /// `rho * solution` at the cell centres.
    pub flux: Vec<f64>,
    /// Integral of the source over the whole grid; zero for a consistent problem.
    pub residual: f64,
}

impl BvpSolution {
    /// `int solution * rho dx`.
    pub fn expectation(&self, grid: &Grid1D, rho: &[f64]) -> f64 {
        self.values.iter().zip(rho).map(|(k, r)| k * r).sum::<f64>() * grid.spacing()
    }
}

/// Cumulative trapezoid integral of `source` from the left boundary,
/// divided by `rho`.
fn integrate_flux(grid: &Grid1D, rho: &[f64], source: &[f64]) -> Result<BvpSolution> {
    let h = grid.spacing();
    let mut acc = 0.0;
    let mut flux = Vec::with_capacity(source.len());
    for &s in source {
        flux.push((acc + 0.5 * s) * h);
        acc += s;
    }
    let residual = acc * h;
    if !(residual.abs() <= RESIDUAL_TOL) {
        return Err(Error::BoundaryResidualLarge { residual });
    }
    let values = flux.iter().zip(rho).map(|(f, r)| f / r.max(DENSITY_FLOOR)).collect();
    Ok(BvpSolution { values, flux, residual })
}

/// Exact gain function for the density `rho` (normalised on `grid`) and
/// observation values `h_values` at the cell centres.
pub fn grid_gain_exact(grid: &Grid1D, rho: &[f64], h_values: &[f64]) -> Result<BvpSolution> {
    let h_hat = rho.iter().zip(h_values).map(|(r, v)| r * v).sum::<f64>() * grid.spacing();
    let source: Vec<f64> = rho.iter().zip(h_values).map(|(r, v)| -(v - h_hat) * r).collect();
    integrate_flux(grid, rho, &source)
}

/// Exact interaction control for mode `m` given the conditional densities
/// `rhos`, mode probabilities and generator.
pub fn grid_control_exact(
    grid: &Grid1D,
    rhos: &[Vec<f64>],
    mu: &[f64],
    gen: &GeneratorMatrix,
    m: usize,
    config: &FilterConfig,
) -> Result<BvpSolution> {
    let c = interaction_coefficients(mu, gen, m, config);
    let source: Vec<f64> = (0..grid.n_cells)
        .map(|j| {
            (0..rhos.len())
                .map(|l| c[l] * (rhos[m][j] - rhos[l][j]))
                .sum()
        })
        .collect();
    integrate_flux(grid, &rhos[m], &source)
}

/// `sum_i w_i (h(x_i) - h_hat_w) x_i` over weighted points, the weak-form
/// expression for `E[K]` (take `w_i = 1/N` for particles, `rho_j dx` on a grid).
pub fn weak_form_gain(points: &[f64], weights: &[f64], h: impl Fn(f64) -> f64) -> f64 {
    let hv: Vec<f64> = points.iter().map(|&x| h(x)).collect();
    let h_hat: f64 = hv.iter().zip(weights).map(|(v, w)| v * w).sum();
    points
        .iter()
        .zip(&hv)
        .zip(weights)
        .map(|((x, v), w)| w * (v - h_hat) * x)
        .sum()
}

/// Gaussian kernel density estimate of `samples` at the grid centres,
/// renormalised to unit mass on the grid.
pub fn kde_on_grid(grid: &Grid1D, samples: &[f64], bandwidth: f64) -> Vec<f64> {
    let inv_bw = 1.0 / bandwidth;
    let radius = 9.0 * bandwidth;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rho: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&s| s < x - radius);
            let hi = sorted.partition_point(|&s| s <= x + radius);
            sorted[lo..hi]
                .iter()
                .map(|&s| (-0.5 * ((x - s) * inv_bw).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    let mass = rho.iter().sum::<f64>() * grid.spacing();
    rho.iter_mut().for_each(|r| *r /= mass);
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::grid::GridDensity;

    fn gaussian(grid: &Grid1D, mean: f64, std: f64) -> Vec<f64> {
        GridDensity::gaussian(*grid, mean, std, &[1.0]).unwrap().values.remove(0)
    }

    #[test]
    fn linear_observation_gives_variance_gain() {
        let g = Grid1D::new(-10.0, 10.0, 4000).unwrap();
        let s0 = 1.3;
        let rho = gaussian(&g, 0.0, s0);
        let hv = g.points();
        let k = grid_gain_exact(&g, &rho, &hv).unwrap();
        for (j, x) in g.points().iter().enumerate() {
            if x.abs() <= 2.0 * s0 {
                assert!((k.values[j] - s0 * s0).abs() < 1e-3, "K({x}) = {}", k.values[j]);
            }
        }
        assert!(k.residual.abs() < 1e-12);
    }

    #[test]
    fn constant_observation_gives_zero_gain() {
        let g = Grid1D::new(-5.0, 5.0, 200).unwrap();
        let rho = gaussian(&g, 0.3, 1.0);
        let k = grid_gain_exact(&g, &rho, &vec![2.0; 200]).unwrap();
        assert!(k.flux.iter().all(|v| v.abs() < 1e-14));
        assert!(k.expectation(&g, &rho).abs() < 1e-14);
    }

    #[test]
    fn unnormalised_density_leaves_residual() {
        let g = Grid1D::new(-5.0, 5.0, 200).unwrap();
        let rho: Vec<f64> = gaussian(&g, 0.0, 1.0).iter().map(|r| 2.0 * r).collect();
        let hv = vec![1.0; 200];
        assert!(matches!(
            grid_gain_exact(&g, &rho, &hv),
            Err(Error::BoundaryResidualLarge { .. })
        ));
    }

    #[test]
    fn gain_reproduces_source() {
        let g = Grid1D::new(-6.0, 6.0, 600).unwrap();
        let rho = gaussian(&g, 0.5, 0.8);
        let hv: Vec<f64> = g.points().iter().map(|x| (x / 2.0).atan()).collect();
        let k = grid_gain_exact(&g, &rho, &hv).unwrap();
        let h_hat: f64 = rho.iter().zip(&hv).map(|(r, v)| r * v).sum::<f64>() * g.spacing();
        for j in 1..g.n_cells {
            let lhs = (k.flux[j] - k.flux[j - 1]) / g.spacing();
            let rhs = -0.5 * ((hv[j] - h_hat) * rho[j] + (hv[j - 1] - h_hat) * rho[j - 1]);
            assert!((lhs - rhs).abs() < 1e-6);
        }
        // Weak form with psi(x) = x.
        let weights: Vec<f64> = rho.iter().map(|r| r * g.spacing()).collect();
        let weak = weak_form_gain(&g.points(), &weights, |x| (x / 2.0).atan());
        assert!((k.expectation(&g, &rho) - weak).abs() < 1e-12);
    }

    #[test]
    fn control_cases() {
        let g = Grid1D::new(-6.0, 6.0, 300).unwrap();
        let cfg = FilterConfig::new(0.01);
        let q = GeneratorMatrix::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let same = vec![gaussian(&g, 0.0, 1.0), gaussian(&g, 0.0, 1.0)];
        let u = grid_control_exact(&g, &same, &[0.5, 0.5], &q, 0, &cfg).unwrap();
        assert!(u.values.iter().all(|v| v.abs() < 1e-12));
        let shifted = vec![gaussian(&g, -0.5, 1.0), gaussian(&g, 0.5, 1.0)];
        let z = GeneratorMatrix::zeros(2);
        let u = grid_control_exact(&g, &shifted, &[0.5, 0.5], &z, 0, &cfg).unwrap();
        assert!(u.values.iter().all(|v| v.abs() < 1e-12));
        // Mean of the exact control equals the constant approximation.
        let u = grid_control_exact(&g, &shifted, &[0.5, 0.5], &q, 0, &cfg).unwrap();
        let mean = |r: &Vec<f64>| g.points().iter().zip(r).map(|(x, p)| x * p).sum::<f64>() * g.spacing();
        let e = u.expectation(&g, &shifted[0]);
        assert!((e - (mean(&shifted[1]) - mean(&shifted[0]))).abs() < 1e-12, "{e}");
        assert!((e - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kde_is_normalised() {
        let g = Grid1D::new(-5.0, 5.0, 500).unwrap();
        let rho = kde_on_grid(&g, &[0.0, 0.5, -1.0], 0.3);
        assert!((rho.iter().sum::<f64>() * g.spacing() - 1.0).abs() < 1e-12);
    }
}

//! Finite-difference solver for the joint conditional density `q*_m(x, t)`.
//!
//! One explicit step applies the forward Kolmogorov operator of every mode,
//! the generator coupling `Q^T q` and the multiplicative observation
//! correction, then clips negatives and renormalises the total mass.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::HybridModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Validation(format!("grid bounds [{x_min}, {x_max}] are invalid")));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::Validation(format!(
                "grid needs at least {} cells, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Centre of cell `j`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.x(j)).collect()
    }
}

/// How the observation correction is applied within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correction {
    /// `q += (h - h_hat)(dz - h_hat dt) q`, the literal Euler form.
    #[default]
    Euler,
    /// Predict first, then multiply by `exp(h dz - h^2 dt / 2)` and normalise.
    /// Exact for linear-Gaussian models; the Euler form has a pathwise
    /// `O(sqrt(dt))` variance error.
    Exponential,
}

/// Stacked per-mode densities on a shared grid; `values[m][j]` is
/// `q*_m(x_j)`. Total mass over all modes is one.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Grid1D,
    pub values: Vec<Vec<f64>>,
}

/// Number of cells at each end counted as "boundary" for the escape check.
const BOUNDARY_CELLS: usize = 2;
const MAX_BOUNDARY_MASS: f64 = 0.01;
/// Cell Peclet number below which advection uses central differences.
const PECLET_CENTRAL: f64 = 2.0;

impl GridDensity {
    /// `q*_m = mu_m N(mean, std^2)`, sampled at cell centres and normalised.
    pub fn gaussian(grid: Grid1D, mean: f64, std: f64, mu: &[f64]) -> Result<Self> {
        if !(std > 0.0) {
            return Err(Error::Validation(format!("initial std must be positive, got {std}")));
        }
        let h = grid.spacing();
        let base: Vec<f64> = grid
            .points()
            .iter()
            .map(|x| (-0.5 * ((x - mean) / std).powi(2)).exp())
            .collect();
        let mass: f64 = base.iter().sum::<f64>() * h;
        let values = mu
            .iter()
            .map(|&p| base.iter().map(|b| p * b / mass).collect())
            .collect();
        Ok(Self { grid, values })
    }

    pub fn from_values(grid: Grid1D, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| v.len() != grid.n_cells) {
            return Err(Error::Validation("density shape does not match grid".into()));
        }
        if values.iter().flatten().any(|&q| !(q >= 0.0) || !q.is_finite()) {
            return Err(Error::Validation("density values must be finite and >= 0".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.grid.spacing()
    }

    /// `mu^m = int q*_m dx`.
    pub fn mode_masses(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.values.iter().map(|v| v.iter().sum::<f64>() * h).collect()
    }

    /// `rho*_m = q*_m / mu^m`.
    pub fn conditional(&self, m: usize) -> Vec<f64> {
        let mass = self.mode_masses()[m];
        self.values[m].iter().map(|q| q / mass).collect()
    }

    /// `p* = sum_m q*_m`.
    pub fn marginal(&self) -> Vec<f64> {
        (0..self.grid.n_cells)
            .map(|j| self.values.iter().map(|v| v[j]).sum())
            .collect()
    }

    fn boundary_fraction(&self) -> f64 {
        let n = self.grid.n_cells;
        let k = BOUNDARY_CELLS.min(n / 2);
        let edge: f64 = self
            .values
            .iter()
            .map(|v| v[..k].iter().sum::<f64>() + v[n - k..].iter().sum::<f64>())
            .sum();
        edge * self.grid.spacing() / self.total_mass()
    }

    /// CSV with header `x,q_1,...,q_M`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for m in 0..self.n_modes() {
            let _ = write!(out, ",q_{}", m + 1);
        }
        out.push('\n');
        for j in 0..self.grid.n_cells {
            let _ = write!(out, "{:.16e}", self.grid.x(j));
            for v in &self.values {
                let _ = write!(out, ",{:.16e}", v[j]);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentTarget {
    Mode(usize),
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mass, mean and variance by midpoint quadrature over the cell centres
/// (identical to the trapezoid rule on the dual grid when the tails vanish).
pub fn grid_moments(density: &GridDensity, target: MomentTarget) -> Moments {
    let values = match target {
        MomentTarget::Mode(m) => density.values[m].clone(),
        MomentTarget::Marginal => density.marginal(),
    };
    moments_of(&density.grid, &values)
}

pub(crate) fn moments_of(grid: &Grid1D, values: &[f64]) -> Moments {
    let h = grid.spacing();
    let mut mass = 0.0;
    let mut first = 0.0;
    for (j, &q) in values.iter().enumerate() {
        mass += q;
        first += q * grid.x(j);
    }
    let mean = first / mass;
    let second: f64 = values
        .iter()
        .enumerate()
        .map(|(j, &q)| q * (grid.x(j) - mean).powi(2))
        .sum();
    Moments {
        mass: mass * h,
        mean,
        variance: second / mass,
    }
}

/// Checks the explicit-scheme stability conditions for `dt` on `grid`.
pub fn check_stability(grid: &Grid1D, model: &HybridModel, dt: f64) -> Result<()> {
    let h = grid.spacing();
    let max_sigma2 = model.modes.iter().map(|m| m.diffusion * m.diffusion).fold(0.0, f64::max);
    if max_sigma2 > 0.0 && dt > 0.4 * h * h / max_sigma2 {
        return Err(Error::StabilityViolation(format!(
            "dt = {dt} exceeds diffusion limit {}",
            0.4 * h * h / max_sigma2
        )));
    }
    let max_a = model
        .modes
        .iter()
        .flat_map(|md| grid.points().into_iter().map(move |x| md.drift.eval(x).abs()))
        .fold(0.0, f64::max);
    if dt * max_a / h > 0.9 {
        return Err(Error::StabilityViolation(format!(
            "advective CFL number {} exceeds 0.9",
            dt * max_a / h
        )));
    }
    Ok(())
}

/// Right-hand side `L_m^dagger q` in conservative flux form with zero-flux
/// outer boundaries. Interface advection is central where the cell Peclet
/// number `|a| h / sigma^2` is at most 2 and upwind otherwise.
fn forward_operator(grid: &Grid1D, drift: impl Fn(f64) -> f64, sigma: f64, q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let h = grid.spacing();
    let half_s2 = 0.5 * sigma * sigma;
    let a: Vec<f64> = (0..n).map(|j| drift(grid.x(j))).collect();
    let mut flux = vec![0.0; n + 1];
    for j in 0..n - 1 {
        let af = 0.5 * (a[j] + a[j + 1]);
        let central = sigma > 0.0 && af.abs() * h <= PECLET_CENTRAL * sigma * sigma;
        let adv = if central {
            0.5 * (a[j] * q[j] + a[j + 1] * q[j + 1])
        } else if af >= 0.0 {
            af * q[j]
        } else {
            af * q[j + 1]
        };
        flux[j + 1] = adv - half_s2 * (q[j + 1] - q[j]) / h;
    }
    (0..n).map(|j| -(flux[j + 1] - flux[j]) / h).collect()
}

/// One explicit step of the joint filter in rescaled observation units,
/// using the literal Euler correction.
pub fn kushner_grid_step(density: &GridDensity, model: &HybridModel, dz: f64, dt: f64) -> Result<GridDensity> {
    kushner_grid_step_with(density, model, dz, dt, Correction::Euler)
}

pub fn kushner_grid_step_with(
    density: &GridDensity,
    model: &HybridModel,
    dz: f64,
    dt: f64,
    correction: Correction,
) -> Result<GridDensity> {
    if density.n_modes() != model.n_modes() {
        return Err(Error::Validation("density and model disagree on mode count".into()));
    }
    let grid = density.grid;
    check_stability(&grid, model, dt)?;
    let n = grid.n_cells;
    let hx = grid.spacing();
    let inv_sw = 1.0 / model.obs_noise_intensity;
    let dz_r = dz * inv_sw;
    let xs = grid.points();
    let hvals: Vec<Vec<f64>> = model
        .modes
        .iter()
        .map(|md| xs.iter().map(|&x| md.observation.eval(x) * inv_sw).collect())
        .collect();
    let q = &density.values;
    let h_hat: f64 = (0..q.len())
        .map(|m| q[m].iter().zip(&hvals[m]).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>()
        * hx;

    let mut next: Vec<Vec<f64>> = Vec::with_capacity(q.len());
    for (m, md) in model.modes.iter().enumerate() {
        let fp = forward_operator(&grid, |x| md.drift.eval(x), md.diffusion, &q[m]);
        let mut row = vec![0.0; n];
        for j in 0..n {
            let coupling: f64 = (0..q.len()).map(|l| model.generator.rate(l, m) * q[l][j]).sum();
            let mut v = q[m][j] + (fp[j] + coupling) * dt;
            if correction == Correction::Euler {
                v += (hvals[m][j] - h_hat) * (dz_r - h_hat * dt) * q[m][j];
            }
            row[j] = v;
        }
        next.push(row);
    }
    if correction == Correction::Exponential {
        // Centre the exponent on h_hat to keep it small; the constant cancels on normalisation.
        for (m, row) in next.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let c = hvals[m][j] - h_hat;
                *v *= (c * (dz_r - h_hat * dt) - 0.5 * c * c * dt).exp();
            }
        }
    }
    for v in next.iter_mut().flatten() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    let mass: f64 = next.iter().flatten().sum::<f64>() * hx;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::StabilityViolation(format!("grid mass collapsed to {mass}")));
    }
    next.iter_mut().flatten().for_each(|v| *v /= mass);
    let out = GridDensity { grid, values: next };
    let fraction = out.boundary_fraction();
    if fraction > MAX_BOUNDARY_MASS {
        return Err(Error::MassEscape { fraction });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneratorMatrix, ModeDynamics, ScalarFn};

    fn heat_model() -> HybridModel {
        HybridModel::single(ModeDynamics::new(ScalarFn::ZERO, 1.0, ScalarFn::ZERO).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 0.0, 100).is_err());
        assert!(Grid1D::new(0.0, 1.0, 8).is_err());
        let g = Grid1D::new(0.0, 1.0, 100).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert!((g.x(0) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn uniform_moments() {
        let g = Grid1D::new(0.0, 1.0, 1000).unwrap();
        let d = GridDensity::from_values(g, vec![vec![1.0; 1000]]).unwrap();
        let mo = grid_moments(&d, MomentTarget::Marginal);
        assert!((mo.mass - 1.0).abs() < 1e-12);
        assert!((mo.mean - 0.5).abs() < 1e-12);
        assert!((mo.variance - 1.0 / 12.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_moments() {
        let g = Grid1D::new(-3.0, 7.0, 2000).unwrap();
        let d = GridDensity::gaussian(g, 2.0, 0.5, &[1.0]).unwrap();
        let mo = grid_moments(&d, MomentTarget::Mode(0));
        assert!((mo.mass - 1.0).abs() < 1e-6);
        assert!((mo.mean - 2.0).abs() < 1e-6);
        assert!((mo.variance - 0.25).abs() < 1e-6);
    }

    #[test]
    fn two_mode_masses() {
        let g = Grid1D::new(-5.0, 5.0, 400).unwrap();
        let d = GridDensity::gaussian(g, 0.0, 1.0, &[0.3, 0.7]).unwrap();
        let m0 = grid_moments(&d, MomentTarget::Mode(0));
        let m1 = grid_moments(&d, MomentTarget::Mode(1));
        assert!((m0.mass - 0.3).abs() < 1e-12);
        assert!((m1.mass - 0.7).abs() < 1e-12);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_variance_growth() {
        let g = Grid1D::new(-8.0, 8.0, 320).unwrap();
        let mut d = GridDensity::gaussian(g, 0.0, 1.0, &[1.0]).unwrap();
        let model = heat_model();
        let dt = 0.001;
        let v0 = grid_moments(&d, MomentTarget::Marginal).variance;
        for _ in 0..500 {
            d = kushner_grid_step(&d, &model, 0.0, dt).unwrap();
        }
        let v1 = grid_moments(&d, MomentTarget::Marginal).variance;
        assert!(((v1 - v0) - 0.5).abs() < 1e-6, "growth {}", v1 - v0);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_violations() {
        let g = Grid1D::new(-8.0, 8.0, 320).unwrap();
        let d = GridDensity::gaussian(g, 0.0, 1.0, &[1.0]).unwrap();
        assert!(matches!(
            kushner_grid_step(&d, &heat_model(), 0.0, 0.01),
            Err(Error::StabilityViolation(_))
        ));
        let fast = HybridModel::single(
            ModeDynamics::new(ScalarFn::Constant { value: 100.0 }, 0.0, ScalarFn::ZERO).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            kushner_grid_step(&d, &fast, 0.0, 0.01),
            Err(Error::StabilityViolation(_))
        ));
    }

    #[test]
    fn mass_escape_is_detected() {
        let g = Grid1D::new(-2.0, 2.0, 40).unwrap();
        let d = GridDensity::gaussian(g, 1.9, 0.1, &[1.0]).unwrap();
        assert!(matches!(
            kushner_grid_step(&d, &heat_model(), 0.0, 1e-4),
            Err(Error::MassEscape { .. })
        ));
    }

    #[test]
    fn static_profile_with_switching_only() {
        let q = GeneratorMatrix::new(&[vec![-0.4, 0.4], vec![0.2, -0.2]]).unwrap();
        let modes = vec![ModeDynamics::new(ScalarFn::ZERO, 0.0, ScalarFn::ZERO).unwrap(); 2];
        let model = HybridModel::new(modes, q, 1.0, vec![0.5, 0.5]).unwrap();
        let g = Grid1D::new(-5.0, 5.0, 200).unwrap();
        let mut d = GridDensity::gaussian(g, 0.0, 1.0, &[0.9, 0.1]).unwrap();
        let shape0 = d.conditional(0);
        let dt = 0.01;
        for _ in 0..100 {
            d = kushner_grid_step(&d, &model, 0.0, dt).unwrap();
        }
        let shape1 = d.conditional(0);
        for (a, b) in shape0.iter().zip(&shape1) {
            assert!((a - b).abs() < 1e-12);
        }
        // Two-state chain: mu1(t) = pi1 + (mu1(0) - pi1) e^{-(a+b)t}, pi1 = b/(a+b).
        let pi1 = 0.2 / 0.6;
        let exact = pi1 + (0.9 - pi1) * (-0.6f64).exp();
        let masses = d.mode_masses();
        assert!((masses[0] - exact).abs() < 5e-3, "{} vs {exact}", masses[0]);
    }

    #[test]
    fn csv_header() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let d = GridDensity::gaussian(g, 0.5, 0.2, &[0.5, 0.5]).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("x,q_1,q_2\n"));
        assert_eq!(csv.lines().count(), 17);
    }
}

//! Reference solvers used to check the particle filter: Kalman–Bucy for the
//! linear-Gaussian case, an explicit finite-difference solver of the joint
//! conditional density, and exact grid solutions of the gain/control BVPs.

pub mod bvp;
pub mod gain_check;
pub mod grid;
pub mod kalman;

pub use bvp::{grid_control_exact, grid_gain_exact, kde_on_grid, weak_form_gain, BvpSolution};
pub use gain_check::{gain_check, GainCheckRow};
pub use grid::{
    grid_moments, kushner_grid_step, kushner_grid_step_with, Correction, Grid1D, GridDensity, MomentTarget, Moments,
};
pub use kalman::{kalman_bucy, kalman_bucy_scaled, riccati_steady_state, KalmanBucyPath};

//! Scalar Kalman–Bucy filter for `dX = alpha X dt + sigma dB`,
//! `dZ = c X dt + dW` (unit observation noise).

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBucyPath {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Observation slope `c = 1`.
pub fn kalman_bucy(alpha: f64, sigma: f64, increments: &[f64], dt: f64, x0_mean: f64, x0_var: f64) -> KalmanBucyPath {
    kalman_bucy_scaled(alpha, sigma, 1.0, increments, dt, x0_mean, x0_var)
}

/// Euler integration of `dm = alpha m dt + c P (dZ - c m dt)` and
/// `dP = (2 alpha P + sigma^2 - c^2 P^2) dt`.
pub fn kalman_bucy_scaled(
    alpha: f64,
    sigma: f64,
    slope: f64,
    increments: &[f64],
    dt: f64,
    x0_mean: f64,
    x0_var: f64,
) -> KalmanBucyPath {
    assert!(x0_var >= 0.0, "initial variance must be >= 0");
    let mut mean = Vec::with_capacity(increments.len() + 1);
    let mut variance = Vec::with_capacity(increments.len() + 1);
    let (mut m, mut p) = (x0_mean, x0_var);
    mean.push(m);
    variance.push(p);
    for &dz in increments {
        let m_next = m + alpha * m * dt + slope * p * (dz - slope * m * dt);
        p += (2.0 * alpha * p + sigma * sigma - slope * slope * p * p) * dt;
        m = m_next;
        mean.push(m);
        variance.push(p);
    }
    KalmanBucyPath { mean, variance }
}

/// Positive root of `2 alpha P + sigma^2 - c^2 P^2 = 0`.
pub fn riccati_steady_state(alpha: f64, sigma: f64, slope: f64) -> f64 {
    let c2 = slope * slope;
    (alpha + (alpha * alpha + c2 * sigma * sigma).sqrt()) / c2
}

use imm_fpf::fpf::{constant_gain, interaction_control, mode_h_hat, FilterConfig};
use imm_fpf::model::{simulate_truth, synthesize_observations};
use imm_fpf::oracle::{
    grid_control_exact, grid_gain_exact, grid_moments, kalman_bucy, kushner_grid_step_with, weak_form_gain,
    Correction, Grid1D, GridDensity, MomentTarget,
};
use imm_fpf::rng::{standard_normal, SeedStreams, Stream};
use imm_fpf::{GeneratorMatrix, HybridModel, ModeDynamics, ModeSchedule, ParticleBank, ScalarFn};

fn samples(seed: u64, k: u32, n: usize, mean: f64, std: f64) -> Vec<f64> {
    let mut rng = SeedStreams::new(seed).rng(Stream::Aux(k));
    (0..n).map(|_| mean + std * standard_normal(&mut rng)).collect()
}

#[test]
fn grid_solver_tracks_kalman_bucy() {
    let alpha = -1.0;
    let md = ModeDynamics::new(ScalarFn::Affine { slope: alpha, intercept: 0.0 }, 1.0, ScalarFn::IDENTITY).unwrap();
    let model = HybridModel::single(md, 1.0).unwrap();
    let dt = 1e-4;
    let truth = simulate_truth(&model, &ModeSchedule::Chain { initial_mode: 0 }, 0.3, dt, 1.0, 4).unwrap();
    let obs = synthesize_observations(&model, &truth, 4).unwrap();
    let grid = Grid1D::new(-5.0, 5.0, 500).unwrap();
    let mut d = GridDensity::gaussian(grid, 0.0, 1.0, &[1.0]).unwrap();
    let m0 = grid_moments(&d, MomentTarget::Marginal);
    let kb = kalman_bucy(alpha, 1.0, &obs.increments, dt, m0.mean, m0.variance);
    let mut worst = (0.0f64, 0.0f64);
    for (k, &dz) in obs.increments.iter().enumerate() {
        d = kushner_grid_step_with(&d, &model, dz, dt, Correction::Exponential).unwrap();
        let mo = grid_moments(&d, MomentTarget::Marginal);
        let scale = kb.variance[k + 1].sqrt();
        worst.0 = worst.0.max((mo.mean - kb.mean[k + 1]).abs() / scale);
        worst.1 = worst.1.max((mo.variance - kb.variance[k + 1]).abs() / kb.variance[k + 1]);
    }
    assert!(worst.0 < 1e-3 && worst.1 < 1e-3, "{worst:?}");
}

#[test]
fn weak_form_equals_constant_gain_on_particles() {
    let xs = samples(3, 0, 2000, 0.4, 1.3);
    let bank = ParticleBank::from_modes(vec![xs.clone()]).unwrap();
    let md = ModeDynamics::new(ScalarFn::ZERO, 0.0, ScalarFn::Arctan { length: 2.0 }).unwrap();
    let model = HybridModel::single(md, 1.0).unwrap();
    let k = constant_gain(&bank, &model, 0, mode_h_hat(&bank, &model, 0));
    let w = vec![1.0 / xs.len() as f64; xs.len()];
    let weak = weak_form_gain(&xs, &w, |x| (x / 2.0).atan());
    assert!((k - weak).abs() <= 1e-12 * k.abs(), "{k} {weak}");
}

#[test]
fn exact_gain_mean_matches_constant_gain_on_samples() {
    let grid = Grid1D::new(-8.0, 8.0, 1600).unwrap();
    let rho = GridDensity::gaussian(grid, 0.5, 1.2, &[1.0]).unwrap().values.remove(0);
    let sw = 0.015;
    let h = |x: f64| (x / 10.0).atan() / sw;
    let hv: Vec<f64> = grid.points().iter().map(|&x| h(x)).collect();
    let exact = grid_gain_exact(&grid, &rho, &hv).unwrap().expectation(&grid, &rho);
    let md = ModeDynamics::new(ScalarFn::ZERO, 0.0, ScalarFn::Arctan { length: 10.0 }).unwrap();
    let model = HybridModel::single(md, sw).unwrap();
    for (k, n) in [1_000usize, 10_000].into_iter().enumerate() {
        let bank = ParticleBank::from_modes(vec![samples(5, k as u32, n, 0.5, 1.2)]).unwrap();
        let c = constant_gain(&bank, &model, 0, mode_h_hat(&bank, &model, 0));
        let tol = 3.0 * exact.abs() / (n as f64).sqrt();
        assert!((c - exact).abs() <= tol, "N={n}: {c} vs {exact} (tol {tol})");
    }
}

#[test]
fn exact_control_mean_matches_interaction_control_on_samples() {
    let grid = Grid1D::new(-7.0, 7.0, 700).unwrap();
    let rhos: Vec<Vec<f64>> = [-0.5, 0.5]
        .iter()
        .map(|&m| GridDensity::gaussian(grid, m, 1.0, &[1.0]).unwrap().values.remove(0))
        .collect();
    let q = GeneratorMatrix::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let mu = [0.5, 0.5];
    let cfg = FilterConfig::new(0.01);
    let exact = grid_control_exact(&grid, &rhos, &mu, &q, 0, &cfg).unwrap().expectation(&grid, &rhos[0]);
    let n = 10_000;
    let means: Vec<f64> = [-0.5, 0.5]
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let xs = samples(9, k as u32, n, m, 1.0);
            xs.iter().sum::<f64>() / n as f64
        })
        .collect();
    let u = interaction_control(&means, &mu, &q, 0, &cfg);
    let tol = 3.0 / (n as f64).sqrt();
    assert!((u - exact).abs() <= tol, "{u} vs {exact}");
    assert!((exact - 1.0).abs() < 1e-6);
}

#[test]
fn switching_only_grid_masses_follow_matrix_exponential() {
    let md = ModeDynamics::new(ScalarFn::ZERO, 0.0, ScalarFn::ZERO).unwrap();
    let q = GeneratorMatrix::new(&[vec![-2.0, 2.0], vec![1.0, -1.0]]).unwrap();
    let model = HybridModel::new(vec![md; 2], q, 1.0, vec![1.0, 0.0]).unwrap();
    let grid = Grid1D::new(-5.0, 5.0, 100).unwrap();
    let err = |dt: f64| {
        let mut d = GridDensity::gaussian(grid, 0.0, 1.0, &[1.0, 0.0]).unwrap();
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            d = kushner_grid_step_with(&d, &model, 0.0, dt, Correction::Euler).unwrap();
        }
        // Two-state chain: mu_1(t) = 1/3 + 2/3 exp(-3t).
        let exact = 1.0 / 3.0 + 2.0 / 3.0 * (-3.0f64).exp();
        (d.mode_masses()[0] - exact).abs()
    };
    let (e1, e2) = (err(0.01), err(0.005));
    assert!(e1 < 0.01 && (1.7..=2.3).contains(&(e1 / e2)), "{e1} {e2}");
}

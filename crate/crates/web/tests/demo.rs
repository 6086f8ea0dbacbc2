use imm_fpf_web::{gain_curve_run, kalman_comparison_run, maneuver_run};

#[test]
fn maneuver_rows_are_distributions() {
    let r = maneuver_run(7, 200, "bayes").unwrap();
    assert_eq!(r.n_modes(), 3);
    assert_eq!(r.mu().len(), 3 * r.times().len());
    for row in r.mu().chunks(3) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(r.truth_mode()[0], 1.0);
    assert!(maneuver_run(7, 200, "rk4").is_err());
}

#[test]
fn gain_curve_mean_matches_constant_gain() {
    let g = gain_curve_run(10_000, 10.0, 7).unwrap();
    assert_eq!(g.x().len(), g.exact().len());
    let tol = 3.0 * g.expected_exact().abs() / 100.0;
    assert!((g.constant() - g.expected_exact()).abs() <= tol);
    assert!(gain_curve_run(1, 10.0, 7).is_err());
}

#[test]
fn kalman_comparison_tracks_riccati() {
    let k = kalman_comparison_run(1, 2000).unwrap();
    let n = k.times().len();
    assert_eq!(n, 2001);
    let gap = k.pf_mean().iter().zip(k.kb_mean()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
    assert!(gap < 0.1, "{gap}");
}

use popcd_wasm_demo::{parse_algorithm, Session};

#[test]
fn rejects_bad_input() {
    assert!(Session::new(5).is_err());
    assert!(parse_algorithm("gibbs").is_err());
    assert_eq!(parse_algorithm("pop_cd_loo").unwrap().name(), "pop_cd_loo");
    let s = Session::new(2).unwrap();
    assert!(s.importance_weights(1, 0).is_err());
    assert!(s.bias_variance(1, 10, 0).is_err());
}

#[test]
fn train_returns_exact_curve() {
    let mut s = Session::new(3).unwrap();
    assert_eq!(s.num_samples(), 16);
    let curve = s.train("pop_cd", 1, 0.1, 400, 100, 3).unwrap();
    assert_eq!(curve.len(), 2 * 5);
    let iterations: Vec<f64> = curve.iter().step_by(2).copied().collect();
    assert_eq!(iterations, [0.0, 100.0, 200.0, 300.0, 400.0]);
    let nll: Vec<f64> = curve.iter().skip(1).step_by(2).copied().collect();
    assert!(nll.iter().all(|x| x.is_finite()));
    assert!(nll[4] < nll[0], "{nll:?}");
    assert_eq!(s.train("pop_cd", 1, 0.1, 400, 100, 3).unwrap(), curve);
}

#[test]
fn weights_and_bias_variance_after_training() {
    let mut s = Session::new(2).unwrap();
    s.train("cd", 1, 0.1, 300, 300, 1).unwrap();
    let w = s.importance_weights(2, 9).unwrap();
    let (ess, weights) = w.split_last().unwrap();
    assert_eq!(weights.len(), 8);
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((1.0..=8.0).contains(ess));

    let bv = s.bias_variance(1, 200, 4).unwrap();
    assert_eq!(bv.len(), 4);
    assert!(bv.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert_eq!(s.bias_variance(1, 200, 4).unwrap(), bv);
}

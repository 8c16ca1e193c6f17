use corrgen_core::factorize::{
    alternate, objective, random_diagonal_factorization, run_restart, verify, Lambda, SolveSettings,
};
use corrgen_core::linalg::max_abs;
use corrgen_core::Correlation;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn worked() -> (Correlation, Lambda) {
    let p = Correlation::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let lambda = Lambda::from_sqrt(vec![1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()]).unwrap();
    (p, lambda)
}

#[test]
fn worked_example_converges() {
    let (p, lambda) = worked();
    let out = alternate(&p, &lambda, &SolveSettings::default()).unwrap();
    assert!(out.converged);
    assert!(out.objective <= 1e-8, "{}", out.objective);
    assert!(out.objective >= 0.0);
    assert!(verify(&p, &out.factorization, SolveSettings::default().residual_tol.sqrt()).unwrap().ok);
    assert!(out.factorization.feasibility() <= 1e-8);
}

#[test]
fn ruled_out_pair_stays_away_from_zero() {
    let p = Correlation::diagonal(&[0.3, 0.7]).unwrap();
    let lambda = Lambda::from_squared(vec![0.5, 0.5]).unwrap();
    let settings = SolveSettings {
        restarts: 20,
        ..Default::default()
    };
    let out = alternate(&p, &lambda, &settings).unwrap();
    assert!(!out.converged);
    assert!(out.objective > 1e-4, "{}", out.objective);
}

#[test]
fn product_target_has_rank_one_form() {
    let p = Correlation::product(&[0.1, 0.9], &[0.3, 0.3, 0.4]).unwrap();
    let lambda = Lambda::from_sqrt(vec![1.0]).unwrap();
    let out = alternate(&p, &lambda, &SolveSettings::default()).unwrap();
    assert!(out.objective <= 1e-10);
    for (x, c) in out.factorization.c().iter().enumerate() {
        assert!((c[(0, 0)] - [0.1, 0.9][x]).abs() < 1e-5);
    }
}

#[test]
fn outcome_is_deterministic_and_prefers_low_index_on_ties() {
    let (p, lambda) = worked();
    let settings = SolveSettings {
        restarts: 4,
        ..Default::default()
    };
    let a = alternate(&p, &lambda, &settings).unwrap();
    let b = alternate(&p, &lambda, &settings).unwrap();
    assert_eq!(a, b);
    let runs: Vec<_> = (0..4).map(|i| run_restart(&p, &lambda, &settings, i).unwrap()).collect();
    let best = runs.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    let first = runs.iter().position(|r| r.objective == best).unwrap();
    assert_eq!(a.restart_index, first);
}

#[test]
fn every_iterate_is_feasible() {
    let (p, lambda) = worked();
    for iters in 1..=8 {
        let settings = SolveSettings {
            max_outer_iters: iters,
            ..Default::default()
        };
        let out = run_restart(&p, &lambda, &settings, 3).unwrap();
        let f = &out.factorization;
        let sum_c = f.c().iter().fold(DMatrix::zeros(2, 2), |acc, m| acc + m);
        let sum_d = f.d().iter().fold(DMatrix::zeros(2, 2), |acc, m| acc + m);
        assert!(max_abs(&(sum_c - lambda.matrix())) <= 1e-8);
        assert!(max_abs(&(sum_d - lambda.matrix())) <= 1e-8);
        assert!(f.feasibility() <= 1e-8, "{}", f.feasibility());
        assert!((objective(&p, f.c(), f.d()) - out.objective).abs() < 1e-15);
    }
}

#[test]
fn objective_history_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let f = random_diagonal_factorization(&mut rng, 3, 3, 2);
        let p = f.to_correlation().unwrap();
        let out = run_restart(&p, f.lambda(), &SolveSettings::default(), 0).unwrap();
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn transposed_target_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = random_diagonal_factorization(&mut rng, 3, 2, 2);
    let p = f.to_correlation().unwrap();
    let settings = SolveSettings::default();
    let a = alternate(&p, f.lambda(), &settings).unwrap();
    let b = alternate(&p.transpose(), f.lambda(), &settings).unwrap();
    assert!((a.objective - b.objective).abs() <= 1e-6, "{} vs {}", a.objective, b.objective);
}

#[test]
fn json_carries_solver_fields() {
    let (p, lambda) = worked();
    let out = alternate(&p, &lambda, &SolveSettings { restarts: 2, ..Default::default() }).unwrap();
    let v = serde_json::to_value(&out).unwrap();
    for key in ["lambda", "C", "D", "objective", "iterations", "restart_index", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

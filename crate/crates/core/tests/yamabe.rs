mod oracles;

use oracles::{random_symmetric_function, random_trial_domination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use yamabe_lab::geometry::{HomogeneousMetric, Metric, WarpedMetric};
use yamabe_lab::yamabe::*;
use yamabe_lab::Error;

/// Yamabe constant of the round 3-sphere, 6 (2π²)^{2/3}.
fn round_yamabe_constant() -> f64 {
    6.0 * (2.0 * PI * PI).powf(2.0 / 3.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn homogeneous_solution_is_closed_form() {
    let h = HomogeneousMetric::new(1.0, 1.0, 2.0).unwrap();
    let m: Metric = h.into();
    for p in [2.0, 3.0, 5.0] {
        let p = ExponentParam::new(3, p).unwrap();
        let sol = solve_subcritical(&m, p, &SolverOptions::default()).unwrap();
        let v = m.volume().unwrap();
        let q = (p.value() - 1.0) / (p.value() + 1.0);
        let r = m.curvature().unwrap().scalar[0];
        assert_eq!(sol.iterations, 0);
        assert!((sol.u[0] - v.powf(-1.0 / (p.value() + 1.0))).abs() < 1e-14);
        assert!((sol.y_tilde - r * v.powf(q)).abs() < 1e-12 * sol.y_tilde.abs());
    }
}

#[test]
fn round_sphere_critical_constant() {
    let m: Metric = WarpedMetric::round(3, 401, 1.0).unwrap().into();
    let sol = solve_subcritical(&m, ExponentParam::critical(3), &SolverOptions::default()).unwrap();
    let mean = sol.u.iter().sum::<f64>() / sol.u.len() as f64;
    assert!(sol.u.iter().all(|u| (u - mean).abs() < 1e-6 * mean));
    assert!((sol.y_tilde - round_yamabe_constant()).abs() < 1e-4 * round_yamabe_constant());
    // The constant is a minimizer among random symmetric competitors.
    assert!(random_trial_domination(m.as_warped().unwrap(), sol.p, sol.y_tilde, 100, 3, 1e-9));
    // One-sided: an underestimate passes vacuously, an overestimate is beaten
    // by near-constant trials.
    assert!(random_trial_domination(m.as_warped().unwrap(), sol.p, sol.y_tilde - 1.0, 20, 3, 1e-9));
    assert!(!random_trial_domination(m.as_warped().unwrap(), sol.p, sol.y_tilde + 1.0, 20, 3, 1e-9));
}

#[test]
fn bumpy_subcritical_solution() {
    let m: Metric = WarpedMetric::bumpy(3, 201, 2, 0.1).unwrap().into();
    let p = ExponentParam::new(3, 3.0).unwrap();
    let opts = SolverOptions::default();
    let sol = solve_subcritical(&m, p, &opts).unwrap();
    assert!(sol.residual_l2 <= opts.residual_tol);
    assert!(sol.normalization_defect <= opts.normalization_tol);
    assert!(sol.u.iter().all(|u| *u > 0.0));
    assert!(max_abs(&el_residual(&m, &sol.u, p, sol.y_tilde).unwrap()) < 1e-6);
    assert!((quotient(&m, &sol.u, p).unwrap() - sol.y_tilde).abs() < 1e-10 * sol.y_tilde);
    // The solution is a critical point: nearby competitors do not do better.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = m.as_warped().unwrap();
    for _ in 0..20 {
        let bump = random_symmetric_function(w, &mut rng, 0.05);
        let trial: Vec<f64> = sol.u.iter().zip(&bump).map(|(u, b)| u * b).collect();
        assert!(quotient(&m, &trial, p).unwrap() >= sol.y_tilde - 1e-9);
    }
}

#[test]
fn warm_start_is_reported() {
    let m: Metric = WarpedMetric::bumpy(3, 101, 2, 0.1).unwrap().into();
    let p = ExponentParam::new(3, 2.5).unwrap();
    let cold = solve_subcritical(&m, p, &SolverOptions::default()).unwrap();
    assert_eq!(cold.warm_start_distance, None);
    let warm = solve_subcritical(&m, p, &SolverOptions::default().with_warm_start(&cold.u)).unwrap();
    assert!(warm.warm_start_distance.unwrap() < 1e-6);
    assert!(warm.iterations <= cold.iterations);
}

#[test]
fn continuation_reaches_critical() {
    let m: Metric = WarpedMetric::bumpy(3, 201, 2, 0.1).unwrap().into();
    let schedule = default_schedule(3, 2.0, 6).unwrap();
    assert_eq!(schedule.len(), 6);
    assert!(schedule.last().unwrap().is_critical());
    let stages = continue_to_critical(&m, &schedule, &SolverOptions::default()).unwrap();
    let last = stages.last().unwrap();
    // Bumpy spheres are conformally round.
    assert!((last.y_tilde - round_yamabe_constant()).abs() < 1e-3 * round_yamabe_constant());
    assert!(stages[1..].iter().all(|s| s.warm_start_distance.is_some()));
}

#[test]
fn bad_schedules_and_exponents() {
    let m: Metric = WarpedMetric::round(3, 51, 1.0).unwrap().into();
    let opts = SolverOptions::default();
    assert!(matches!(ExponentParam::new(3, 1.0), Err(Error::InvalidExponent { .. })));
    assert!(matches!(ExponentParam::new(3, 5.5), Err(Error::InvalidExponent { .. })));
    let not_critical = vec![ExponentParam::new(3, 2.0).unwrap()];
    assert!(matches!(continue_to_critical(&m, &not_critical, &opts), Err(Error::Config(_))));
    let decreasing = vec![ExponentParam::new(3, 3.0).unwrap(), ExponentParam::new(3, 2.0).unwrap(), ExponentParam::critical(3)];
    assert!(matches!(continue_to_critical(&m, &decreasing, &opts), Err(Error::Config(_))));
    let wrong_dim = ExponentParam::new(4, 2.0).unwrap();
    assert!(solve_subcritical(&m, wrong_dim, &opts).is_err());
    let bad_warm = opts.with_warm_start(&vec![-1.0; 51]);
    assert!(matches!(
        solve_subcritical(&m, ExponentParam::new(3, 2.0).unwrap(), &bad_warm),
        Err(Error::NonPositiveTestFunction)
    ));
}

#[test]
fn critical_quotient_is_conformally_invariant() {
    let g = WarpedMetric::bumpy(3, 401, 2, 0.1).unwrap();
    let length = g.total_length();
    let v: Vec<f64> = g.arclength().iter().map(|s| 1.0 + 0.2 * (PI * s / length).cos()).collect();
    let h = g.conformal(&v).unwrap();
    let opts = SolverOptions::default();
    let crit = ExponentParam::critical(3);
    let yg = solve_subcritical(&g.into(), crit, &opts).unwrap().y_tilde;
    let yh = solve_subcritical(&h.into(), crit, &opts).unwrap().y_tilde;
    assert!((yg - yh).abs() < 1e-2 * yg, "{yg} vs {yh}");
}

#[test]
fn quotient_scaling_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let w = WarpedMetric::bumpy(3, 201, 3, 0.1).unwrap();
    let g: Metric = w.clone().into();
    let big = g.scaled(4.0).unwrap();
    for _ in 0..5 {
        let p = ExponentParam::new(3, rng.gen_range(1.5..5.0)).unwrap();
        let u = random_symmetric_function(&w, &mut rng, 0.4);
        let ratio = quotient(&big, &u, p).unwrap() / quotient(&g, &u, p).unwrap();
        let exponent = 1.5 - 1.0 - 3.0 / (p.value() + 1.0);
        assert!((ratio.log(4.0) - exponent).abs() < 1e-8, "{} vs {exponent}", ratio.log(4.0));
    }
    let h: Metric = HomogeneousMetric::new(1.0, 1.0, 2.0).unwrap().into();
    let p = ExponentParam::new(3, 3.0).unwrap();
    let ratio = quotient(&h.scaled(4.0).unwrap(), &[1.0], p).unwrap() / quotient(&h, &[1.0], p).unwrap();
    assert!((ratio.log(4.0) - (0.5 - 0.75)).abs() < 1e-12);
}

#[test]
fn quotient_rejects_bad_input() {
    let m: Metric = WarpedMetric::round(3, 51, 1.0).unwrap().into();
    let p = ExponentParam::new(3, 2.0).unwrap();
    assert!(matches!(quotient(&m, &[1.0; 50], p), Err(Error::GridMismatch { .. })));
    let mut u = vec![1.0; 51];
    u[7] = 0.0;
    assert!(matches!(quotient(&m, &u, p), Err(Error::NonPositiveTestFunction)));
}

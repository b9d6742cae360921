//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod oracles;

use oracles::{brute_curvature_su2, critical_rhs, homogeneous_identity_closed_form, normalize, observed_order, random_symmetric_function};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;
use yamabe_lab::flow::{cfl_time_step, check_evolution_identities, integrate, plan_steps, FlowTrajectory};
use yamabe_lab::geometry::{HomogeneousMetric, Metric, WarpedMetric};
use yamabe_lab::spectral::{koiso_check, symmetric_spectrum, DEFAULT_DELTA};
use yamabe_lab::verifier::*;
use yamabe_lab::yamabe::{quotient, solve_subcritical, ExponentParam, SolverOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn homogeneous(a: f64, b: f64, c: f64, t_end: f64) -> FlowTrajectory {
    let m: Metric = HomogeneousMetric::new(a, b, c).unwrap().into();
    integrate(&m, t_end, 1e-4, 1).unwrap()
}

fn bumpy_trajectory(intervals: usize) -> FlowTrajectory {
    let w = WarpedMetric::bumpy(3, intervals + 1, 2, 0.1).unwrap();
    let (dt, every) = plan_steps(0.01, cfl_time_step(&w), 40).unwrap();
    integrate(&w.into(), 0.01, dt, every).unwrap()
}

fn squashed_identity() -> Outcome {
    let traj = homogeneous(1.0, 1.0, 2.0, 0.05);
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for p in [2.0, 3.0, 5.0] {
        let report = verify_along_flow(&traj, ExponentParam::new(3, p).unwrap(), &opts).unwrap();
        worst = worst.max(report.max_rel_error());
        // The right-hand side itself against the coordinate-chart oracle.
        for s in report.samples.iter().step_by(100) {
            let idx = traj.times.iter().position(|t| *t == s.t).unwrap();
            let [a, b, c] = traj.snapshots[idx].as_homogeneous().unwrap().params();
            let (expected, _) = homogeneous_identity_closed_form(a, b, c, p);
            oracle_gap = oracle_gap.max((s.rhs - expected).abs() / expected.abs());
        }
    }
    outcome(
        worst < 1e-6 && oracle_gap < 1e-6,
        format!("(1,1,2), p = 2, 3, 5: max relError {worst:.2e} < 1e-6; rhs vs chart oracle {oracle_gap:.1e}"),
    )
}

fn einstein_equality() -> Outcome {
    let traj = homogeneous(1.0, 1.0, 1.0, 0.05);
    let report = verify_along_flow(&traj, ExponentParam::critical(3), &SolverOptions::default()).unwrap();
    let fd = report.samples.iter().fold(0.0f64, |m, s| m.max(s.fd.abs()));
    let zero = report.samples.iter().all(|s| s.rhs == 0.0);
    outcome(
        fd < 1e-8 && zero,
        format!("round S3, critical p: max |fd| {fd:.2e} < 1e-8, rhs identically zero: {zero}"),
    )
}

fn start_formula() -> Outcome {
    let traj = homogeneous(1.0, 1.0, 2.0, 4e-4);
    let start = derivative_at_start(&traj, ExponentParam::critical(3), &SolverOptions::default()).unwrap();
    let brute = brute_curvature_su2(1.0, 1.0, 2.0);
    let volume = 2.0 * PI * PI * 2.0f64.sqrt();
    let expected = 2.0 * start.u0[0].powi(2) * brute.traceless_sq * volume;
    let rel = (start.fd - expected).abs() / expected;
    outcome(
        rel < 1e-6 && start.fd > 0.0,
        format!("fd {:.10} vs 2u0^2 int|R0|^2 {expected:.10}: rel {rel:.2e} < 1e-6", start.fd),
    )
}

fn warped_identity(coarse: &FlowTrajectory) -> Outcome {
    let p = ExponentParam::new(3, 3.0).unwrap();
    let opts = SolverOptions::default();
    let c = verify_along_flow(coarse, p, &opts).unwrap();
    let f = verify_along_flow(&bumpy_trajectory(800), p, &opts).unwrap();
    let (ec, ef) = (c.max_rel_error(), f.max_rel_error());
    outcome(
        ec < 0.02 && ef < ec,
        format!("bumpy-2-0.1, p = 3: N = 400 max relError {ec:.2e} < 2e-2; N = 800 {ef:.2e} < N = 400"),
    )
}

fn evolution_identities(traj: &FlowTrajectory) -> Outcome {
    let rep = check_evolution_identities(traj, 5).unwrap();
    outcome(
        rep.scalar_rel_error < 0.01 && rep.volume_rel_error < 0.01,
        format!(
            "scalar {:.2e} < 1e-2, volume {:.2e} < 1e-2 (5 points skipped at each pole)",
            rep.scalar_rel_error, rep.volume_rel_error
        ),
    )
}

fn bianchi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let fine = WarpedMetric::bumpy(3, 801, 2, 0.1).unwrap();
    let coarse = WarpedMetric::bumpy(3, 401, 2, 0.1).unwrap();
    let u_fine = random_symmetric_function(&fine, &mut rng, 0.4);
    let u_coarse: Vec<f64> = u_fine.iter().step_by(2).copied().collect();
    let dc = bianchi_ibp_check(&coarse, &u_coarse).unwrap();
    let df = bianchi_ibp_check(&fine, &u_fine).unwrap();
    let order = observed_order(dc, df);
    outcome(
        dc < 0.01 && order >= 1.8,
        format!("N = 400 defect {dc:.2e} < 1e-2, order {order:.2} >= 1.8"),
    )
}

fn spectrum() -> Outcome {
    let m = WarpedMetric::round(3, 801, 1.0).unwrap();
    let rep = symmetric_spectrum(&m, 6).unwrap();
    let worst = (1..6)
        .map(|k| {
            let exact = (k * (k + 2)) as f64;
            (rep.eigenvalues[k] - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let matched_1 = koiso_check(&m.curvature().unwrap(), &rep, DEFAULT_DELTA).unwrap().matched;
    let big = WarpedMetric::round(3, 801, 2.0).unwrap();
    let rep2 = symmetric_spectrum(&big, 6).unwrap();
    let matched_2 = koiso_check(&big.curvature().unwrap(), &rep2, DEFAULT_DELTA).unwrap().matched;
    outcome(
        worst < 1e-3 && matched_1 && matched_2,
        format!("round S3 N = 800: max rel error {worst:.2e} < 1e-3; matched at r = 1: {matched_1}, r = 2: {matched_2}"),
    )
}

fn conformal_invariance() -> Outcome {
    let g = WarpedMetric::bumpy(3, 401, 2, 0.1).unwrap();
    let length = g.total_length();
    let v: Vec<f64> = g.arclength().iter().map(|s| 1.0 + 0.2 * (PI * s / length).cos()).collect();
    let h = g.conformal(&v).unwrap();
    let crit = ExponentParam::critical(3);
    let opts = SolverOptions::default();
    let yg = solve_subcritical(&g.clone().into(), crit, &opts).unwrap().y_tilde;
    let yh = solve_subcritical(&h.into(), crit, &opts).unwrap().y_tilde;
    let rel = (yg - yh).abs() / yg;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m: Metric = g.clone().into();
    let big = m.scaled(4.0).unwrap();
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let p = ExponentParam::new(3, p).unwrap();
        let u = random_symmetric_function(&g, &mut rng, 0.4);
        let ratio = quotient(&big, &u, p).unwrap() / quotient(&m, &u, p).unwrap();
        let expected = 0.5 - 3.0 / (p.value() + 1.0);
        worst = worst.max((ratio.log(4.0) - expected).abs());
    }
    outcome(
        rel < 0.01 && worst < 1e-8,
        format!("Y(g) {yg:.6} vs Y(v^4 g) {yh:.6}: rel {rel:.1e} < 1e-2; scaling exponent error {worst:.1e} < 1e-8"),
    )
}

fn coefficients() -> Outcome {
    let exact = (3..=10usize).all(|n| {
        let p = ExponentParam::critical(n);
        coeff_c1(p) == -((n - 2) as f64) / n as f64 && coeff_c2(p) == 0.0
    });
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let mut agree = true;
    for _ in 0..20 {
        let n = rng.gen_range(3..=6usize);
        let w = WarpedMetric::bumpy(n, 201, rng.gen_range(1..=4u32), rng.gen_range(-0.15..0.15)).unwrap();
        let p = ExponentParam::critical(n);
        let mut u = random_symmetric_function(&w, &mut rng, 0.3);
        normalize(&w, &mut u, p.value());
        let m: Metric = w.clone().into();
        let curv = m.curvature().unwrap();
        let terms = evolution_rhs(&m, &curv, &u, p).unwrap();
        let scale = terms.a.abs() + terms.b.abs() + terms.c.abs();
        let diff = (terms.total() - critical_rhs(&w, &curv, &u)).abs();
        agree &= terms.d == 0.0 && diff <= 1e-13 * scale + 1e-20;
        worst = worst.max(diff);
    }
    outcome(
        exact && agree,
        format!("c1 = -(n-2)/n and c2 = 0 exactly for n = 3..10: {exact}; reduced form agrees on 20 inputs: {agree} (max abs diff {worst:.1e})"),
    )
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_yamabe-lab"))
            .arg("demo")
            .arg("--out")
            .arg(&out)
            .env_remove("YAMABE_LAB_OUT")
            .output()
            .unwrap()
            .status;
        (status.success(), out)
    };
    let (ok_a, a) = run("a");
    let (ok_b, b) = run("b");
    let files = csv_files(&a);
    let identical = files == csv_files(&b)
        && files
            .iter()
            .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    outcome(
        ok_a && ok_b && identical && !files.is_empty(),
        format!("demo exits 0 twice: {}; {} CSVs bit-identical: {identical}", ok_a && ok_b, files.len()),
    )
}

fn main() {
    let start = Instant::now();
    let traj = bumpy_trajectory(400);
    let checks: Vec<(u32, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(squashed_identity)),
        (2, Box::new(einstein_equality)),
        (3, Box::new(start_formula)),
        (4, Box::new(|| warped_identity(&traj))),
        (5, Box::new(|| evolution_identities(&traj))),
        (6, Box::new(bianchi)),
        (7, Box::new(spectrum)),
        (8, Box::new(conformal_invariance)),
        (9, Box::new(coefficients)),
        (10, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (id, check) in &checks {
        let t0 = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2}: {} {} [{:.2} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria pass in {:.1} s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Built-in end-to-end scenarios with a pass/fail scoreboard. Everything is
//! deterministic: fixed inputs, sequential pipelines, no clocks in outputs.

use super::Failure;
use crate::flow::{cfl_time_step, integrate, plan_steps, FlowTrajectory};
use crate::geometry::{HomogeneousMetric, Metric, WarpedMetric};
use crate::io::{self, fmt_f64};
use crate::verifier::{derivative_at_start, verify_along_flow, IdentityReport};
use crate::yamabe::{ExponentParam, SolverOptions};
use std::path::Path;

struct Row {
    id: u32,
    scenario: &'static str,
    quantity: &'static str,
    measured: f64,
    required: String,
    pass: bool,
}

fn homogeneous_trajectory(a: f64, b: f64, c: f64, t_end: f64, dt: f64) -> Result<FlowTrajectory, Failure> {
    let m: Metric = HomogeneousMetric::new(a, b, c)?.into();
    Ok(integrate(&m, t_end, dt, 1)?)
}

fn squashed_identity(out: &Path, opts: &SolverOptions) -> Result<Row, Failure> {
    let traj = homogeneous_trajectory(1.0, 1.0, 2.0, 0.05, 1e-4)?;
    let mut worst = 0.0f64;
    for p in [2.0, 3.0, 5.0] {
        let report = verify_along_flow(&traj, ExponentParam::new(3, p)?, opts)?;
        io::write_identity_csv(&out.join(format!("c1-identity-p{p}.csv")), &report)?;
        worst = worst.max(report.max_rel_error());
    }
    Ok(Row {
        id: 1,
        scenario: "homogeneous (1,1,2), p = 2, 3, 5",
        quantity: "max relError",
        measured: worst,
        required: "< 1e-6".into(),
        pass: worst < 1e-6,
    })
}

fn einstein_equality(out: &Path, opts: &SolverOptions) -> Result<Row, Failure> {
    let traj = homogeneous_trajectory(1.0, 1.0, 1.0, 0.05, 1e-4)?;
    let report = verify_along_flow(&traj, ExponentParam::critical(3), opts)?;
    io::write_identity_csv(&out.join("c2-identity.csv"), &report)?;
    let fd = report.samples.iter().fold(0.0f64, |m, s| m.max(s.fd.abs()));
    let rhs_zero = report.samples.iter().all(|s| s.rhs == 0.0);
    Ok(Row {
        id: 2,
        scenario: "round S3, critical p",
        quantity: "max |dY/dt|",
        measured: fd,
        required: "< 1e-8, rhs == 0".into(),
        pass: fd < 1e-8 && rhs_zero,
    })
}

fn start_derivative(out: &Path, opts: &SolverOptions) -> Result<Row, Failure> {
    let traj = homogeneous_trajectory(1.0, 1.0, 2.0, 4e-4, 1e-4)?;
    let start = derivative_at_start(&traj, ExponentParam::critical(3), opts)?;
    let metric = &traj.snapshots[0];
    let curv = metric.curvature()?;
    let u0 = start.u0[0];
    let expected = 2.0 * u0 * u0 * curv.traceless_sq[0] * metric.volume()?;
    let rel = (start.fd - expected).abs() / expected.abs();
    io::write_summary(
        &out.join("c3-start.csv"),
        &[
            ("fd", fmt_f64(start.fd)),
            ("expected", fmt_f64(expected)),
            ("rel_error", fmt_f64(rel)),
            ("u0", fmt_f64(u0)),
        ],
    )?;
    Ok(Row {
        id: 3,
        scenario: "homogeneous (1,1,2), critical p, t = 0",
        quantity: "rel. error vs 2u0^2 int|R0|^2",
        measured: rel,
        required: "< 1e-6, fd > 0".into(),
        pass: rel < 1e-6 && start.fd > 0.0,
    })
}

fn warped_report(intervals: usize, out: &Path, opts: &SolverOptions) -> Result<IdentityReport, Failure> {
    let w = WarpedMetric::bumpy(3, intervals + 1, 2, 0.1)?;
    let (dt, save_every) = plan_steps(0.01, cfl_time_step(&w), 40)?;
    let traj = integrate(&w.into(), 0.01, dt, save_every)?;
    io::write_trajectory_csv(&out.join(format!("c4-trajectory-n{intervals}.csv")), &traj)?;
    let report = verify_along_flow(&traj, ExponentParam::new(3, 3.0)?, opts)?;
    io::write_identity_csv(&out.join(format!("c4-identity-n{intervals}.csv")), &report)?;
    Ok(report)
}

fn warped_identity(out: &Path, opts: &SolverOptions) -> Result<Vec<Row>, Failure> {
    let coarse = warped_report(400, out, opts)?.max_rel_error();
    let fine = warped_report(800, out, opts)?.max_rel_error();
    Ok(vec![
        Row {
            id: 4,
            scenario: "bumpy-2-0.1, p = 3, N = 400",
            quantity: "max relError",
            measured: coarse,
            required: "< 2e-2".into(),
            pass: coarse < 0.02,
        },
        Row {
            id: 4,
            scenario: "bumpy-2-0.1, p = 3, N = 800",
            quantity: "max relError",
            measured: fine,
            required: format!("< N = 400 value {coarse:.3e}"),
            pass: fine < coarse,
        },
    ])
}

pub(super) fn run(out: &Path, lines: &mut Vec<String>) -> Result<(), Failure> {
    let opts = SolverOptions::default();
    let mut rows = vec![
        squashed_identity(out, &opts)?,
        einstein_equality(out, &opts)?,
        start_derivative(out, &opts)?,
    ];
    rows.extend(warped_identity(out, &opts)?);

    io::write_csv_atomic(
        &out.join("scoreboard.csv"),
        &["criterion", "scenario", "quantity", "measured", "required", "pass"],
        rows.iter().map(|r| {
            vec![
                r.id.to_string(),
                r.scenario.to_string(),
                r.quantity.to_string(),
                fmt_f64(r.measured),
                r.required.clone(),
                r.pass.to_string(),
            ]
        }),
    )?;
    lines.push(format!(
        "{:<3} {:<40} {:<32} {:>11}  {:<22} {}",
        "#", "scenario", "quantity", "measured", "required", "status"
    ));
    for r in &rows {
        lines.push(format!(
            "{:<3} {:<40} {:<32} {:>11.3e}  {:<22} {}",
            r.id,
            r.scenario,
            r.quantity,
            r.measured,
            r.required,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        lines.push(format!("demo: all {} rows pass", rows.len()));
        Ok(())
    } else {
        Err(Failure::Check(format!("demo rows failed for criteria {}", failed.join(", "))))
    }
}

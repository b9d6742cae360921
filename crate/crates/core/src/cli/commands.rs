use super::{Command, Config, Failure};
use crate::flow::{check_evolution_identities, integrate, FlowTrajectory};
use crate::geometry::Metric;
use crate::io::{self, fmt_f64};
use crate::spectral::{koiso_check, symmetric_spectrum};
use crate::verifier::{einstein_defect, verify_along_flow};
use crate::yamabe::{continue_to_critical, solve_subcritical, ConformalSolution};
use crate::Error;
use std::path::Path;

type Lines = Vec<String>;

/// Runs `cmd`, appending report lines to `lines` as it goes.
pub(super) fn run(cmd: Command, cfg: &Config, out: &Path, jobs: usize, lines: &mut Lines) -> Result<(), Failure> {
    match cmd {
        Command::Curvature => curvature(cfg, out, lines),
        Command::Flow => flow(cfg, out, lines),
        Command::Spectrum => spectrum(cfg, out, lines),
        Command::Yamabe => {
            let metric = cfg.metric()?;
            if cfg.sweep.p.is_empty() {
                return yamabe(cfg, &metric, out, lines);
            }
            sweep(&cfg.sweep.p, jobs, out, lines, |p, dir, sink| {
                let mut entry = cfg.clone();
                entry.yamabe.p = Some(p);
                entry.yamabe.continuation = false;
                yamabe(&entry, &metric, dir, sink)
            })
        }
        Command::Verify => {
            let metric = cfg.metric()?;
            let traj = trajectory(cfg, &metric, out)?;
            if cfg.sweep.p.is_empty() {
                return verify(cfg, &traj, cfg.yamabe.p, out, lines);
            }
            sweep(&cfg.sweep.p, jobs, out, lines, |p, dir, sink| {
                verify(cfg, &traj, Some(p), dir, sink)
            })
        }
        Command::Demo => unreachable!("the demo is dispatched separately"),
    }
}

/// Runs `entry` for every exponent, `jobs` at a time, each in its own
/// subdirectory. Lines come back in entry order whatever the scheduling.
fn sweep<F>(ps: &[f64], jobs: usize, out: &Path, lines: &mut Lines, entry: F) -> Result<(), Failure>
where
    F: Fn(f64, &Path, &mut Lines) -> Result<(), Failure> + Sync,
{
    let dirs: Vec<_> = (0..ps.len()).map(|i| out.join(format!("sweep-{i:02}"))).collect();
    let mut results: Vec<Option<(Lines, Result<(), Failure>)>> = (0..ps.len()).map(|_| None).collect();
    let workers = jobs.min(ps.len()).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (entry, dirs) = (&entry, &dirs);
                s.spawn(move || {
                    (w..ps.len())
                        .step_by(workers)
                        .map(|i| {
                            let mut sink = Lines::new();
                            let r = entry(ps[i], &dirs[i], &mut sink);
                            (i, (sink, r))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let mut first_failure = None;
    for (i, r) in results.into_iter().enumerate() {
        let tag = format!("[sweep-{i:02} p={}]", ps[i]);
        let (sink, r) = r.expect("every entry ran");
        lines.extend(sink.into_iter().map(|l| format!("{tag} {l}")));
        if let Err(f) = r {
            if !matches!(f, Failure::Check(_)) {
                lines.push(format!("{tag} error: {f}"));
            }
            first_failure.get_or_insert(f);
        }
    }
    first_failure.map_or(Ok(()), Err)
}

fn curvature(cfg: &Config, out: &Path, lines: &mut Lines) -> Result<(), Failure> {
    let metric = cfg.metric()?;
    let curv = metric.curvature()?;
    if let Metric::Warped(w) = &metric {
        io::write_metric_csv(&out.join("metric.csv"), w)?;
    }
    io::write_curvature_csv(&out.join("curvature.csv"), &metric, &curv)?;
    let volume = metric.volume()?;
    let defect = einstein_defect(&metric)?;
    io::write_summary(
        &out.join("summary.csv"),
        &[
            ("R_min", fmt_f64(curv.min_scalar())),
            ("R_max", fmt_f64(curv.max_scalar())),
            ("traceless_ricci_sq_integral", fmt_f64(defect)),
            ("volume", fmt_f64(volume)),
        ],
    )?;
    lines.push(format!(
        "curvature: R in [{:.10e}, {:.10e}]",
        curv.min_scalar(),
        curv.max_scalar()
    ));
    lines.push(format!(
        "curvature: einstein defect int|R0|^2 dV = {defect:.6e}, volume = {volume:.10e}"
    ));
    Ok(())
}

fn solve(cfg: &Config, metric: &Metric) -> Result<Vec<ConformalSolution>, Failure> {
    let opts = cfg.solver_options();
    if cfg.yamabe.continuation {
        Ok(continue_to_critical(metric, &cfg.schedule()?, &opts)?)
    } else {
        Ok(vec![solve_subcritical(metric, cfg.exponent(cfg.yamabe.p)?, &opts)?])
    }
}

fn yamabe(cfg: &Config, metric: &Metric, out: &Path, lines: &mut Lines) -> Result<(), Failure> {
    let stages = solve(cfg, metric)?;
    let last = stages.last().expect("at least one stage");
    io::write_solution_csv(&out.join("solution.csv"), metric, last)?;
    io::write_solution_summary(&out.join("summary.csv"), &stages)?;
    lines.extend(stages.iter().map(|s| {
            format!(
                "yamabe: p = {} y_tilde = {:.12e} residual = {:.3e} iterations = {}",
                s.p.value(),
                s.y_tilde,
                s.residual_l2,
                s.iterations
            )
    }));
    Ok(())
}

/// Integrates the configured flow and writes `trajectory.csv`.
fn trajectory(cfg: &Config, metric: &Metric, out: &Path) -> Result<FlowTrajectory, Failure> {
    let (dt, save_every) = cfg.flow_plan(metric)?;
    let traj = integrate(metric, cfg.flow.t_end, dt, save_every)?;
    io::write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
    Ok(traj)
}

fn flow(cfg: &Config, out: &Path, lines: &mut Lines) -> Result<(), Failure> {
    let metric = cfg.metric()?;
    let traj = trajectory(cfg, &metric, out)?;
    if cfg.flow.snapshots {
        for (i, m) in traj.snapshots.iter().enumerate() {
            if let Metric::Warped(w) = m {
                io::write_metric_csv(&out.join("snapshots").join(format!("metric-{i:05}.csv")), w)?;
            }
        }
    }
    let last = traj.diagnostics.last().expect("initial metric is saved");
    lines.push(format!(
        "flow: {} snapshots to t = {}, V = {:.10e}, R in [{:.6e}, {:.6e}]",
        traj.len(),
        last.t,
        last.volume,
        last.r_min,
        last.r_max
    ));
    match check_evolution_identities(&traj, cfg.flow.pole_margin) {
        Ok(rep) => {
            io::write_summary(
                &out.join("evolution.csv"),
                &[
                    ("scalar_rel_error", fmt_f64(rep.scalar_rel_error)),
                    ("volume_rel_error", fmt_f64(rep.volume_rel_error)),
                    ("density_rel_error", fmt_f64(rep.density_rel_error)),
                ],
            )?;
            lines.push(format!(
                "flow: evolution identities scalar {:.3e} volume {:.3e} density {:.3e}",
                rep.scalar_rel_error, rep.volume_rel_error, rep.density_rel_error
            ));
        }
        Err(Error::InsufficientSnapshots { .. }) => {
            lines.push("flow: too few snapshots for the evolution identities".into());
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn verify(cfg: &Config, traj: &FlowTrajectory, p: Option<f64>, out: &Path, lines: &mut Lines) -> Result<(), Failure> {
    let p = cfg.exponent(p)?;
    let report = verify_along_flow(traj, p, &cfg.solver_options())?;
    io::write_identity_csv(&out.join("identity.csv"), &report)?;
    let max = report.max_rel_error();
    let max_abs = report.samples.iter().fold(0.0f64, |m, s| m.max((s.fd - s.rhs).abs()));
    let tol = cfg.verify.tolerance;
    let pass = max < tol;
    io::write_summary(
        &out.join("summary.csv"),
        &[
            ("p", fmt_f64(p.value())),
            ("samples", report.samples.len().to_string()),
            ("max_rel_error", fmt_f64(max)),
            ("max_abs_error", fmt_f64(max_abs)),
            ("tolerance", fmt_f64(tol)),
            ("pass", pass.to_string()),
            ("family_suspect", report.any_family_suspect().to_string()),
        ],
    )?;
    if report.any_family_suspect() {
        lines.push("verify: warning: warm-start jump suggests a switch between solution families".into());
    }
    let verdict = format!(
        "verify: {} p = {} max relError = {max:.3e} max |fd - rhs| = {max_abs:.3e} (tolerance {tol:.1e}, {} samples)",
        if pass { "PASS" } else { "FAIL" },
        p.value(),
        report.samples.len()
    );
    lines.push(verdict.clone());
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(verdict))
    }
}

fn spectrum(cfg: &Config, out: &Path, lines: &mut Lines) -> Result<(), Failure> {
    let metric = cfg.metric()?;
    let Metric::Warped(w) = &metric else {
        return Err(Failure::Config("metric.backend: spectrum needs the warped backend".into()));
    };
    let target = if cfg.spectrum.yamabe_metric {
        let stages = solve(cfg, &metric)?;
        let last = stages.last().expect("at least one stage");
        lines.push(format!("spectrum: conformal metric with y_tilde = {:.12e}", last.y_tilde));
        w.conformal(&last.u)?
    } else {
        w.clone()
    };
    let report = symmetric_spectrum(&target, cfg.spectrum.count)?;
    io::write_spectrum_csv(&out.join("spectrum.csv"), &report)?;
    lines.extend(
        report
            .eigenvalues
            .iter()
            .zip(&report.error_estimates)
            .enumerate()
            .map(|(k, (l, e))| format!("spectrum: lambda_{k} = {l:.10e} (est. rel. error {e:.1e})")),
    );
    let curv = target.curvature()?;
    match koiso_check(&curv, &report, cfg.spectrum.delta) {
        Ok(k) => {
            io::write_koiso_summary(&out.join("koiso.csv"), Ok(&k))?;
            lines.push(format!(
                "spectrum: R/(n-1) = {:.10e} gap = {:.3e} matched = {} (symmetric sector only, partial evidence)",
                k.target, k.gap, k.matched
            ));
        }
        Err(Error::Inapplicable(reason)) => {
            io::write_koiso_summary(&out.join("koiso.csv"), Err(&reason))?;
            lines.push(format!("spectrum: eigenvalue test inapplicable: {reason}"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

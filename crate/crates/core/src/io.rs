//! CSV artifacts. Every file is written to a temporary sibling and renamed
//! into place, so an interrupted run never leaves a truncated file behind.
//! Floats are printed with 17 significant digits.

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry::{CurvatureData, Metric, RicciComponents, WarpedMetric};
use crate::spectral::{KoisoCheck, SpectralReport};
use crate::verifier::IdentityReport;
use crate::yamabe::ConformalSolution;
use serde::Deserialize;
use std::io::Write;
use std::path::Path;
use tempfile::NamedTempFile;

/// Round-trip formatting of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn temp_in(path: &Path) -> Result<NamedTempFile> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    Ok(NamedTempFile::new_in(dir)?)
}

fn persist(tmp: NamedTempFile, path: &Path) -> Result<()> {
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_text_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = temp_in(path)?;
    tmp.write_all(contents.as_bytes())?;
    persist(tmp, path)
}

pub fn write_csv_atomic<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let tmp = temp_in(path)?;
    let mut w = csv::Writer::from_writer(tmp);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let tmp = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    persist(tmp, path)
}

/// Two-column `key,value` summary.
pub fn write_summary(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    write_csv_atomic(
        path,
        &["key", "value"],
        entries.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_f64(*v)).collect()
}

/// Columns `x, psi, phi`.
pub fn write_metric_csv(path: &Path, metric: &WarpedMetric) -> Result<()> {
    let x = metric.x();
    write_csv_atomic(
        path,
        &["x", "psi", "phi"],
        (0..metric.len()).map(|i| floats(&[x[i], metric.psi()[i], metric.phi()[i]])),
    )
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    x: f64,
    psi: f64,
    phi: f64,
}

/// Loads a warped profile written by [`write_metric_csv`] (or by hand). The
/// x column must be the uniform grid on [0, 1].
pub fn read_profile_csv(path: &Path, n: usize) -> Result<WarpedMetric> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ProfileRow>, _>>()?;
    if rows.len() < 2 {
        return Err(Error::Config(format!("{}: profile needs at least 2 rows", path.display())));
    }
    let h = 1.0 / (rows.len() - 1) as f64;
    if let Some((i, r)) = rows
        .iter()
        .enumerate()
        .find(|(i, r)| (r.x - *i as f64 * h).abs() > 1e-9)
    {
        return Err(Error::Config(format!(
            "{}: row {i} has x = {} but the grid must be uniform on [0, 1]",
            path.display(),
            r.x
        )));
    }
    WarpedMetric::new(
        n,
        rows.iter().map(|r| r.psi).collect(),
        rows.iter().map(|r| r.phi).collect(),
    )
}

pub fn write_curvature_csv(path: &Path, metric: &Metric, curv: &CurvatureData) -> Result<()> {
    let common = ["R", "ricci_sq", "traceless_sq", "laplacian_R", "volume_weight"];
    let base = |i: usize| {
        floats(&[
            curv.scalar[i],
            curv.ricci_sq[i],
            curv.traceless_sq[i],
            curv.laplacian_scalar[i],
            curv.volume_weight[i],
        ])
    };
    match (&curv.ricci, metric) {
        (RicciComponents::Frame(r), Metric::Homogeneous(h)) => {
            let mut header = vec!["a", "b", "c", "ric_1", "ric_2", "ric_3"];
            header.extend(common);
            let mut row = floats(&[h.a, h.b, h.c, r[0], r[1], r[2]]);
            row.extend(base(0));
            write_csv_atomic(path, &header, [row])
        }
        (RicciComponents::Warped { radial, spherical }, Metric::Warped(w)) => {
            let mut header = vec!["x", "s", "ric_radial", "ric_spherical"];
            header.extend(common);
            let (x, s) = (w.x(), w.arclength());
            write_csv_atomic(
                path,
                &header,
                (0..w.len()).map(|i| {
                    let mut row = floats(&[x[i], s[i], radial[i], spherical[i]]);
                    row.extend(base(i));
                    row
                }),
            )
        }
        _ => Err(Error::WrongBackend("curvature and metric from the same backend")),
    }
}

/// Columns `x, u` (a single row with x = 0 on the homogeneous backend).
pub fn write_solution_csv(path: &Path, metric: &Metric, sol: &ConformalSolution) -> Result<()> {
    let x = metric.coordinates();
    write_csv_atomic(path, &["x", "u"], (0..sol.u.len()).map(|i| floats(&[x[i], sol.u[i]])))
}

/// One row per stage of a continuation (or a single solve).
pub fn write_solution_summary(path: &Path, stages: &[ConformalSolution]) -> Result<()> {
    write_csv_atomic(
        path,
        &["p", "y_tilde", "residual_l2", "normalization_defect", "iterations"],
        stages.iter().map(|s| {
            vec![
                fmt_f64(s.p.value()),
                fmt_f64(s.y_tilde),
                fmt_f64(s.residual_l2),
                fmt_f64(s.normalization_defect),
                s.iterations.to_string(),
            ]
        }),
    )
}

/// Columns `t, V, Rmin, Rmax, phiMin, tracelessRicciL2`; phiMin is empty
/// on the homogeneous backend.
pub fn write_trajectory_csv(path: &Path, traj: &FlowTrajectory) -> Result<()> {
    write_csv_atomic(
        path,
        &["t", "V", "Rmin", "Rmax", "phiMin", "tracelessRicciL2"],
        traj.diagnostics.iter().map(|d| {
            vec![
                fmt_f64(d.t),
                fmt_f64(d.volume),
                fmt_f64(d.r_min),
                fmt_f64(d.r_max),
                d.phi_min.map(fmt_f64).unwrap_or_default(),
                fmt_f64(d.traceless_l2),
            ]
        }),
    )
}

/// Columns `t, fd, rhs, termA, termB, termC, termD, relError,
/// warmStartJump, familySuspect`.
pub fn write_identity_csv(path: &Path, report: &IdentityReport) -> Result<()> {
    write_csv_atomic(
        path,
        &[
            "t",
            "fd",
            "rhs",
            "termA",
            "termB",
            "termC",
            "termD",
            "relError",
            "warmStartJump",
            "familySuspect",
        ],
        report.samples.iter().map(|s| {
            let mut row = floats(&[
                s.t,
                s.fd,
                s.rhs,
                s.terms.a,
                s.terms.b,
                s.terms.c,
                s.terms.d,
                s.rel_error,
                s.warm_start_jump,
            ]);
            row.push(s.family_suspect.to_string());
            row
        }),
    )
}

/// Columns `index, eigenvalue, errorEstimate`.
pub fn write_spectrum_csv(path: &Path, report: &SpectralReport) -> Result<()> {
    write_csv_atomic(
        path,
        &["index", "eigenvalue", "errorEstimate"],
        report.eigenvalues.iter().enumerate().map(|(i, l)| {
            vec![
                i.to_string(),
                fmt_f64(*l),
                fmt_f64(report.error_estimates[i]),
            ]
        }),
    )
}

/// Summary of a Koiso check, or the reason it does not apply.
pub fn write_koiso_summary(path: &Path, check: std::result::Result<&KoisoCheck, &str>) -> Result<()> {
    match check {
        Ok(k) => write_summary(
            path,
            &[
                ("target", fmt_f64(k.target)),
                ("gap", fmt_f64(k.gap)),
                ("matched", k.matched.to_string()),
                ("hypothesis_holds", k.hypothesis_holds().to_string()),
            ],
        ),
        Err(reason) => write_summary(path, &[("inapplicable", reason.to_string())]),
    }
}

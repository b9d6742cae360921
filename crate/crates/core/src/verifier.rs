//! Finite-difference checks of the evolution formula for `Ỹ_p(t)` along
//! Ricci flow,
//!
//! ```text
//! dỸ/dt = 2a ∫R⁰(∇u,∇u) + 2∫|R⁰|²u² + c₁ ∫u²ΔR + c₂ ∫(a R|∇u|² + R²u²),
//! ```
//!
//! with `a = 4(n−1)/(n−2)` and all integrals against dV(t).

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry::{gradient_coefficient, CurvatureData, Metric, RicciComponents, WarpedMetric};
use crate::yamabe::{solve_subcritical, ConformalSolution, ExponentParam, SolverOptions};

/// Allowed |∫u^{p+1}dV − 1| for the right-hand side.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Relative floor of the error denominator, times ∫R²u² dV.
pub const REL_ERROR_FLOOR: f64 = 1e-10;
/// A warm-start jump above this multiple of the median flags the sample.
pub const JUMP_FACTOR: f64 = 10.0;

/// `(np − 2p − 3n + 2) / ((p+1)(n−2))`; exactly `−(n−2)/n` at the critical
/// exponent.
pub fn coeff_c1(p: ExponentParam) -> f64 {
    let n = p.dim() as f64;
    if p.is_critical() {
        // p + 1 = 2n/(n−2) and np − 2p − 3n + 2 = (n(n+2) − 2(n+2) − (3n−2)(n−2))/(n−2),
        // all integers.
        let nn = p.dim() as i64;
        let num = nn * (nn + 2) - 2 * (nn + 2) - (3 * nn - 2) * (nn - 2);
        let den = 2 * nn * (nn - 2);
        return num as f64 / den as f64;
    }
    let pv = p.value();
    (n * pv - 2.0 * pv - 3.0 * n + 2.0) / ((pv + 1.0) * (n - 2.0))
}

/// `2/n − (p−1)/(p+1)`; exactly zero at the critical exponent.
pub fn coeff_c2(p: ExponentParam) -> f64 {
    if p.is_critical() {
        return 0.0;
    }
    let pv = p.value();
    2.0 / p.dim() as f64 - (pv - 1.0) / (pv + 1.0)
}

/// The four integrals of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsTerms {
    /// 2a ∫ R⁰(∇u, ∇u) dV
    pub a: f64,
    /// 2 ∫ |R⁰|² u² dV
    pub b: f64,
    /// c₁ ∫ u² ΔR dV
    pub c: f64,
    /// c₂ ∫ (a R |∇u|² + R² u²) dV
    pub d: f64,
}

impl RhsTerms {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }
}

fn integral(metric: &Metric, f: impl Fn(usize) -> f64) -> Result<f64> {
    let values: Vec<f64> = (0..metric.len()).map(f).collect();
    metric.integrate(&values)
}

/// Evaluates the right-hand side at one time for a normalized `u`.
pub fn evolution_rhs(metric: &Metric, curv: &CurvatureData, u: &[f64], p: ExponentParam) -> Result<RhsTerms> {
    metric.check_len(u)?;
    let pv = p.value();
    let defect = (integral(metric, |i| u[i].powf(pv + 1.0))? - 1.0).abs();
    if defect > NORMALIZATION_TOL {
        return Err(Error::NormalizationViolated { defect });
    }
    let a = gradient_coefficient(metric.dim());
    let grad = metric.gradient_sq(u)?;
    let traceless = curv.radial_traceless();
    let r = &curv.scalar;
    let (c1, c2) = (coeff_c1(p), coeff_c2(p));
    Ok(RhsTerms {
        a: 2.0 * a * integral(metric, |i| traceless[i] * grad[i])?,
        b: 2.0 * integral(metric, |i| curv.traceless_sq[i] * u[i] * u[i])?,
        c: c1 * integral(metric, |i| u[i] * u[i] * curv.laplacian_scalar[i])?,
        d: c2 * integral(metric, |i| a * r[i] * grad[i] + r[i] * r[i] * u[i] * u[i])?,
    })
}

/// One interior sample of [`verify_along_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySample {
    pub t: f64,
    pub y_tilde: f64,
    /// Finite-difference dỸ/dt.
    pub fd: f64,
    pub rhs: f64,
    pub terms: RhsTerms,
    pub rel_error: f64,
    /// ‖u(t + Δt) − u(t)‖_∞
    pub warm_start_jump: f64,
    /// The jump is large compared to the rest of the trajectory, so the
    /// tracked solutions may not form a C¹ family here.
    pub family_suspect: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub p: ExponentParam,
    pub samples: Vec<IdentitySample>,
}

impl IdentityReport {
    pub fn max_rel_error(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.rel_error))
    }

    pub fn any_family_suspect(&self) -> bool {
        self.samples.iter().any(|s| s.family_suspect)
    }
}

/// Solves at every snapshot, warm-starting each solve from the previous
/// solution.
pub fn solve_along(traj: &FlowTrajectory, p: ExponentParam, opts: &SolverOptions) -> Result<Vec<ConformalSolution>> {
    let mut out: Vec<ConformalSolution> = Vec::with_capacity(traj.len());
    for (t, metric) in traj.times.iter().zip(&traj.snapshots) {
        let stage = match out.last() {
            Some(prev) => opts.with_warm_start(&prev.u),
            None => opts.clone(),
        };
        out.push(solve_subcritical(metric, p, &stage).map_err(|e| e.at_time(*t))?);
    }
    Ok(out)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn rel_error(fd: f64, rhs: f64, metric: &Metric, curv: &CurvatureData, u: &[f64]) -> Result<f64> {
    let scale = integral(metric, |i| (curv.scalar[i] * u[i]).powi(2))?;
    Ok((fd - rhs).abs() / rhs.abs().max(REL_ERROR_FLOOR * scale))
}

/// Compares the finite-difference derivative of Ỹ_p with the right-hand side
/// at every interior snapshot. Homogeneous trajectories use one Richardson
/// level (Δt and 2Δt); warped ones use plain centered differences.
pub fn verify_along_flow(traj: &FlowTrajectory, p: ExponentParam, opts: &SolverOptions) -> Result<IdentityReport> {
    let richardson = matches!(traj.snapshots.first(), Some(Metric::Homogeneous(_)));
    let needed = if richardson { 5 } else { 3 };
    if traj.len() < needed {
        return Err(Error::InsufficientSnapshots {
            needed,
            got: traj.len(),
        });
    }
    let dt = traj
        .uniform_spacing()
        .ok_or_else(|| Error::Config("snapshots must be uniformly spaced in time".into()))?;
    let sols = solve_along(traj, p, opts)?;
    let y: Vec<f64> = sols.iter().map(|s| s.y_tilde).collect();
    let jumps: Vec<f64> = sols
        .windows(2)
        .map(|w| {
            w[0].u
                .iter()
                .zip(&w[1].u)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    let typical = median(&jumps);
    let margin = if richardson { 2 } else { 1 };

    let mut samples = Vec::with_capacity(traj.len() - 2 * margin);
    for j in margin..traj.len() - margin {
        let near = (y[j + 1] - y[j - 1]) / (2.0 * dt);
        let fd = if richardson {
            let far = (y[j + 2] - y[j - 2]) / (4.0 * dt);
            (4.0 * near - far) / 3.0
        } else {
            near
        };
        let metric = &traj.snapshots[j];
        let t = traj.times[j];
        let curv = metric.curvature().map_err(|e| e.at_time(t))?;
        let terms = evolution_rhs(metric, &curv, &sols[j].u, p).map_err(|e| e.at_time(t))?;
        let rhs = terms.total();
        let jump = jumps[j];
        samples.push(IdentitySample {
            t,
            y_tilde: y[j],
            fd,
            rhs,
            terms,
            rel_error: rel_error(fd, rhs, metric, &curv, &sols[j].u)?,
            warm_start_jump: jump,
            family_suspect: jump > JUMP_FACTOR * typical && jump > 1e-12,
        });
    }
    Ok(IdentityReport { p, samples })
}

/// dỸ/dt at the first snapshot from the one-sided 5-point formula, with the
/// right-hand side there.
#[derive(Debug, Clone, PartialEq)]
pub struct StartDerivative {
    pub fd: f64,
    pub terms: RhsTerms,
    pub u0: Vec<f64>,
}

pub fn derivative_at_start(traj: &FlowTrajectory, p: ExponentParam, opts: &SolverOptions) -> Result<StartDerivative> {
    if traj.len() < 5 {
        return Err(Error::InsufficientSnapshots {
            needed: 5,
            got: traj.len(),
        });
    }
    let dt = traj
        .uniform_spacing()
        .ok_or_else(|| Error::Config("snapshots must be uniformly spaced in time".into()))?;
    let head = FlowTrajectory {
        times: traj.times[..5].to_vec(),
        snapshots: traj.snapshots[..5].to_vec(),
        diagnostics: traj.diagnostics[..5].to_vec(),
    };
    let sols = solve_along(&head, p, opts)?;
    let y: Vec<f64> = sols.iter().map(|s| s.y_tilde).collect();
    let fd = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * dt);
    let metric = &traj.snapshots[0];
    let curv = metric.curvature()?;
    let terms = evolution_rhs(metric, &curv, &sols[0].u, p)?;
    Ok(StartDerivative {
        fd,
        terms,
        u0: sols[0].u.clone(),
    })
}

/// Both sides of `∫u Rc(∇∇u) dV = ¼∫u²ΔR dV − ∫Rc(∇u,∇u) dV`, term by term
/// with the warped kernels. Returns `(lhs, rhs)`.
pub fn bianchi_ibp_sides(metric: &WarpedMetric, u: &[f64]) -> Result<(f64, f64)> {
    let curv = metric.curvature()?;
    let RicciComponents::Warped { radial, spherical } = &curv.ricci else {
        unreachable!("warped metrics carry warped Ricci components")
    };
    let n = metric.dim() as f64;
    let us = metric.radial_derivative(u);
    let uss = metric.radial_second_derivative(u);
    let phi_s = metric.radial_derivative(metric.phi());
    let last = metric.len() - 1;
    // Hessian: u_ss radially, (φ_s/φ) u_s on each spherical direction, with
    // the pole limit u_ss.
    let hess_sph: Vec<f64> = (0..metric.len())
        .map(|i| {
            if i == 0 || i == last {
                uss[i]
            } else {
                phi_s[i] / metric.phi()[i] * us[i]
            }
        })
        .collect();
    let m = Metric::Warped(metric.clone());
    let lhs = integral(&m, |i| u[i] * (radial[i] * uss[i] + (n - 1.0) * spherical[i] * hess_sph[i]))?;
    let rhs = 0.25 * integral(&m, |i| u[i] * u[i] * curv.laplacian_scalar[i])?
        - integral(&m, |i| radial[i] * us[i] * us[i])?;
    Ok((lhs, rhs))
}

/// Relative defect `|lhs − rhs| / max(|lhs|, |rhs|)` of the contracted
/// Bianchi integration by parts; zero when both sides vanish.
pub fn bianchi_ibp_check(metric: &WarpedMetric, u: &[f64]) -> Result<f64> {
    metric.check_len(u)?;
    let (lhs, rhs) = bianchi_ibp_sides(metric, u)?;
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 })
}

/// ∫ |R⁰|² dV
pub fn einstein_defect(metric: &Metric) -> Result<f64> {
    let curv = metric.curvature()?;
    metric.integrate(&curv.traceless_sq)
}

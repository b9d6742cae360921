//! Yamabe quotient, its subcritical regularization, and a shifted
//! fixed-point solver for the Euler–Lagrange system
//!
//! ```text
//! −(4(n−1)/(n−2)) Δu + R u = Ỹ_p u^p,     ∫ u^{p+1} dV = 1.
//! ```
//!
//! On warped metrics the minimization runs over rotationally symmetric `u`
//! only, so the reported value is the *symmetric* Yamabe quotient.

use crate::error::{Error, Result};
use crate::geometry::{critical_exponent, gradient_coefficient, Metric};

/// Lower clamp for iterates.
/// Relative residual below which Newton steps replace the fixed point.
const NEWTON_SWITCH: f64 = 1e-3;

pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Exponent p in (1, (n+2)/(n−2)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentParam {
    n: usize,
    p: f64,
    critical: bool,
}

impl ExponentParam {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        let crit = critical_exponent(n);
        if n < 3 || !(p > 1.0 && p <= crit) {
            return Err(Error::InvalidExponent { p, critical: crit });
        }
        Ok(Self {
            n,
            p,
            critical: p == crit,
        })
    }

    pub fn critical(n: usize) -> Self {
        Self {
            n,
            p: critical_exponent(n),
            critical: true,
        }
    }

    pub fn value(&self) -> f64 {
        self.p
    }

    pub fn is_critical(&self) -> bool {
        self.critical
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Stop once the L² norm of the Euler–Lagrange defect is below this.
    pub residual_tol: f64,
    /// Allowed |∫u^{p+1}dV − 1| on return.
    pub normalization_tol: f64,
    pub max_iterations: usize,
    /// Overrides the automatic spectral shift.
    pub shift: Option<f64>,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            normalization_tol: 1e-10,
            max_iterations: 20_000,
            shift: None,
            warm_start: None,
        }
    }
}

impl SolverOptions {
    pub fn with_warm_start(&self, u: &[f64]) -> Self {
        Self {
            warm_start: Some(u.to_vec()),
            ..self.clone()
        }
    }
}

/// A positive solution of the (sub)critical Euler–Lagrange system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalSolution {
    pub u: Vec<f64>,
    pub p: ExponentParam,
    pub y_tilde: f64,
    pub residual_l2: f64,
    pub normalization_defect: f64,
    pub iterations: usize,
    /// ‖u − warm start‖_∞ when a warm start was supplied.
    pub warm_start_distance: Option<f64>,
}

/// Discretized pieces of the Yamabe functional for one metric.
struct Functional<'a> {
    metric: &'a Metric,
    weights: Vec<f64>,
    scalar: Vec<f64>,
    grad_coeff: f64,
}

impl<'a> Functional<'a> {
    fn new(metric: &'a Metric) -> Result<Self> {
        let curvature = metric.curvature()?;
        Ok(Self {
            metric,
            weights: metric.quadrature_weights(),
            scalar: curvature.scalar,
            grad_coeff: gradient_coefficient(metric.dim()),
        })
    }

    /// ∫ (a|∇u|² + R u²) dV
    fn energy(&self, u: &[f64]) -> Result<f64> {
        let potential: f64 = self
            .weights
            .iter()
            .zip(&self.scalar)
            .zip(u)
            .map(|((w, r), u)| w * r * u * u)
            .sum();
        Ok(self.grad_coeff * self.metric.dirichlet_energy(u)? + potential)
    }

    /// ∫ u^{p+1} dV
    fn power_integral(&self, u: &[f64], p: f64) -> f64 {
        self.weights
            .iter()
            .zip(u)
            .map(|(w, u)| w * u.powf(p + 1.0))
            .sum()
    }

    fn quotient(&self, u: &[f64], p: f64) -> Result<f64> {
        self.metric.check_len(u)?;
        if u.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveTestFunction);
        }
        let denom = self.power_integral(u, p);
        if !(denom > 0.0) {
            return Err(Error::NonPositiveTestFunction);
        }
        Ok(self.energy(u)? / denom.powf(2.0 / (p + 1.0)))
    }

    fn residual(&self, u: &[f64], p: f64, y: f64) -> Result<Vec<f64>> {
        let lap = self.metric.laplacian_apply(u)?;
        Ok(lap
            .iter()
            .zip(&self.scalar)
            .zip(u)
            .map(|((l, r), u)| -self.grad_coeff * l + r * u - y * u.powf(p))
            .collect())
    }

    fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Size of the individual terms of the residual, for relative tests.
    fn scale(&self, u: &[f64]) -> f64 {
        let r = self.scalar.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        r.max(1.0) * self.l2_norm(u)
    }

    /// One damped Newton step on `(u, Ỹ)` for the residual together with the
    /// normalization `∫u^{p+1} dV = 1`. `None` if no step along the Newton
    /// direction reduces the residual while keeping u positive.
    fn newton_step(&self, kappa: &[f64], u: &[f64], p: f64, y: f64, res: f64) -> Option<Vec<f64>> {
        let len = u.len();
        let a = self.grad_coeff;
        let w = &self.weights;
        // Weighted residual A u − Ỹ W u^p, with A = aK + W R.
        let residual = self.residual(u, p, y).ok()?;
        let g: Vec<f64> = residual.iter().zip(w).map(|(r, w)| r * w).collect();
        let diag: Vec<f64> = (0..len)
            .map(|i| {
                let left = if i > 0 { kappa[i - 1] } else { 0.0 };
                let right = if i < kappa.len() { kappa[i] } else { 0.0 };
                a * (left + right) + w[i] * (self.scalar[i] - p * y * u[i].powf(p - 1.0))
            })
            .collect();
        let off: Vec<f64> = kappa.iter().map(|k| -a * k).collect();
        let b: Vec<f64> = (0..len).map(|i| w[i] * u[i].powf(p)).collect();
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let x1 = solve_tridiagonal(&diag, &off, &neg_g)?;
        let x2 = solve_tridiagonal(&diag, &off, &b)?;
        let c = self.power_integral(u, p) - 1.0;
        let btx1: f64 = b.iter().zip(&x1).map(|(a, b)| a * b).sum();
        let btx2: f64 = b.iter().zip(&x2).map(|(a, b)| a * b).sum();
        if !(btx2.abs() > 0.0) {
            return None;
        }
        let dl = (-c / (p + 1.0) - btx1) / btx2;
        let du: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + dl * b).collect();
        let mut step = 1.0;
        for _ in 0..30 {
            let mut v: Vec<f64> = u.iter().zip(&du).map(|(u, d)| u + step * d).collect();
            if v.iter().all(|x| *x > POSITIVITY_FLOOR) {
                self.normalize(&mut v, p);
                if let Ok(yv) = self.quotient(&v, p) {
                    if let Ok(r) = self.residual(&v, p, yv) {
                        if self.l2_norm(&r) < res {
                            return Some(v);
                        }
                    }
                }
            }
            step *= 0.5;
        }
        None
    }

    fn normalize(&self, u: &mut [f64], p: f64) {
        let scale = self.power_integral(u, p).powf(-1.0 / (p + 1.0));
        u.iter_mut().for_each(|v| *v *= scale);
    }
}

/// [∫(a|∇u|² + Ru²)dV] / [∫u^{p+1}dV]^{2/(p+1)}
pub fn quotient(metric: &Metric, u: &[f64], p: ExponentParam) -> Result<f64> {
    Functional::new(metric)?.quotient(u, p.value())
}

/// Pointwise defect −aΔu + Ru − Ỹ u^p.
pub fn el_residual(metric: &Metric, u: &[f64], p: ExponentParam, y_tilde: f64) -> Result<Vec<f64>> {
    metric.check_len(u)?;
    Functional::new(metric)?.residual(u, p.value(), y_tilde)
}

/// Solves the Euler–Lagrange system at exponent `p`.
///
/// Homogeneous metrics get the constant solution in closed form. Warped
/// metrics use the shifted fixed-point iteration
/// `(−aΔ + R + σ) v = Ỹ(u) u^p + σ u`, followed by renormalization, which
/// returns whichever critical point the starting guess is attracted to.
pub fn solve_subcritical(metric: &Metric, p: ExponentParam, opts: &SolverOptions) -> Result<ConformalSolution> {
    if p.dim() != metric.dim() {
        return Err(Error::InvalidExponent {
            p: p.value(),
            critical: critical_exponent(metric.dim()),
        });
    }
    let func = Functional::new(metric)?;
    let pv = p.value();
    let warm = match &opts.warm_start {
        Some(w) => {
            metric.check_len(w)?;
            if w.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::NonPositiveTestFunction);
            }
            Some(w.clone())
        }
        None => None,
    };

    if let Metric::Homogeneous(h) = metric {
        let volume = h.volume()?;
        let u = vec![volume.powf(-1.0 / (pv + 1.0))];
        let y_tilde = func.scalar[0] * volume.powf((pv - 1.0) / (pv + 1.0));
        return finish(&func, u, p, y_tilde, 0, warm.as_deref(), opts);
    }

    let mut u = warm.clone().unwrap_or_else(|| vec![1.0; metric.len()]);
    func.normalize(&mut u, pv);

    let warped = metric.as_warped()?;
    let kappa = warped.conductances();
    let min_r = func.scalar.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_r = func.scalar.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut shift = opts.shift.unwrap_or(if min_r > 0.0 {
        0.0
    } else {
        -min_r + 0.1 * max_abs_r.max(1.0)
    });

    let mut last_residual = f64::INFINITY;
    let mut newton_ok = true;
    for it in 0..opts.max_iterations {
        let y = func.quotient(&u, pv)?;
        let res = func.l2_norm(&func.residual(&u, pv, y)?);
        if !res.is_finite() {
            break;
        }
        last_residual = res;
        if res <= opts.residual_tol {
            if u.iter().any(|v| *v <= POSITIVITY_FLOOR) {
                break;
            }
            return finish(&func, u, p, y, it, warm.as_deref(), opts);
        }
        // Close to a solution the fixed point contracts slowly along the
        // (nearly) neutral conformal directions; Newton does not care.
        if newton_ok && res < NEWTON_SWITCH * func.scale(&u) {
            match func.newton_step(&kappa, &u, pv, y, res) {
                Some(next) => {
                    u = next;
                    continue;
                }
                None => newton_ok = false,
            }
        }

        let rhs: Vec<f64> = func
            .weights
            .iter()
            .zip(&u)
            .map(|(w, u)| w * (y * u.powf(pv) + shift * u))
            .collect();
        let mut attempts = 0;
        let mut v = loop {
            let diag: Vec<f64> = (0..u.len())
                .map(|i| {
                    let left = if i > 0 { kappa[i - 1] } else { 0.0 };
                    let right = if i < kappa.len() { kappa[i] } else { 0.0 };
                    func.grad_coeff * (left + right) + func.weights[i] * (func.scalar[i] + shift)
                })
                .collect();
            let off: Vec<f64> = kappa.iter().map(|k| -func.grad_coeff * k).collect();
            match solve_spd_tridiagonal(&diag, &off, &rhs) {
                Some(v) => break v,
                None => {
                    attempts += 1;
                    if attempts > 20 {
                        return Err(Error::IndefiniteOperator { shift });
                    }
                    shift = 2.0 * shift.max(max_abs_r.max(1.0));
                }
            }
        };
        v.iter_mut().for_each(|x| *x = x.max(POSITIVITY_FLOOR));
        func.normalize(&mut v, pv);
        u = v;
    }
    Err(Error::SolverDiverged {
        p: pv,
        iterations: opts.max_iterations,
        residual: last_residual,
    })
}

fn finish(
    func: &Functional<'_>,
    u: Vec<f64>,
    p: ExponentParam,
    y_tilde: f64,
    iterations: usize,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<ConformalSolution> {
    let pv = p.value();
    let residual_l2 = func.l2_norm(&func.residual(&u, pv, y_tilde)?);
    let normalization_defect = (func.power_integral(&u, pv) - 1.0).abs();
    if normalization_defect > opts.normalization_tol {
        return Err(Error::NormalizationViolated {
            defect: normalization_defect,
        });
    }
    let warm_start_distance =
        warm.map(|w| w.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    Ok(ConformalSolution {
        u,
        p,
        y_tilde,
        residual_l2,
        normalization_defect,
        iterations,
        warm_start_distance,
    })
}

/// Geometric approach to the critical exponent:
/// `p_k = p_crit − (p_crit − p0) 2^{−k}` for `k < stages − 1`, then `p_crit`.
pub fn default_schedule(n: usize, p0: f64, stages: usize) -> Result<Vec<ExponentParam>> {
    let crit = critical_exponent(n);
    let mut out = Vec::with_capacity(stages);
    for k in 0..stages.saturating_sub(1) {
        out.push(ExponentParam::new(n, crit - (crit - p0) * 0.5f64.powi(k as i32))?);
    }
    out.push(ExponentParam::critical(n));
    Ok(out)
}

/// Runs `solve_subcritical` along an increasing schedule ending at the
/// critical exponent, warm-starting each stage from the previous one.
pub fn continue_to_critical(
    metric: &Metric,
    schedule: &[ExponentParam],
    opts: &SolverOptions,
) -> Result<Vec<ConformalSolution>> {
    match schedule.last() {
        Some(last) if last.is_critical() => {}
        _ => {
            return Err(Error::Config(
                "continuation schedule must end at the critical exponent".into(),
            ))
        }
    }
    if schedule.windows(2).any(|w| w[1].value() <= w[0].value()) {
        return Err(Error::Config("continuation schedule must be increasing".into()));
    }
    let mut out: Vec<ConformalSolution> = Vec::with_capacity(schedule.len());
    for p in schedule {
        let stage_opts = match out.last() {
            Some(prev) => opts.with_warm_start(&prev.u),
            None => opts.clone(),
        };
        out.push(solve_subcritical(metric, *p, &stage_opts)?);
    }
    Ok(out)
}

/// Thomas algorithm without pivoting for a symmetric, possibly indefinite,
/// tridiagonal system; `None` on a vanishing pivot.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let tiny = 1e-300;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot.abs() > tiny) {
        return None;
    }
    c[0] = if n > 1 { off[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if !(pivot.abs() > tiny) {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / pivot;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Thomas algorithm for a symmetric tridiagonal system; `None` if a pivot is
/// not positive.
pub(crate) fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if !(pivot > 0.0) {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / pivot;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

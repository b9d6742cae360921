use super::stencil::{d1, d2_at, Parity};
use super::{unit_sphere_area, CurvatureData, RicciComponents};
use crate::error::{Error, Pole, Result};
use std::f64::consts::PI;

/// Allowed deviation of |dφ/ds| from 1 at the poles.
pub const POLE_CLOSURE_TOL: f64 = 1e-3;

/// Interior φ below this fraction of the total arclength is treated as an
/// incipient neckpinch.
pub const MIN_WARP_FRACTION: f64 = 1e-6;

const MIN_POINTS: usize = 5;

/// Rotationally symmetric metric `ψ(x)² dx² + φ(x)² g_{S^{n−1}}` on Sⁿ,
/// sampled at `x_i = i / (N − 1)`.
///
/// Arclength is `ds = ψ dx`. φ vanishes at both poles and is odd across
/// them; ψ is even.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetric {
    n: usize,
    psi: Vec<f64>,
    phi: Vec<f64>,
}

impl WarpedMetric {
    /// Builds and validates a metric. The pole values of `phi` are set to
    /// zero.
    pub fn new(n: usize, psi: Vec<f64>, mut phi: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidModel(format!("dimension must be >= 3, got {n}")));
        }
        if psi.len() != phi.len() {
            return Err(Error::GridMismatch {
                expected: psi.len(),
                got: phi.len(),
            });
        }
        if psi.len() < MIN_POINTS {
            return Err(Error::InvalidMetric(format!(
                "need at least {MIN_POINTS} grid points, got {}",
                psi.len()
            )));
        }
        let last = phi.len() - 1;
        phi[0] = 0.0;
        phi[last] = 0.0;
        let m = Self { n, psi, phi };
        m.validate()?;
        Ok(m)
    }

    /// Round sphere of the given radius.
    pub fn round(n: usize, points: usize, radius: f64) -> Result<Self> {
        Self::from_profile(n, points, |x| {
            (radius * PI, radius * (PI * x).sin())
        })
    }

    /// The `bumpy-k-eps` profile: φ ∝ sin(πx) + ε sin(kπx) on the coordinate
    /// grid, with ψ = A + B cos(πx) fixed by the closure conditions at both
    /// poles, rescaled to total arclength π.
    pub fn bumpy(n: usize, points: usize, k: u32, eps: f64) -> Result<Self> {
        if k == 0 || eps.abs() * k as f64 >= 1.0 {
            return Err(Error::InvalidMetric(format!(
                "bumpy profile needs k >= 1 and |eps|·k < 1 (k = {k}, eps = {eps})"
            )));
        }
        let kf = k as f64;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        // φ_x(0) = π(1 + εk),  φ_x(1) = π(−1 + εk(−1)^k)
        let left = PI * (1.0 + eps * kf);
        let right = PI * (-1.0 + eps * kf * sign);
        let a = 0.5 * (left - right);
        let b = 0.5 * (left + right);
        // ∫ψ dx = a, so scaling by π / a normalizes the length.
        let scale = PI / a;
        Self::from_profile(n, points, |x| {
            let psi = a + b * (PI * x).cos();
            let phi = (PI * x).sin() + eps * (kf * PI * x).sin();
            (scale * psi, scale * phi)
        })
    }

    /// Samples `(ψ, φ)` from a closure over the coordinate grid.
    pub fn from_profile(n: usize, points: usize, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        if points < MIN_POINTS {
            return Err(Error::InvalidMetric(format!(
                "need at least {MIN_POINTS} grid points, got {points}"
            )));
        }
        let h = 1.0 / (points - 1) as f64;
        let (psi, phi) = (0..points).map(|i| f(i as f64 * h)).unzip();
        Self::new(n, psi, phi)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Coordinate grid spacing.
    pub fn h(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    pub fn x(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    /// Cumulative arclength at the nodes (trapezoid in x).
    pub fn arclength(&self) -> Vec<f64> {
        let h = self.h();
        let mut s = Vec::with_capacity(self.len());
        s.push(0.0);
        for i in 1..self.len() {
            let prev = s[i - 1];
            s.push(prev + 0.5 * h * (self.psi[i - 1] + self.psi[i]));
        }
        s
    }

    pub fn total_length(&self) -> f64 {
        *self.arclength().last().unwrap()
    }

    /// Smallest arclength spacing between neighbouring nodes.
    pub fn min_spacing(&self) -> f64 {
        let h = self.h();
        self.psi
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * h)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest interior value of φ.
    pub fn phi_min(&self) -> f64 {
        let last = self.len() - 1;
        self.phi[1..last].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// dφ/ds at the (left, right) poles.
    pub fn pole_slopes(&self) -> (f64, f64) {
        let w = self.slope();
        (w[0], w[self.len() - 1])
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.psi.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidMetric(format!("psi must be positive, found {v}")));
        }
        let last = self.len() - 1;
        if self.phi[0] != 0.0 || self.phi[last] != 0.0 {
            return Err(Error::InvalidMetric("phi must vanish at the poles".into()));
        }
        for (i, v) in self.phi.iter().enumerate().take(last).skip(1) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::NonPositiveWarp { index: i, value: *v });
            }
        }
        let length = self.total_length();
        if self.phi_min() < MIN_WARP_FRACTION * length {
            return Err(Error::NeckpinchDetected {
                phi_min: self.phi_min(),
            });
        }
        let (left, right) = self.pole_slopes();
        if (left - 1.0).abs() > POLE_CLOSURE_TOL {
            return Err(Error::PoleClosureViolated {
                pole: Pole::Left,
                slope: left,
            });
        }
        if (right + 1.0).abs() > POLE_CLOSURE_TOL {
            return Err(Error::PoleClosureViolated {
                pole: Pole::Right,
                slope: right.abs(),
            });
        }
        Ok(())
    }

    /// dφ/ds at the nodes.
    fn slope(&self) -> Vec<f64> {
        d1(&self.phi, self.h(), Parity::Odd)
            .iter()
            .zip(&self.psi)
            .map(|(dx, p)| dx / p)
            .collect()
    }

    /// Resets ψ at both poles so that dφ/ds = ±1 exactly there.
    pub fn enforce_pole_closure(&mut self) {
        let dphi = d1(&self.phi, self.h(), Parity::Odd);
        let last = self.len() - 1;
        self.psi[0] = dphi[0];
        self.psi[last] = -dphi[last];
    }

    fn half_phi(&self, i: usize) -> f64 {
        0.5 * (self.phi[i] + self.phi[i + 1])
    }

    fn half_psi(&self, i: usize) -> f64 {
        0.5 * (self.psi[i] + self.psi[i + 1])
    }

    /// Edge conductances ω φ^{n−1} / (ψ h) at the half points i + 1/2.
    pub(crate) fn conductances(&self) -> Vec<f64> {
        let omega = unit_sphere_area(self.n - 1);
        let h = self.h();
        (0..self.len() - 1)
            .map(|i| omega * self.half_phi(i).powi(self.n as i32 - 1) / (self.half_psi(i) * h))
            .collect()
    }

    /// Dual-cell volumes: ∫ ω φ^{n−1} ψ dx over [x_{i−1/2}, x_{i+1/2}], with φ
    /// linear and ψ averaged on each half cell.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let omega = unit_sphere_area(self.n - 1);
        let h = self.h();
        let last = self.len() - 1;
        let power_mean = |a: f64, b: f64| -> f64 {
            // mean of φ^{n−1} for φ linear from a to b
            let m = self.n;
            (0..m).map(|k| a.powi(k as i32) * b.powi((m - 1 - k) as i32)).sum::<f64>() / m as f64
        };
        (0..self.len())
            .map(|i| {
                let mut w = 0.0;
                if i < last {
                    let psi_bar = 0.25 * (3.0 * self.psi[i] + self.psi[i + 1]);
                    w += psi_bar * power_mean(self.phi[i], self.half_phi(i));
                }
                if i > 0 {
                    let psi_bar = 0.25 * (3.0 * self.psi[i] + self.psi[i - 1]);
                    w += psi_bar * power_mean(self.phi[i], self.half_phi(i - 1));
                }
                omega * 0.5 * h * w
            })
            .collect()
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(self.quadrature_weights().iter().sum())
    }

    pub(crate) fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Δu in conservative form. Pole values reduce to n·u_ss.
    pub fn laplacian_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let kappa = self.conductances();
        let weights = self.quadrature_weights();
        Ok(laplacian_with(&kappa, &weights, u))
    }

    /// (du/ds)² at the nodes; u is treated as even across the poles.
    pub fn gradient_sq(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok(self
            .radial_derivative(u)
            .into_iter()
            .map(|d| d * d)
            .collect())
    }

    /// du/ds at the nodes for a symmetric (even) u.
    pub fn radial_derivative(&self, u: &[f64]) -> Vec<f64> {
        d1(u, self.h(), Parity::Even)
            .iter()
            .zip(&self.psi)
            .map(|(d, p)| d / p)
            .collect()
    }

    /// Second arclength derivative u_ss at the nodes for a symmetric u.
    pub fn radial_second_derivative(&self, u: &[f64]) -> Vec<f64> {
        let us = self.radial_derivative(u);
        d1(&us, self.h(), Parity::Odd)
            .iter()
            .zip(&self.psi)
            .map(|(d, p)| d / p)
            .collect()
    }

    /// Σ κ_{i+1/2} (u_{i+1} − u_i)², which equals −∫ u Δu dV exactly.
    pub fn dirichlet_energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(self
            .conductances()
            .iter()
            .zip(u.windows(2))
            .map(|(k, w)| k * (w[1] - w[0]).powi(2))
            .sum())
    }

    pub fn curvature(&self) -> Result<CurvatureData> {
        self.validate()?;
        let n = self.n as f64;
        let h = self.h();
        let len = self.len();
        let last = len - 1;

        let phi_x = d1(&self.phi, h, Parity::Odd);
        let w: Vec<f64> = phi_x.iter().zip(&self.psi).map(|(d, p)| d / p).collect();
        let w_x = d1(&w, h, Parity::Even);

        // k = φ_ss / φ,  q = (1 − φ_s²) / φ²; pole values are the l'Hôpital
        // limits of the parity-extended quotients.
        //
        // In q the constant 1 is replaced by a smooth blend of the discrete
        // pole slopes squared. Closure makes both equal to 1 in the
        // continuum, and using the discrete values cancels the (even,
        // non-vanishing) truncation error of φ_s at the poles, which would
        // otherwise be amplified by 1/φ² into an O(1) error of ΔR there.
        let (left_sq, right_sq) = (w[0] * w[0], w[last] * w[last]);
        let mut k = vec![0.0; len];
        let mut q = vec![0.0; len];
        for i in 0..len {
            if i == 0 || i == last {
                let w_xx = d2_at(&w, h, Parity::Even, i);
                k[i] = w_xx / (self.psi[i] * phi_x[i]);
                q[i] = -w[i] * w_xx / (phi_x[i] * phi_x[i]);
            } else {
                k[i] = w_x[i] / (self.psi[i] * self.phi[i]);
                let chi = 0.5 * (1.0 + (PI * i as f64 * h).cos());
                let one = chi * left_sq + (1.0 - chi) * right_sq;
                q[i] = (one - w[i] * w[i]) / (self.phi[i] * self.phi[i]);
            }
        }

        let radial: Vec<f64> = k.iter().map(|k| -(n - 1.0) * k).collect();
        let spherical: Vec<f64> = k.iter().zip(&q).map(|(k, q)| -k + (n - 2.0) * q).collect();
        let scalar: Vec<f64> = radial
            .iter()
            .zip(&spherical)
            .map(|(r, s)| r + (n - 1.0) * s)
            .collect();
        let ricci_sq = radial
            .iter()
            .zip(&spherical)
            .map(|(r, s)| r * r + (n - 1.0) * s * s)
            .collect();
        let traceless_sq = radial
            .iter()
            .zip(&spherical)
            .map(|(r, s)| (n - 1.0) / n * (r - s) * (r - s))
            .collect();

        let kappa = self.conductances();
        let weights = self.quadrature_weights();
        let laplacian_scalar = laplacian_with(&kappa, &weights, &scalar);

        let omega = unit_sphere_area(self.n - 1);
        let volume_weight = self
            .psi
            .iter()
            .zip(&self.phi)
            .map(|(p, f)| omega * p * f.powi(self.n as i32 - 1))
            .collect();

        Ok(CurvatureData {
            n: self.n,
            scalar,
            ricci: RicciComponents::Warped { radial, spherical },
            ricci_sq,
            traceless_sq,
            laplacian_scalar,
            volume_weight,
        })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidMetric(format!("scale factor must be positive, got {c}")));
        }
        let r = c.sqrt();
        Self::new(
            self.n,
            self.psi.iter().map(|v| r * v).collect(),
            self.phi.iter().map(|v| r * v).collect(),
        )
    }

    /// The conformal metric `v^{4/(n−2)} g` for a positive symmetric `v`.
    pub fn conformal(&self, v: &[f64]) -> Result<Self> {
        self.check_len(v)?;
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::NonPositiveTestFunction);
        }
        let e = 2.0 / (self.n as f64 - 2.0);
        let factor: Vec<f64> = v.iter().map(|x| x.powf(e)).collect();
        Self::new(
            self.n,
            self.psi.iter().zip(&factor).map(|(p, f)| p * f).collect(),
            self.phi.iter().zip(&factor).map(|(p, f)| p * f).collect(),
        )
    }

    /// Replaces ψ and φ without validation; used inside time steppers which
    /// validate the result themselves.
    pub(crate) fn from_parts_unchecked(n: usize, psi: Vec<f64>, phi: Vec<f64>) -> Self {
        Self { n, psi, phi }
    }

    /// The same metric sampled on `points` nodes by linear interpolation in x.
    pub fn resampled(&self, points: usize) -> Result<Self> {
        let h = self.h();
        let last = self.len() - 1;
        let sample = |f: &[f64], x: f64| {
            let t = x / h;
            let i = (t.floor() as usize).min(last - 1);
            let frac = t - i as f64;
            f[i] * (1.0 - frac) + f[i + 1] * frac
        };
        let mut m = Self::from_profile(self.n, points, |x| (sample(&self.psi, x), sample(&self.phi, x)))?;
        m.enforce_pole_closure();
        m.validate()?;
        Ok(m)
    }
}

pub(crate) fn laplacian_with(kappa: &[f64], weights: &[f64], u: &[f64]) -> Vec<f64> {
    let len = u.len();
    let mut out = vec![0.0; len];
    for (i, k) in kappa.iter().enumerate() {
        let flux = k * (u[i + 1] - u[i]);
        out[i] += flux;
        out[i + 1] -= flux;
    }
    for (o, w) in out.iter_mut().zip(weights) {
        *o /= w;
    }
    out
}

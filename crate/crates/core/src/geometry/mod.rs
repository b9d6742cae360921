//! Metric representations and curvature/measure kernels.
//!
//! Two backends are supported:
//!
//! * [`HomogeneousMetric`]: a left-invariant metric on SU(2) = S³ given by its
//!   three eigenvalues in a Milnor frame with `[e1, e2] = 2 e3` (cyclic).
//!   Everything is spatially constant, so a function on this backend is a
//!   single number and the "grid" has one point carrying the total volume.
//! * [`WarpedMetric`]: a rotationally symmetric metric
//!   `psi(x)^2 dx^2 + phi(x)^2 g_{S^{n-1}}` on Sⁿ, sampled on a fixed uniform
//!   grid `x in [0, 1]` with the poles at both ends.
//!
//! Sign convention: `laplacian_apply` returns the divergence of the gradient,
//! so `-Δ` has non-negative spectrum.

mod homogeneous;
pub mod stencil;
mod warped;

pub use homogeneous::{HomogeneousMetric, UNIT_SU2_VOLUME};
pub use warped::{WarpedMetric, MIN_WARP_FRACTION, POLE_CLOSURE_TOL};

use crate::error::{Error, Result};
use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Homogeneous3,
    WarpedSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    pub n: usize,
    pub backend: Backend,
}

impl ModelParams {
    pub fn new(n: usize, backend: Backend) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidModel(format!("dimension must be >= 3, got {n}")));
        }
        if backend == Backend::Homogeneous3 && n != 3 {
            return Err(Error::InvalidModel(format!(
                "homogeneous backend is three-dimensional, got n = {n}"
            )));
        }
        Ok(Self { n, backend })
    }

    /// (n + 2) / (n - 2)
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n)
    }

    /// 4 (n - 1) / (n - 2), the gradient coefficient of the Yamabe quotient.
    pub fn gradient_coefficient(&self) -> f64 {
        gradient_coefficient(self.n)
    }
}

pub fn critical_exponent(n: usize) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

pub fn gradient_coefficient(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Area of the unit sphere S^k: 2 π^{(k+1)/2} / Γ((k+1)/2).
pub fn unit_sphere_area(k: usize) -> f64 {
    let m = (k + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(m) / gamma(m)
}

/// Ricci eigen-components. Frame components are orthonormal-frame
/// eigenvalues; warped components are the radial eigenvalue (multiplicity 1)
/// and the spherical eigenvalue (multiplicity n - 1).
#[derive(Debug, Clone, PartialEq)]
pub enum RicciComponents {
    Frame([f64; 3]),
    Warped { radial: Vec<f64>, spherical: Vec<f64> },
}

/// Pointwise curvature quantities. On the homogeneous backend every vector
/// has length one.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub n: usize,
    pub scalar: Vec<f64>,
    pub ricci: RicciComponents,
    /// |Rc|²
    pub ricci_sq: Vec<f64>,
    /// |R⁰|² with R⁰ = Rc - (R/n) g
    pub traceless_sq: Vec<f64>,
    /// ΔR
    pub laplacian_scalar: Vec<f64>,
    /// Density of dV against the coordinate measure (includes the
    /// (n-1)-sphere area for warped metrics; the total volume for
    /// homogeneous ones).
    pub volume_weight: Vec<f64>,
}

impl CurvatureData {
    pub fn len(&self) -> usize {
        self.scalar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalar.is_empty()
    }

    /// R⁰(∂s, ∂s) for warped metrics (the only direction a symmetric gradient
    /// sees); zero on the homogeneous backend where gradients vanish.
    pub fn radial_traceless(&self) -> Vec<f64> {
        match &self.ricci {
            RicciComponents::Frame(_) => vec![0.0; self.len()],
            RicciComponents::Warped { radial, .. } => radial
                .iter()
                .zip(&self.scalar)
                .map(|(r, s)| r - s / self.n as f64)
                .collect(),
        }
    }

    /// Σ (eigen-component × multiplicity) − R, pointwise.
    pub fn trace_defect(&self) -> Vec<f64> {
        let n = self.n as f64;
        match &self.ricci {
            RicciComponents::Frame(r) => vec![r[0] + r[1] + r[2] - self.scalar[0]],
            RicciComponents::Warped { radial, spherical } => radial
                .iter()
                .zip(spherical)
                .zip(&self.scalar)
                .map(|((r, s), big_r)| r + (n - 1.0) * s - big_r)
                .collect(),
        }
    }

    pub fn min_scalar(&self) -> f64 {
        self.scalar.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_scalar(&self) -> f64 {
        self.scalar.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A metric on either backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Homogeneous(HomogeneousMetric),
    Warped(WarpedMetric),
}

impl From<HomogeneousMetric> for Metric {
    fn from(m: HomogeneousMetric) -> Self {
        Metric::Homogeneous(m)
    }
}

impl From<WarpedMetric> for Metric {
    fn from(m: WarpedMetric) -> Self {
        Metric::Warped(m)
    }
}

impl Metric {
    pub fn dim(&self) -> usize {
        match self {
            Metric::Homogeneous(_) => 3,
            Metric::Warped(m) => m.dim(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Metric::Homogeneous(_) => Backend::Homogeneous3,
            Metric::Warped(_) => Backend::WarpedSphere,
        }
    }

    /// Number of degrees of freedom of a function on this metric.
    pub fn len(&self) -> usize {
        match self {
            Metric::Homogeneous(_) => 1,
            Metric::Warped(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates (the single point 0 for homogeneous metrics).
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Metric::Homogeneous(_) => vec![0.0],
            Metric::Warped(m) => m.x(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Metric::Homogeneous(m) => m.validate(),
            Metric::Warped(m) => m.validate(),
        }
    }

    pub fn curvature(&self) -> Result<CurvatureData> {
        match self {
            Metric::Homogeneous(m) => m.curvature(),
            Metric::Warped(m) => m.curvature(),
        }
    }

    pub fn volume(&self) -> Result<f64> {
        match self {
            Metric::Homogeneous(m) => m.volume(),
            Metric::Warped(m) => m.volume(),
        }
    }

    /// Quadrature weights: `∫ f dV ≈ Σ w_i f_i`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        match self {
            Metric::Homogeneous(m) => vec![m.volume_unchecked()],
            Metric::Warped(m) => m.quadrature_weights(),
        }
    }

    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self
            .quadrature_weights()
            .iter()
            .zip(f)
            .map(|(w, v)| w * v)
            .sum())
    }

    pub fn laplacian_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Metric::Homogeneous(_) => {
                self.check_len(u)?;
                Ok(vec![0.0])
            }
            Metric::Warped(m) => m.laplacian_apply(u),
        }
    }

    pub fn gradient_sq(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Metric::Homogeneous(_) => {
                self.check_len(u)?;
                Ok(vec![0.0])
            }
            Metric::Warped(m) => m.gradient_sq(u),
        }
    }

    /// ∫ |∇u|² dV in the form that is exactly adjoint to `laplacian_apply`.
    pub fn dirichlet_energy(&self, u: &[f64]) -> Result<f64> {
        match self {
            Metric::Homogeneous(_) => {
                self.check_len(u)?;
                Ok(0.0)
            }
            Metric::Warped(m) => m.dirichlet_energy(u),
        }
    }

    /// The metric `c·g`.
    pub fn scaled(&self, c: f64) -> Result<Metric> {
        Ok(match self {
            Metric::Homogeneous(m) => Metric::Homogeneous(m.scaled(c)?),
            Metric::Warped(m) => Metric::Warped(m.scaled(c)?),
        })
    }

    pub fn as_warped(&self) -> Result<&WarpedMetric> {
        match self {
            Metric::Warped(m) => Ok(m),
            Metric::Homogeneous(_) => Err(Error::WrongBackend("warped")),
        }
    }

    pub fn as_homogeneous(&self) -> Result<&HomogeneousMetric> {
        match self {
            Metric::Homogeneous(m) => Ok(m),
            Metric::Warped(_) => Err(Error::WrongBackend("homogeneous")),
        }
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
}

/// Shorthand for `metric.curvature()`.
pub fn compute_curvature(metric: &Metric) -> Result<CurvatureData> {
    metric.curvature()
}

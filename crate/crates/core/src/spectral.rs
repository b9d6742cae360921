//! Rotationally symmetric spectrum of −Δ on warped metrics and the
//! non-degeneracy test "R/(n−1) is not a positive eigenvalue".
//!
//! Only symmetric eigenfunctions are computed. Non-symmetric eigenvalues are
//! invisible here, so an unmatched result is partial evidence only.

use crate::error::{Error, Result};
use crate::geometry::{CurvatureData, WarpedMetric};
use nalgebra::{DMatrix, SymmetricEigen};

/// Default relative tolerance for matching R/(n−1) to an eigenvalue.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Largest accepted relative error estimate of the highest eigenvalue.
pub const MAX_EIGEN_ERROR: f64 = 0.1;
/// Largest relative spread (max − min)/|mean| of R treated as constant.
pub const CONSTANT_R_TOL: f64 = 1e-2;

/// Eigenpairs of `−(φ^{n−1}u')' = λ φ^{n−1}u` with no-flux poles.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Ascending; the first is zero up to round-off.
    pub eigenvalues: Vec<f64>,
    /// Normalized to ∫u² dV = 1 in the discrete weighted inner product.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Relative Richardson error estimate of each eigenvalue.
    pub error_estimates: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoisoCheck {
    /// R/(n−1)
    pub target: f64,
    /// min over positive eigenvalues of |λ − target| / λ
    pub gap: f64,
    /// The target coincides with a positive eigenvalue within delta, so
    /// the non-degeneracy hypothesis fails.
    pub matched: bool,
}

impl KoisoCheck {
    pub fn hypothesis_holds(&self) -> bool {
        !self.matched
    }
}

/// All eigenpairs of the discrete operator `W⁻¹K`, ascending.
fn eigenpairs(metric: &WarpedMetric) -> (Vec<f64>, Vec<Vec<f64>>) {
    let kappa = metric.conductances();
    let weights = metric.quadrature_weights();
    let len = metric.len();
    let scale: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(len, len);
    for (i, k) in kappa.iter().enumerate() {
        s[(i, i)] += k * scale[i] * scale[i];
        s[(i + 1, i + 1)] += k * scale[i + 1] * scale[i + 1];
        let off = -k * scale[i] * scale[i + 1];
        s[(i, i + 1)] = off;
        s[(i + 1, i)] = off;
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let col = eig.eigenvectors.column(j);
            // Fix the sign so that the value at the left pole is non-negative.
            let sign = if col[0] < 0.0 { -1.0 } else { 1.0 };
            (0..len).map(|i| sign * col[i] * scale[i]).collect()
        })
        .collect();
    (values, vectors)
}

/// First `k` symmetric eigenvalues of −Δ. The error of each is estimated
/// from a half-resolution grid assuming second-order convergence.
pub fn symmetric_spectrum(metric: &WarpedMetric, k: usize) -> Result<SpectralReport> {
    metric.validate()?;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 eigenvalues, got {k}")));
    }
    let coarse_points = metric.len().div_ceil(2);
    if k > coarse_points {
        return Err(Error::GridTooCoarse {
            index: k - 1,
            estimate: f64::INFINITY,
        });
    }
    let (values, vectors) = eigenpairs(metric);
    let (coarse, _) = eigenpairs(&metric.resampled(coarse_points)?);
    let ratio = ((metric.len() - 1) as f64 / (coarse_points - 1) as f64).powi(2);
    let error_estimates: Vec<f64> = (0..k)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                (values[j] - coarse[j]).abs() / (ratio - 1.0) / values[j].abs()
            }
        })
        .collect();
    if let Some((index, &estimate)) = error_estimates
        .iter()
        .enumerate()
        .find(|(_, e)| **e > MAX_EIGEN_ERROR)
    {
        return Err(Error::GridTooCoarse { index, estimate });
    }
    Ok(SpectralReport {
        eigenvalues: values[..k].to_vec(),
        eigenfunctions: vectors[..k].to_vec(),
        error_estimates,
    })
}

/// Compares R/(n−1) with the positive eigenvalues in `report`.
pub fn koiso_check(curvature: &CurvatureData, report: &SpectralReport, delta: f64) -> Result<KoisoCheck> {
    let (lo, hi) = (curvature.min_scalar(), curvature.max_scalar());
    let mean = curvature.scalar.iter().sum::<f64>() / curvature.len() as f64;
    if !(mean.abs() > 0.0) || (hi - lo) / mean.abs() > CONSTANT_R_TOL {
        return Err(Error::Inapplicable(format!(
            "scalar curvature is not constant (range [{lo}, {hi}])"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    let target = mean / (curvature.n as f64 - 1.0);
    let gap = report
        .eigenvalues
        .iter()
        .skip(1)
        .filter(|l| **l > 0.0)
        .map(|l| (l - target).abs() / l)
        .fold(f64::INFINITY, f64::min);
    Ok(KoisoCheck {
        target,
        gap,
        matched: gap <= delta,
    })
}

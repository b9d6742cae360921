use super::{CurvatureData, RicciComponents};
use crate::error::{Error, Result};

/// Volume of SU(2) with the bi-invariant metric a = b = c = 1, which is the
/// unit round 3-sphere under the bracket convention `[e1, e2] = 2 e3`.
pub const UNIT_SU2_VOLUME: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Left-invariant metric `a θ1² + b θ2² + c θ3²` on SU(2), with θi the dual
/// coframe of a Milnor frame satisfying `[e1, e2] = 2 e3` cyclically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousMetric {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HomogeneousMetric {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let m = Self { a, b, c };
        m.validate()?;
        Ok(m)
    }

    /// Round sphere of radius `r` (a = b = c = r²).
    pub fn round(radius: f64) -> Result<Self> {
        let k = radius * radius;
        Self::new(k, k, k)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.a, self.b, self.c]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            Ok(())
        } else {
            Err(Error::InvalidMetric(format!(
                "frame eigenvalues must be positive, got ({}, {}, {})",
                self.a, self.b, self.c
            )))
        }
    }

    pub fn params(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    /// Orthonormal-frame Ricci eigenvalues.
    ///
    /// With orthonormal structure constants λi = 2 x_i / √(abc), Milnor's
    /// formula Ric(f_i) = 2 μ_j μ_k, μ_i = (λ1 + λ2 + λ3)/2 − λi gives
    /// `ric_i = 2 (x_i + x_k − x_j)(x_i + x_j − x_k) / (abc)`.
    pub fn ricci_eigenvalues(&self) -> [f64; 3] {
        let x = self.params();
        let abc = self.a * self.b * self.c;
        let ric = |i: usize, j: usize, k: usize| 2.0 * (x[i] + x[k] - x[j]) * (x[i] + x[j] - x[k]) / abc;
        [ric(0, 1, 2), ric(1, 2, 0), ric(2, 0, 1)]
    }

    pub fn volume(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.volume_unchecked())
    }

    pub(crate) fn volume_unchecked(&self) -> f64 {
        UNIT_SU2_VOLUME * (self.a * self.b * self.c).sqrt()
    }

    pub fn curvature(&self) -> Result<CurvatureData> {
        self.validate()?;
        let ric = self.ricci_eigenvalues();
        let scalar = ric[0] + ric[1] + ric[2];
        let ricci_sq = ric.iter().map(|r| r * r).sum::<f64>();
        // Σ_{i<j} (r_i − r_j)² / n  ==  |Rc|² − R²/n, and is exactly zero
        // when the components coincide.
        let traceless_sq = ((ric[0] - ric[1]).powi(2)
            + (ric[1] - ric[2]).powi(2)
            + (ric[2] - ric[0]).powi(2))
            / 3.0;
        Ok(CurvatureData {
            n: 3,
            scalar: vec![scalar],
            ricci: RicciComponents::Frame(ric),
            ricci_sq: vec![ricci_sq],
            traceless_sq: vec![traceless_sq],
            laplacian_scalar: vec![0.0],
            volume_weight: vec![self.volume_unchecked()],
        })
    }

    /// Right-hand side of the Ricci flow ODE: `x_i' = −2 x_i ric_i`.
    pub fn ricci_flow_rhs(&self) -> [f64; 3] {
        let ric = self.ricci_eigenvalues();
        [
            -2.0 * self.a * ric[0],
            -2.0 * self.b * ric[1],
            -2.0 * self.c * ric[2],
        ]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.a, c * self.b, c * self.c)
    }
}

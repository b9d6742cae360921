//! Independent reference computations used only by the test suite.
//!
//! Nothing here calls into production curvature or solver internals; the
//! oracles take metric parameters (or final outputs) and recompute from
//! scratch.
#![allow(dead_code)]

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yamabe_lab::geometry::{CurvatureData, Metric, RicciComponents, WarpedMetric};
use yamabe_lab::yamabe::{quotient, ExponentParam};

/// Curvature of a left-invariant SU(2) metric recomputed in a coordinate
/// chart.
#[derive(Debug, Clone)]
pub struct BruteCurvature {
    pub scalar: f64,
    /// Ricci eigenvalues (orthonormal), ascending.
    pub ricci: [f64; 3],
    pub ricci_sq: f64,
    pub traceless_sq: f64,
}

type Quat = [f64; 4];

fn qmul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn conj(a: Quat) -> Quat {
    [a[0], -a[1], -a[2], -a[3]]
}

/// Metric components in the gnomonic chart q(θ) = (1, θ)/√(1 + |θ|²), using
/// the left-invariant coframe q⁻¹dq = σ¹ i + σ² j + σ³ k.
fn chart_metric(abc: [f64; 3], th: [f64; 3]) -> Matrix3<f64> {
    let r2 = 1.0 + th[0] * th[0] + th[1] * th[1] + th[2] * th[2];
    let r = r2.sqrt();
    let q = [1.0 / r, th[0] / r, th[1] / r, th[2] / r];
    let qi = conj(q);
    let mut sigma = [[0.0; 3]; 3]; // sigma[k][mu]
    for mu in 0..3 {
        let mut dq = [-th[mu] / (r2 * r), 0.0, 0.0, 0.0];
        for (i, d) in dq.iter_mut().enumerate().skip(1) {
            *d = -th[i - 1] * th[mu] / (r2 * r);
        }
        dq[mu + 1] += 1.0 / r;
        let form = qmul(qi, dq);
        for k in 0..3 {
            sigma[k][mu] = form[k + 1];
        }
    }
    Matrix3::from_fn(|mu, nu| (0..3).map(|k| abc[k] * sigma[k][mu] * sigma[k][nu]).sum())
}

fn shifted(th: [f64; 3], axis: usize, d: f64) -> [f64; 3] {
    let mut t = th;
    t[axis] += d;
    t
}

/// Fourth-order central difference of a matrix-valued function along `axis`.
fn fd<F: Fn([f64; 3]) -> T, T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>>(
    f: &F,
    th: [f64; 3],
    axis: usize,
    eps: f64,
) -> T {
    let p1 = f(shifted(th, axis, eps));
    let m1 = f(shifted(th, axis, -eps));
    let p2 = f(shifted(th, axis, 2.0 * eps));
    let m2 = f(shifted(th, axis, -2.0 * eps));
    ((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * eps))
}

/// Christoffel symbols Γ^λ_{μν}, flattened as `[λ][μ][ν]`.
#[derive(Clone, Copy)]
struct Christoffel([[[f64; 3]; 3]; 3]);

impl std::ops::Sub for Christoffel {
    type Output = Christoffel;
    fn sub(mut self, o: Christoffel) -> Christoffel {
        for l in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    self.0[l][m][n] -= o.0[l][m][n];
                }
            }
        }
        self
    }
}

impl std::ops::Add for Christoffel {
    type Output = Christoffel;
    fn add(mut self, o: Christoffel) -> Christoffel {
        for l in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    self.0[l][m][n] += o.0[l][m][n];
                }
            }
        }
        self
    }
}

impl std::ops::Mul<f64> for Christoffel {
    type Output = Christoffel;
    fn mul(mut self, s: f64) -> Christoffel {
        for l in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    self.0[l][m][n] *= s;
                }
            }
        }
        self
    }
}

fn christoffel(abc: [f64; 3], th: [f64; 3]) -> Christoffel {
    let eps = 1e-3;
    let g = chart_metric(abc, th);
    let ginv = g.try_inverse().expect("chart metric is invertible");
    let metric = |t: [f64; 3]| chart_metric(abc, t);
    let dg: Vec<Matrix3<f64>> = (0..3).map(|a| fd(&metric, th, a, eps)).collect();
    let mut out = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for m in 0..3 {
            for n in 0..3 {
                out[l][m][n] = 0.5
                    * (0..3)
                        .map(|s| ginv[(l, s)] * (dg[m][(s, n)] + dg[n][(s, m)] - dg[s][(m, n)]))
                        .sum::<f64>();
            }
        }
    }
    Christoffel(out)
}

/// Curvature of `a θ1² + b θ2² + c θ3²` evaluated at the chart point `th`.
pub fn brute_curvature_su2_at(a: f64, b: f64, c: f64, th: [f64; 3]) -> BruteCurvature {
    assert!(a > 0.0 && b > 0.0 && c > 0.0);
    let abc = [a, b, c];
    let eps = 1e-3;
    let gam = christoffel(abc, th);
    let chr = |t: [f64; 3]| christoffel(abc, t);
    let dgam: Vec<Christoffel> = (0..3).map(|ax| fd(&chr, th, ax, eps)).collect();
    let g = chart_metric(abc, th);
    let ric = Matrix3::from_fn(|m, n| {
        let mut v = 0.0;
        for l in 0..3 {
            v += dgam[l].0[l][m][n] - dgam[n].0[l][m][l];
            for s in 0..3 {
                v += gam.0[l][l][s] * gam.0[s][m][n] - gam.0[l][n][s] * gam.0[s][m][l];
            }
        }
        v
    });
    let ric = 0.5 * (ric + ric.transpose());
    let chol = g.cholesky().expect("metric is positive definite");
    let linv = chol.l().try_inverse().unwrap();
    let sym = linv * ric * linv.transpose();
    let sym = 0.5 * (sym + sym.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let scalar: f64 = ev.iter().sum();
    let ricci_sq: f64 = ev.iter().map(|e| e * e).sum();
    BruteCurvature {
        scalar,
        ricci: [ev[0], ev[1], ev[2]],
        ricci_sq,
        traceless_sq: ricci_sq - scalar * scalar / 3.0,
    }
}

pub fn brute_curvature_su2(a: f64, b: f64, c: f64) -> BruteCurvature {
    brute_curvature_su2_at(a, b, c, [0.2, -0.1, 0.3])
}

/// Both closed forms of dỸ_p/dt for a homogeneous metric with constant u:
/// `V^q (2|R⁰|² + (2/n − q) R²)` and `V^q (R' − q R²)` with `R' = 2|Rc|²`,
/// `q = (p−1)/(p+1)`. Curvature is taken from the coordinate oracle.
pub fn homogeneous_identity_closed_form(a: f64, b: f64, c: f64, p: f64) -> (f64, f64) {
    let brute = brute_curvature_su2(a, b, c);
    let volume = 2.0 * std::f64::consts::PI.powi(2) * (a * b * c).sqrt();
    let q = (p - 1.0) / (p + 1.0);
    let vq = volume.powf(q);
    let r = brute.scalar;
    let via_traceless = vq * (2.0 * brute.traceless_sq + (2.0 / 3.0 - q) * r * r);
    let via_evolution = vq * (2.0 * brute.ricci_sq - q * r * r);
    (via_traceless, via_evolution)
}

/// A random positive symmetric function 1 + Σ c_k cos(kπx), k ≤ 4.
pub fn random_symmetric_function(metric: &WarpedMetric, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = (1..=4)
        .map(|k| rng.gen_range(-amplitude..amplitude) / k as f64)
        .collect();
    metric
        .x()
        .iter()
        .map(|x| {
            1.0 + coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).cos())
                .sum::<f64>()
        })
        .collect()
}

/// True iff no random low-frequency positive trial function has a quotient
/// below `y_tilde − tol`.
pub fn random_trial_domination(metric: &WarpedMetric, p: ExponentParam, y_tilde: f64, trials: usize, seed: u64, tol: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Metric::Warped(metric.clone());
    (0..trials).all(|_| {
        let u = random_symmetric_function(metric, &mut rng, 0.4);
        quotient(&m, &u, p).unwrap() >= y_tilde - tol
    })
}

/// Observed convergence order from errors at h and h/2.
pub fn observed_order(coarse_err: f64, fine_err: f64) -> f64 {
    (coarse_err / fine_err).log2()
}

/// The critical right-hand side in its reduced form
/// `(8(n−1)/(n−2))∫R⁰(∇u,∇u) + 2∫|R⁰|²u² − ((n−2)/n)∫u²ΔR`, summed in one
/// pass from the Ricci components, |∇u|² and the quadrature weights.
/// |R⁰|² is rebuilt from the eigen-components rather than taken from `curv`.
pub fn critical_rhs(metric: &WarpedMetric, curv: &CurvatureData, u: &[f64]) -> f64 {
    let RicciComponents::Warped { radial, spherical } = &curv.ricci else {
        panic!("warped curvature expected")
    };
    let n = metric.dim() as f64;
    let weights = metric.quadrature_weights();
    let grad = metric.gradient_sq(u).unwrap();
    (0..u.len())
        .map(|i| {
            let mean = curv.scalar[i] / n;
            let t_rad = radial[i] - mean;
            let t_sph = spherical[i] - mean;
            let t_sq = t_rad * t_rad + (n - 1.0) * t_sph * t_sph;
            weights[i]
                * (8.0 * (n - 1.0) / (n - 2.0) * t_rad * grad[i] + 2.0 * t_sq * u[i] * u[i]
                    - (n - 2.0) / n * u[i] * u[i] * curv.laplacian_scalar[i])
        })
        .sum()
}

/// Scales `u` so that `Σ w u^{p+1} = 1`.
pub fn normalize(metric: &WarpedMetric, u: &mut [f64], p: f64) {
    let total: f64 = metric
        .quadrature_weights()
        .iter()
        .zip(u.iter())
        .map(|(w, v)| w * v.powf(p + 1.0))
        .sum();
    let s = total.powf(-1.0 / (p + 1.0));
    u.iter_mut().for_each(|v| *v *= s);
}

//! Experiment configuration: TOML with one level of sections. Unknown keys
//! are rejected.

use super::Failure;
use crate::flow::{self, CFL_LIMIT};
use crate::geometry::{HomogeneousMetric, Metric, WarpedMetric};
use crate::io;
use crate::yamabe::{default_schedule, ExponentParam, SolverOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Largest step on the homogeneous backend when `flow.dt` is not given.
pub const HOMOGENEOUS_MAX_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Homogeneous,
    Warped,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Recorded in the manifest.
    pub seed: u64,
    pub metric: MetricConfig,
    pub yamabe: YamabeConfig,
    pub flow: FlowConfig,
    pub verify: VerifyConfig,
    pub spectrum: SpectrumConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub backend: BackendKind,
    pub dimension: usize,
    /// Frame coefficients on the homogeneous backend.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `round`, `bumpy-<k>-<eps>` or `csv:<path>` on the warped backend.
    pub profile: String,
    pub radius: f64,
    /// Number of grid intervals; the grid has `intervals + 1` points.
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct YamabeConfig {
    /// Exponent; the critical one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Continue from `p0` to the critical exponent instead of solving once.
    pub continuation: bool,
    /// Explicit continuation schedule; overrides `p0` and `stages`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    pub p0: f64,
    pub stages: usize,
    pub residual_tol: f64,
    pub normalization_tol: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub t_end: f64,
    /// Step size; chosen from the stability bound (warped) when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub save_every: Option<usize>,
    /// Number of saved intervals when `save_every` is absent.
    pub samples: usize,
    /// Grid points skipped near each pole in the pointwise identity checks.
    pub pole_margin: usize,
    /// Also write every saved warped metric.
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Largest accepted relative error of the derivative identity.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub count: usize,
    pub delta: f64,
    /// Analyze the constant-curvature metric in the conformal class
    /// instead of the metric itself.
    pub yamabe_metric: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Independent runs of `yamabe` or `verify`, one per exponent.
#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub p: Vec<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Warped,
            dimension: 3,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            profile: "round".into(),
            radius: 1.0,
            intervals: 400,
        }
    }
}

impl Default for YamabeConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            p: None,
            continuation: false,
            schedule: None,
            p0: 2.0,
            stages: 6,
            residual_tol: d.residual_tol,
            normalization_tol: d.normalization_tol,
            max_iterations: d.max_iterations,
        }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 0.01,
            dt: None,
            save_every: None,
            samples: 40,
            pole_margin: 5,
            snapshots: false,
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { tolerance: 0.02 }
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            count: 6,
            delta: crate::spectral::DEFAULT_DELTA,
            yamabe_metric: false,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("yamabe-out"),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{key}: {msg}"))
}

fn positive(key: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), Failure> {
    if v >= min {
        Ok(())
    } else {
        Err(bad(key, format!("must be at least {min}, got {v}")))
    }
}

impl Config {
    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Config = toml::from_str(text).map_err(|e| Failure::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let y = &self.yamabe;
        positive("yamabe.residual_tol", y.residual_tol)?;
        positive("yamabe.normalization_tol", y.normalization_tol)?;
        at_least("yamabe.max_iterations", y.max_iterations, 1)?;
        at_least("yamabe.stages", y.stages, 1)?;
        positive("verify.tolerance", self.verify.tolerance)?;
        positive("spectrum.delta", self.spectrum.delta)?;
        at_least("spectrum.count", self.spectrum.count, 2)?;
        positive("flow.t_end", self.flow.t_end)?;
        at_least("flow.samples", self.flow.samples, 1)?;
        if let Some(s) = self.flow.save_every {
            at_least("flow.save_every", s, 1)?;
        }
        if let Some(dt) = self.flow.dt {
            positive("flow.dt", dt)?;
        }
        let metric = self.metric()?;
        self.exponent(y.p)?;
        for p in &self.sweep.p {
            self.exponent(Some(*p)).map_err(|_| bad("sweep.p", format!("{p} is outside (1, critical]")))?;
        }
        if y.continuation {
            self.schedule()?;
        }
        if let (Metric::Warped(w), Some(dt)) = (&metric, self.flow.dt) {
            let limit = CFL_LIMIT * w.min_spacing().powi(2);
            if dt > limit {
                return Err(bad(
                    "flow.dt",
                    format!("{dt:e} exceeds the stability bound {limit:e} of this grid"),
                ));
            }
        }
        self.flow_plan(&metric)?;
        Ok(())
    }

    /// Builds the initial metric.
    pub fn metric(&self) -> Result<Metric, Failure> {
        let m = &self.metric;
        match m.backend {
            BackendKind::Homogeneous => {
                if m.dimension != 3 {
                    return Err(bad(
                        "metric.dimension",
                        format!("the homogeneous backend is three-dimensional, got {}", m.dimension),
                    ));
                }
                HomogeneousMetric::new(m.a, m.b, m.c)
                    .map(Metric::from)
                    .map_err(|e| bad("metric.a/b/c", e))
            }
            BackendKind::Warped => {
                if m.dimension < 3 {
                    return Err(bad("metric.dimension", format!("must be at least 3, got {}", m.dimension)));
                }
                at_least("metric.intervals", m.intervals, 4)?;
                positive("metric.radius", m.radius)?;
                let points = m.intervals + 1;
                let built = if m.profile == "round" {
                    WarpedMetric::round(m.dimension, points, m.radius)
                } else if let Some(path) = m.profile.strip_prefix("csv:") {
                    io::read_profile_csv(Path::new(path), m.dimension)
                } else if let Some((k, eps)) = parse_bumpy(&m.profile) {
                    WarpedMetric::bumpy(m.dimension, points, k, eps).and_then(|w| w.scaled(m.radius * m.radius))
                } else {
                    return Err(bad(
                        "metric.profile",
                        format!("unknown profile {:?} (expected round, bumpy-<k>-<eps> or csv:<path>)", m.profile),
                    ));
                };
                built.map(Metric::from).map_err(|e| bad("metric.profile", e))
            }
        }
    }

    /// `p` or the critical exponent.
    pub fn exponent(&self, p: Option<f64>) -> Result<ExponentParam, Failure> {
        let n = self.metric.dimension;
        match p {
            Some(p) => ExponentParam::new(n, p).map_err(|e| bad("yamabe.p", e)),
            None => Ok(ExponentParam::critical(n)),
        }
    }

    pub fn schedule(&self) -> Result<Vec<ExponentParam>, Failure> {
        let n = self.metric.dimension;
        match &self.yamabe.schedule {
            Some(list) => {
                let out = list
                    .iter()
                    .map(|p| ExponentParam::new(n, *p))
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(|e| bad("yamabe.schedule", e))?;
                match out.last() {
                    Some(last) if last.is_critical() => {}
                    _ => return Err(bad("yamabe.schedule", "must end at the critical exponent")),
                }
                if out.windows(2).any(|w| w[1].value() <= w[0].value()) {
                    return Err(bad("yamabe.schedule", "must be increasing"));
                }
                Ok(out)
            }
            None => default_schedule(n, self.yamabe.p0, self.yamabe.stages).map_err(|e| bad("yamabe.p0", e)),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            residual_tol: self.yamabe.residual_tol,
            normalization_tol: self.yamabe.normalization_tol,
            max_iterations: self.yamabe.max_iterations,
            ..SolverOptions::default()
        }
    }

    /// `(dt, save_every)` for a flow starting at `metric`.
    pub fn flow_plan(&self, metric: &Metric) -> Result<(f64, usize), Failure> {
        let f = &self.flow;
        match f.dt {
            Some(dt) => {
                let steps = (f.t_end / dt).round();
                if steps < 1.0 || (steps * dt - f.t_end).abs() > 1e-9 * f.t_end {
                    return Err(bad("flow.dt", format!("t_end = {} is not a multiple of {dt}", f.t_end)));
                }
                let save_every = f
                    .save_every
                    .unwrap_or(((steps as usize) / f.samples).max(1));
                Ok((dt, save_every))
            }
            None => {
                let max_dt = match metric {
                    Metric::Warped(w) => flow::cfl_time_step(w),
                    Metric::Homogeneous(_) => HOMOGENEOUS_MAX_DT,
                };
                let (dt, every) = flow::plan_steps(f.t_end, max_dt, f.samples).map_err(|e| bad("flow", e))?;
                match f.save_every {
                    Some(s) => Ok((dt, s)),
                    None => Ok((dt, every)),
                }
            }
        }
    }
}

/// `bumpy-<k>-<eps>`
fn parse_bumpy(name: &str) -> Option<(u32, f64)> {
    let rest = name.strip_prefix("bumpy-")?;
    let (k, eps) = rest.split_once('-')?;
    Some((k.parse().ok()?, eps.parse().ok()?))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

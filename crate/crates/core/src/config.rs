//! Strict TOML run configuration. Physical parameters have no defaults;
//! numerical settings default to the values documented on each field.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evans::EvansOptions;
use crate::model::{builtin_jin_xin_1d, builtin_jin_xin_2d, RelaxationSystem, ScalarMap};
use crate::profile::ProfileOptions;
use crate::sim2d::{ExperimentConfig, SimModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub endpoints: Endpoints,
    pub stages: StageSelection,
    #[serde(default)]
    pub hypotheses: HypothesesConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub enskog: EnskogConfig,
    #[serde(default)]
    pub evans: EvansConfig,
    #[serde(default)]
    pub front: FrontConfig,
    pub simulate: Option<ExperimentConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Jin–Xin family; `f1`, `f2` are polynomial coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub a: f64,
    pub b: Option<f64>,
    pub tau: f64,
    pub f1: Vec<f64>,
    pub f2: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub u_minus: f64,
    pub u_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSelection {
    #[serde(default)]
    pub hypotheses: bool,
    #[serde(default)]
    pub profile: bool,
    #[serde(default)]
    pub enskog: bool,
    #[serde(default)]
    pub evans: bool,
    #[serde(default)]
    pub front: bool,
    #[serde(default)]
    pub simulate: bool,
    /// Stages whose failure does not affect the exit code.
    #[serde(default)]
    pub optional: Vec<String>,
}

pub const STAGES: [&str; 6] = ["hypotheses", "profile", "enskog", "evans", "front", "simulate"];

impl StageSelection {
    pub fn selected(&self, name: &str) -> bool {
        match name {
            "hypotheses" => self.hypotheses,
            "profile" => self.profile,
            "enskog" => self.enskog,
            "evans" => self.evans,
            "front" => self.front,
            "simulate" => self.simulate,
            _ => false,
        }
    }

    pub fn only(name: &str) -> Self {
        let mut s = Self {
            hypotheses: false,
            profile: false,
            enskog: false,
            evans: false,
            front: false,
            simulate: false,
            optional: Vec::new(),
        };
        match name {
            "hypotheses" => s.hypotheses = true,
            "profile" => s.profile = true,
            "enskog" => s.enskog = true,
            "evans" => s.evans = true,
            "front" => s.front = true,
            "simulate" => s.simulate = true,
            _ => {}
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesesConfig {
    /// Directions of the ξ sampling (32).
    pub xi_directions: usize,
    /// Log-spaced radii in `[1e−3, 1e3]` per direction (40).
    pub xi_radii: usize,
    /// Directions for the coupling and Kawashima checks (16).
    pub coupling_directions: usize,
    /// Nelder–Mead restarts per direction (20).
    pub kawashima_restarts: usize,
}

impl Default for HypothesesConfig {
    fn default() -> Self {
        Self { xi_directions: 32, xi_radii: 40, coupling_directions: 16, kawashima_restarts: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Grid half-width (90).
    pub half_width: f64,
    /// Collocation intervals (1800).
    pub intervals: usize,
    /// Small-amplitude guard factor; off unless set (the hypotheses are checked directly).
    pub amplitude_guard: Option<f64>,
    /// Newton tolerance (1e−12).
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Required residual for a passing stage (1e−9).
    pub residual_tolerance: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            half_width: 90.0,
            intervals: 1800,
            amplitude_guard: None,
            newton_tol: 1e-12,
            max_newton: 40,
            residual_tolerance: 1e-9,
        }
    }
}

impl ProfileConfig {
    pub fn options(&self) -> ProfileOptions {
        ProfileOptions {
            amplitude_guard: self.amplitude_guard,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnskogConfig {
    /// Evaluation point; `u₊` when unset.
    pub point: Option<f64>,
    /// Fit radii (`1e−2·2^−k`, k = 0..6) when unset.
    pub radii: Option<Vec<f64>>,
}

impl Default for EnskogConfig {
    fn default() -> Self {
        Self { point: None, radii: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourConfig {
    /// Only `half_annulus` is supported.
    pub shape: String,
    /// Inner radius (1e−2).
    pub radius_min: f64,
    /// Outer radius (10).
    pub radius_max: f64,
    /// Left offset of the straight sides, `Re λ ≥ −η` (1e−4).
    pub eta: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { shape: "half_annulus".into(), radius_min: 1e-2, radius_max: 10.0, eta: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansConfig {
    /// Magnus step (0.05).
    pub step: f64,
    pub truncation: Option<f64>,
    /// Profile tail deviation at ±L (1e−10).
    pub tail_tolerance: f64,
    /// Projector steps per continuation ray (32).
    pub transport_steps: usize,
    pub contour: ContourConfig,
    /// Transverse frequencies of the winding checks ([0, 0.05, 0.1]).
    pub xi: Vec<f64>,
    /// Radius of the circle around the origin (1e−3).
    pub small_circle_radius: f64,
    /// Cauchy radius and node count for dD/dλ(0) (1e−3, 64).
    pub derivative_radius: f64,
    pub derivative_nodes: usize,
    /// Track λ*(ξ̃) and fit the low-frequency expansion (true).
    pub lambda_star: bool,
    /// Evaluate the resolvent diagnostics (true).
    pub resolvent: bool,
    /// Phase-step threshold and refinement budget for the winding count.
    pub max_phase_step: f64,
    pub max_rounds: usize,
}

impl EvansConfig {
    pub fn options(&self) -> EvansOptions {
        EvansOptions {
            step: self.step,
            truncation: self.truncation,
            tail_tolerance: self.tail_tolerance,
            transport_steps: self.transport_steps,
        }
    }
}

impl Default for EvansConfig {
    fn default() -> Self {
        let o = EvansOptions::default();
        Self {
            step: o.step,
            truncation: o.truncation,
            tail_tolerance: o.tail_tolerance,
            transport_steps: o.transport_steps,
            contour: ContourConfig::default(),
            xi: vec![0.0, 0.05, 0.1],
            small_circle_radius: 1e-3,
            derivative_radius: 1e-3,
            derivative_nodes: 64,
            lambda_star: true,
            resolvent: true,
            max_phase_step: std::f64::consts::FRAC_PI_4,
            max_rounds: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontConfig {
    /// Transverse period (2048) and points (8192).
    pub width: f64,
    pub points: usize,
    /// Width of the Gaussian initial front (1).
    pub sigma0: f64,
    /// Decay sample times: geometric from `t_start` to `t_end` (10 … 1000, 21).
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Mollifier radii for the ε-linearity check ([0.5, 1]).
    pub epsilons: Vec<f64>,
    /// Time of the ε-linearity check (100).
    pub ratio_time: f64,
    pub kernel: Option<KernelGridConfig>,
}

impl Default for FrontConfig {
    fn default() -> Self {
        Self {
            width: 2048.0,
            points: 8192,
            sigma0: 1.0,
            t_start: 10.0,
            t_end: 1000.0,
            samples: 21,
            epsilons: vec![0.5, 1.0],
            ratio_time: 100.0,
            kernel: None,
        }
    }
}

/// Kernel evaluation grid: `x₁ × x₂` at each time for a source at `(y1, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGridConfig {
    pub times: Vec<f64>,
    pub y1: f64,
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub seed: u64,
    /// Write binary frames at every `frame_stride`-th simulate sample.
    pub dump_frames: bool,
    pub frame_stride: usize,
    /// Also run the simulation at half resolution and report the exponent change.
    pub convergence: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), seed: 0, dump_frames: false, frame_stride: 10, convergence: false }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.endpoints;
        if !(e.u_minus.is_finite() && e.u_plus.is_finite()) {
            return Err(Error::Config("endpoints: u_minus and u_plus must be finite".into()));
        }
        if e.u_minus == e.u_plus {
            return Err(Error::Config("endpoints: u_minus equals u_plus, there is no shock".into()));
        }
        match self.model.name.as_str() {
            "jin_xin_1d" => {
                if self.model.b.is_some() || self.model.f2.is_some() {
                    return Err(Error::Config("model: jin_xin_1d takes no b or f2".into()));
                }
            }
            "jin_xin_2d" => {
                if self.model.b.is_none() || self.model.f2.is_none() {
                    return Err(Error::Config("model: jin_xin_2d requires b and f2".into()));
                }
            }
            other => return Err(Error::Config(format!("model.name: unknown system `{other}`"))),
        }
        if self.model.f1.is_empty() {
            return Err(Error::Config("model.f1: empty coefficient list".into()));
        }
        for name in &self.stages.optional {
            if !STAGES.contains(&name.as_str()) {
                return Err(Error::Config(format!("stages.optional: unknown stage `{name}`")));
            }
        }
        if self.evans.contour.shape != "half_annulus" {
            return Err(Error::Config(format!("evans.contour.shape: unsupported `{}`", self.evans.contour.shape)));
        }
        if self.stages.simulate && self.simulate.is_none() {
            return Err(Error::Config("simulate: stage selected but the [simulate] table is missing".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<RelaxationSystem> {
        let m = &self.model;
        let f1 = ScalarMap::polynomial(&m.f1);
        match m.name.as_str() {
            "jin_xin_1d" => builtin_jin_xin_1d(m.a, f1, m.tau),
            _ => builtin_jin_xin_2d(m.a, m.b.unwrap_or(1.0), f1, ScalarMap::polynomial(m.f2.as_deref().unwrap_or(&[])), m.tau),
        }
    }

    pub fn sim_model(&self) -> Result<SimModel> {
        let m = &self.model;
        match (m.name.as_str(), m.b, &m.f2) {
            ("jin_xin_2d", Some(b), Some(f2)) => Ok(SimModel {
                a: m.a,
                b,
                f1: ScalarMap::polynomial(&m.f1),
                f2: ScalarMap::polynomial(f2),
                tau: m.tau,
            }),
            _ => Err(Error::Config("simulate: needs the jin_xin_2d model".into())),
        }
    }

    /// SHA-256 of the canonical JSON serialization, excluding the output table.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig { seed: self.output.seed, ..OutputConfig::default() };
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

//! JSON diagnostics for a filtering run.
//!
//! Schema (all numbers finite):
//!
//! ```text
//! {
//!   "config": {
//!     "model": "eed" | "constant" | "homogeneous",
//!     "sigma": number | null, "lambda": number | null,
//!     "diffusivity": "pm" | "charbonnier" | "wexp" | null,
//!     "tensor": {"a": number, "b": number, "c": number} | null,
//!     "alpha": number, "gamma": number, "steps": integer,
//!     "tau": "auto-theorem" | "auto-gershgorin" | number,
//!     "backend": "stencil" | "convform", "threads": integer
//!   },
//!   "bounds": {"theorem": number, "gershgorin": number},
//!   "initial": {"norm": number, "mean": number},
//!   "steps": [{"tau": number, "norm": number, "mean": number, "ms": number}, ...]
//! }
//! ```
//!
//! `bounds` holds the largest value of each bound over all steps.

use serde::{Deserialize, Serialize};

use crate::diffusivity::DiffusivityKind;
use crate::schemes::{Backend, RunTrace, SchemeConfig, TensorModel, TimeStep};
use crate::tensor::DiffusionTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Eed,
    Constant,
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSetting {
    Mode(TauMode),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauMode {
    #[serde(rename = "auto-theorem")]
    AutoTheorem,
    #[serde(rename = "auto-gershgorin")]
    AutoGershgorin,
}

impl From<TimeStep> for TauSetting {
    fn from(t: TimeStep) -> Self {
        match t {
            TimeStep::Fixed(v) => TauSetting::Fixed(v),
            TimeStep::AutoTheorem => TauSetting::Mode(TauMode::AutoTheorem),
            TimeStep::AutoGershgorin => TauSetting::Mode(TauMode::AutoGershgorin),
        }
    }
}

fn kind_name(kind: DiffusivityKind) -> &'static str {
    match kind {
        DiffusivityKind::PeronaMalik => "pm",
        DiffusivityKind::Charbonnier => "charbonnier",
        DiffusivityKind::Wexp => "wexp",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub model: ModelName,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub diffusivity: Option<String>,
    pub tensor: Option<DiffusionTensor>,
    pub alpha: f64,
    pub gamma: f64,
    pub steps: usize,
    pub tau: TauSetting,
    pub backend: Backend,
    pub threads: usize,
}

impl ConfigSummary {
    pub fn new(cfg: &SchemeConfig, threads: usize) -> Self {
        let (model, sigma, lambda, diffusivity, tensor) = match cfg.model {
            TensorModel::Eed { sigma, diffusivity } => (
                ModelName::Eed,
                Some(sigma),
                Some(diffusivity.lambda()),
                Some(kind_name(diffusivity.kind()).to_string()),
                None,
            ),
            TensorModel::Constant(t) if t == DiffusionTensor::IDENTITY => {
                (ModelName::Homogeneous, None, None, None, Some(t))
            }
            TensorModel::Constant(t) => (ModelName::Constant, None, None, None, Some(t)),
        };
        Self {
            model,
            sigma,
            lambda,
            diffusivity,
            tensor,
            alpha: cfg.params.alpha(),
            gamma: cfg.params.gamma(),
            steps: cfg.steps,
            tau: cfg.tau.into(),
            backend: cfg.backend,
            threads,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub theorem: f64,
    pub gershgorin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub norm: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub tau: f64,
    pub norm: f64,
    pub mean: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub config: ConfigSummary,
    pub bounds: Bounds,
    pub initial: InitialState,
    pub steps: Vec<StepEntry>,
}

impl DiagnosticsReport {
    pub fn new(cfg: &SchemeConfig, threads: usize, trace: &RunTrace) -> Self {
        Self {
            config: ConfigSummary::new(cfg, threads),
            bounds: Bounds {
                theorem: trace.max_theorem_bound(),
                gershgorin: trace.max_gershgorin_bound(),
            },
            initial: InitialState {
                norm: trace.initial_norm,
                mean: trace.initial_mean,
            },
            steps: trace
                .steps
                .iter()
                .map(|s| StepEntry {
                    tau: s.tau,
                    norm: s.norm,
                    mean: s.mean,
                    ms: s.elapsed_ms,
                })
                .collect(),
        }
    }

    /// Every number in the report is finite.
    pub fn is_finite(&self) -> bool {
        let c = &self.config;
        let opt = |v: Option<f64>| v.is_none_or(f64::is_finite);
        let tau_ok = match c.tau {
            TauSetting::Fixed(v) => v.is_finite(),
            TauSetting::Mode(_) => true,
        };
        let tensor_ok = c
            .tensor
            .is_none_or(|t| t.a.is_finite() && t.b.is_finite() && t.c.is_finite());
        opt(c.sigma)
            && opt(c.lambda)
            && tau_ok
            && tensor_ok
            && c.alpha.is_finite()
            && c.gamma.is_finite()
            && self.bounds.theorem.is_finite()
            && self.bounds.gershgorin.is_finite()
            && self.initial.norm.is_finite()
            && self.initial.mean.is_finite()
            && self.steps.iter().all(|s| {
                s.tau.is_finite() && s.norm.is_finite() && s.mean.is_finite() && s.ms.is_finite()
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
